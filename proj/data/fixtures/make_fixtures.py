#!/usr/bin/env python3
"""Regenerates the JSONL test fixtures in this directory. Deterministic."""

import json
import random
from pathlib import Path

HERE = Path(__file__).resolve().parent
TASKS = ["emotionality", "fact_oriented", "self_revealing", "action_seeking", "information_seeking"]


def record(rid, text, votes, author=None, difficulty=None, source="fixture"):
    r = {"id": rid, "text": text}
    if author is not None:
        r["author_id"] = author
    r["source"] = source
    r["language"] = "en"
    r["votes"] = {t: votes[t] for t in TASKS}
    if difficulty is not None:
        r["difficulty_votes"] = difficulty
    return r


def write_jsonl(name, rows):
    with open(HERE / name, "w", encoding="utf-8") as f:
        for r in rows:
            f.write(json.dumps(r, ensure_ascii=False, separators=(",", ":")) + "\n")


def unanimous(value, n=3):
    return [value] * n


def tables_1_2():
    # Emotionality examples (clear no, clear yes, mixed) and one example per
    # communication style. Characteristics the examples do not illustrate are
    # voted no by everyone.
    rows = [
        ("t1-nonemotional", "I would prefer to buy this car since it is hybrid and cost effective.",
         {"emotionality": unanimous(False), "fact_oriented": unanimous(True)}),
        ("t1-emotional", "They offer a friendly service with great choice of drinks and stunning view!",
         {"emotionality": unanimous(True)}),
        ("t1-mixed", "You're looking at the newest member of our team. She is ready to tear it up!",
         {"emotionality": [True, True, False]}),
        ("t2-self-revealing", "My husband was also diagnosed with a lung cancer.",
         {"self_revealing": unanimous(True)}),
        ("t2-fact-oriented", "For this phone, battery lasts about 20 minutes but excellent for price.",
         {"fact_oriented": unanimous(True)}),
        ("t2-action-seeking", "Try contacting the customer service, here's the link.",
         {"action_seeking": unanimous(True)}),
        ("t2-information-seeking", "I would like to know if anyone would be interested in helping.",
         {"information_seeking": unanimous(True)}),
    ]
    out = []
    for i, (rid, text, given) in enumerate(rows):
        votes = {t: given.get(t, unanimous(False)) for t in TASKS}
        out.append(record(rid, text, votes, author=f"author-{i + 1}"))
    write_jsonl("tables_1_2.jsonl", out)


def agreement_100(rng):
    targets = {"emotionality": 53, "fact_oriented": 52, "self_revealing": 63,
               "action_seeking": 73, "information_seeking": 80}
    n = 100
    votes = [dict() for _ in range(n)]
    for t, k in targets.items():
        unanimous_ids = set(rng.sample(range(n), k))
        for i in range(n):
            if i in unanimous_ids:
                votes[i][t] = unanimous(rng.random() < 0.5)
            else:
                v = [rng.random() < 0.5 for _ in range(3)]
                if len(set(v)) == 1:
                    v[rng.randrange(3)] = not v[0]
                votes[i][t] = v
    out = [record(f"iaa-{i + 1:03d}", f"Annotated utterance number {i + 1}.", votes[i], author=f"iaa-author-{i + 1}")
           for i in range(n)]
    write_jsonl("agreement_100.jsonl", out)


def difficulty_1000(rng):
    n_easy, n_difficult = 482, 518
    kinds = ["easy"] * n_easy + ["difficult"] * n_difficult
    rng.shuffle(kinds)
    out = []
    for i, kind in enumerate(kinds):
        if kind == "easy":
            marks = rng.choice([0, 1])
        else:
            marks = rng.choice([2, 3])
        flags = [True] * marks + [False] * (3 - marks)
        rng.shuffle(flags)
        votes = {t: unanimous(rng.random() < 0.5) for t in TASKS}
        if rng.random() < 0.5:
            votes["emotionality"] = [True, True, False]
        out.append(record(f"add-{i + 1:04d}", f"Additional test utterance {i + 1}.", votes,
                          author=f"add-author-{i + 1}", difficulty=flags))
    write_jsonl("difficulty_1000.jsonl", out)


def conversations_50(rng):
    markers = json.loads((HERE.parent / "markers_v1.json").read_text())
    pools = markers["markers"]
    filler = markers["filler"]

    def fill(template):
        return template.replace("{n}", str(rng.randint(2, 99)))

    def user_text():
        parts = [fill(rng.choice(pools[t])) for t in TASKS if rng.random() < 0.4]
        if not parts:
            parts = [rng.choice(filler)]
        return " ".join(parts)

    agent_bits = [
        "I am sorry to hear that, your situation sounds hard.",
        "We recommend the premium plan and can offer a discount.",
        "The battery lasts about 12 hours.",
        "What a wonderful surprise!",
        "Let me check that for you.",
        "Our team will contact you tomorrow and we guarantee a reply.",
        "The store is located near the station.",
    ]
    closings = {
        "satisfied": ["Thanks, that helps a lot.", "Thank you so much!", "Great, thanks."],
        "dissatisfied": ["This is useless and terrible!", "What an awful answer!", "This is ridiculous!"],
        "neutral": ["Okay.", "I see.", "Fine, noted."],
    }
    out = []
    for i in range(50):
        turns = []
        if rng.random() < 0.1:
            turns.append({"speaker": "agent", "text": "Hello, how can I help?"})
        for _ in range(rng.randint(1, 3)):
            turns.append({"speaker": "user", "text": user_text()})
            if rng.random() < 0.9:
                k = rng.randint(1, 3)
                turns.append({"speaker": "agent", "text": " ".join(rng.sample(agent_bits, k))})
                if rng.random() < 0.15:
                    turns.append({"speaker": "agent", "text": rng.choice(agent_bits)})
        satisfaction = rng.choice(["satisfied", "neutral", "dissatisfied", None])
        if satisfaction is not None:
            turns.append({"speaker": "user", "text": rng.choice(closings[satisfaction])})
        out.append({"id": f"conv-{i + 1:02d}", "turns": turns, "satisfaction": satisfaction})
    write_jsonl("conversations_50.jsonl", out)


def main():
    tables_1_2()
    agreement_100(random.Random(20210101))
    difficulty_1000(random.Random(20210102))
    conversations_50(random.Random(20210103))


if __name__ == "__main__":
    main()
