#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "styleprof/agreement.hpp"
#include "styleprof/error.hpp"
#include "styleprof/random.hpp"
#include "test_support.hpp"

using namespace styleprof;
using namespace styleprof::corpus;

namespace {

std::vector<bool> random_votes(Rng& rng, std::size_t n) {
    std::vector<bool> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = rng.bernoulli(0.5);
    return v;
}

Record record_with(std::string id, const PerCharacteristic<std::vector<bool>>& votes) {
    Record r;
    r.utterance.id = id;
    r.utterance.text = "text " + id;
    r.annotation.utterance_id = id;
    r.annotation.votes = votes;
    return r;
}

Corpus random_corpus(Rng& rng, std::size_t n) {
    std::vector<Record> recs;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t k = 1 + rng.uniform_index(5);
        PerCharacteristic<std::vector<bool>> votes;
        for (auto c : kAllCharacteristics) {
            votes[c] = rng.bernoulli(0.4) ? std::vector<bool>(k, rng.bernoulli(0.5)) : random_votes(rng, k);
        }
        recs.push_back(record_with("r" + std::to_string(i), votes));
    }
    return Corpus::from_records(recs);
}

}  // namespace

TEST_CASE("majority vote and difficulty, hand cases") {
    CHECK(agreement::majority_vote({true, false, true}));
    CHECK_FALSE(agreement::majority_vote({false, false, false}));
    CHECK_THROWS_AS(agreement::majority_vote({true, false}), Error);
    CHECK_THROWS_AS(agreement::majority_vote({}), Error);
    CHECK(agreement::difficulty_of({true, true, false}) == Difficulty::Difficult);
    CHECK(agreement::difficulty_of({true, false, false}) == Difficulty::Easy);
}

TEST_CASE("majority vote and difficulty against counting oracles") {
    Rng rng(101);
    for (int i = 0; i < 10000; ++i) {
        const std::size_t n = 2 * rng.uniform_index(4) + 1;
        auto v = random_votes(rng, n);
        const auto yes = static_cast<std::size_t>(std::count(v.begin(), v.end(), true));
        CHECK(agreement::majority_vote(v) == (2 * yes > n));
        CHECK(agreement::difficulty_of(v) == (yes >= 2 ? Difficulty::Difficult : Difficulty::Easy));
        // permutation invariance and monotonicity
        auto shuffled = v;
        std::vector<char> tmp(shuffled.begin(), shuffled.end());
        rng.shuffle(std::span<char>(tmp));
        shuffled.assign(tmp.begin(), tmp.end());
        CHECK(agreement::majority_vote(shuffled) == agreement::majority_vote(v));
        if (agreement::difficulty_of(v) == Difficulty::Difficult) {
            auto more = v;
            more.push_back(true);
            CHECK(agreement::difficulty_of(more) == Difficulty::Difficult);
        }
    }
}

TEST_CASE("perfect agreement on small hand corpora") {
    PerCharacteristic<std::vector<bool>> same, split;
    for (auto c : kAllCharacteristics) {
        same[c] = {true, true, true};
        split[c] = {true, false, true};
    }
    const auto c = Corpus::from_records(
        {record_with("a", same), record_with("b", same), record_with("c", split), record_with("d", split)});
    const auto report = agreement::perfect_agreement(c);
    CHECK(report.n_instances == 4);
    for (auto ch : kAllCharacteristics) {
        CHECK(*report.perfect_agreement_rate[ch] == 50.0);
        CHECK(report.disagreement_ids[ch] == std::vector<std::string>{"c", "d"});
    }
    const auto all_same = agreement::perfect_agreement(Corpus::from_records({record_with("a", same)}));
    for (auto ch : kAllCharacteristics) CHECK(*all_same.perfect_agreement_rate[ch] == 100.0);
    CHECK(agreement::disagreement_report(Corpus::from_records({record_with("a", same)}), Characteristic::Emotionality)
              .empty());
    CHECK(agreement::disagreement_report(c, Characteristic::Emotionality).size() == 2);
    const auto empty = agreement::perfect_agreement(Corpus{});
    CHECK_FALSE(empty.perfect_agreement_rate[Characteristic::Emotionality].has_value());
}

TEST_CASE("perfect agreement against a counting oracle") {
    Rng rng(202);
    const auto corpus = random_corpus(rng, 10000);
    const auto report = agreement::perfect_agreement(corpus);
    std::size_t eligible = 0, excluded = 0;
    PerCharacteristic<std::size_t> unanimous{};
    PerCharacteristic<std::set<std::string>> split_ids;
    for (const auto& r : corpus.records()) {
        if (r.annotation.annotator_count() < 2) {
            ++excluded;
            continue;
        }
        ++eligible;
        for (auto c : kAllCharacteristics) {
            const auto& v = r.annotation.votes[c];
            const auto yes = std::count(v.begin(), v.end(), true);
            if (yes == 0 || static_cast<std::size_t>(yes) == v.size()) {
                ++unanimous[c];
            } else {
                split_ids[c].insert(r.id());
            }
        }
    }
    CHECK(report.n_instances == eligible);
    CHECK(report.n_excluded == excluded);
    for (auto c : kAllCharacteristics) {
        CHECK(*report.perfect_agreement_rate[c] == 100.0 * static_cast<double>(unanimous[c]) / static_cast<double>(eligible));
        CHECK(std::set<std::string>(report.disagreement_ids[c].begin(), report.disagreement_ids[c].end()) ==
              split_ids[c]);
        CHECK(*report.perfect_agreement_rate[c] ==
              doctest::Approx(100.0 - 100.0 * static_cast<double>(report.disagreement_ids[c].size()) /
                                          static_cast<double>(eligible)));
    }
}

TEST_CASE("disagreement report complements the unanimous set") {
    Rng rng(303);
    const auto corpus = random_corpus(rng, 500);
    for (auto c : kAllCharacteristics) {
        std::set<std::string> listed;
        for (const auto& d : agreement::disagreement_report(corpus, c)) listed.insert(d.utterance_id);
        for (const auto& r : corpus.records()) {
            if (r.annotation.annotator_count() < 2) {
                CHECK(listed.count(r.id()) == 0);
                continue;
            }
            CHECK((listed.count(r.id()) == 1) != agreement::is_unanimous(r.annotation.votes[c]));
        }
    }
}

TEST_CASE("agreement fixture reproduces the reference profile") {
    const auto corpus = dedupe_by_author(import_jsonl(testing::fixture("agreement_100.jsonl")));
    const auto report = agreement::perfect_agreement(corpus);
    CHECK(report.n_instances == 100);
    CHECK(*report.perfect_agreement_rate[Characteristic::Emotionality] == 53.0);
    CHECK(*report.perfect_agreement_rate[Characteristic::FactOriented] == 52.0);
    CHECK(*report.perfect_agreement_rate[Characteristic::SelfRevealing] == 63.0);
    CHECK(*report.perfect_agreement_rate[Characteristic::ActionSeeking] == 73.0);
    CHECK(*report.perfect_agreement_rate[Characteristic::InformationSeeking] == 80.0);
    const auto text = agreement::report_to_text(report);
    CHECK(text.find("53.0%") != std::string::npos);
    const auto j = nlohmann::json::parse(agreement::report_to_json(report));
    CHECK(j["perfect_agreement_rate"]["information_seeking"] == 80.0);
}

TEST_CASE("difficulty fixture splits 482 / 518") {
    const auto corpus = import_jsonl(testing::fixture("difficulty_1000.jsonl"));
    std::size_t easy = 0, difficult = 0, oracle_difficult = 0;
    for (const auto& r : corpus.records()) {
        const auto& v = *r.annotation.difficulty_votes;
        (agreement::difficulty_of(v) == Difficulty::Easy ? easy : difficult)++;
        oracle_difficult += std::count(v.begin(), v.end(), true) >= 2;
    }
    CHECK(easy == 482);
    CHECK(difficult == 518);
    CHECK(oracle_difficult == 518);
}

TEST_CASE("fleiss kappa against the textbook formula") {
    Rng rng(404);
    std::vector<Record> recs;
    for (int i = 0; i < 300; ++i) {
        PerCharacteristic<std::vector<bool>> v;
        for (auto c : kAllCharacteristics) v[c] = random_votes(rng, 3);
        recs.push_back(record_with("k" + std::to_string(i), v));
    }
    const auto corpus = Corpus::from_records(recs);
    for (auto c : kAllCharacteristics) {
        double p_yes = 0.0, p_bar = 0.0;
        for (const auto& r : recs) {
            const auto& v = r.annotation.votes[c];
            const double yes = static_cast<double>(std::count(v.begin(), v.end(), true));
            const double no = 3.0 - yes;
            p_yes += yes;
            p_bar += (yes * (yes - 1) + no * (no - 1)) / 6.0;
        }
        p_yes /= 900.0;
        p_bar /= 300.0;
        const double pe = p_yes * p_yes + (1 - p_yes) * (1 - p_yes);
        const double kappa = (p_bar - pe) / (1 - pe);
        CHECK(*agreement::fleiss_kappa(corpus, c) == doctest::Approx(kappa).epsilon(1e-12));
    }
}
