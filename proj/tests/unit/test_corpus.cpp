#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>

#include "styleprof/corpus.hpp"
#include "styleprof/error.hpp"
#include "styleprof/random.hpp"
#include "styleprof/synthetic.hpp"
#include "test_support.hpp"

using namespace styleprof;
using namespace styleprof::corpus;

namespace {

Record make_record(std::string id, std::string text, std::vector<bool> votes_all,
                   std::optional<std::string> author = std::nullopt) {
    Record r;
    r.utterance.id = std::move(id);
    r.utterance.text = std::move(text);
    r.utterance.author_id = std::move(author);
    r.annotation.utterance_id = r.utterance.id;
    for (auto c : kAllCharacteristics) r.annotation.votes[c] = votes_all;
    return r;
}

std::string line_for(const std::string& id, const std::string& votes = "[true,true,true]") {
    std::string v = "{";
    for (auto c : kAllCharacteristics) {
        if (v.size() > 1) v += ",";
        v += "\"" + std::string(wire_name(c)) + "\":" + votes;
    }
    v += "}";
    return R"({"id":")" + id + R"(","text":"text )" + id + R"(","votes":)" + v + "}";
}

Error capture(auto fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e;
    }
    FAIL("expected an error");
    return Error(ErrorCode::Io, "unreachable");
}

}  // namespace

TEST_CASE("import: valid lines, round trip") {
    const std::string content = line_for("a1") + "\n" + line_for("a2") + "\n" + line_for("a3") + "\n";
    const auto c = parse_jsonl(content);
    CHECK(c.size() == 3);
    const auto exported = export_jsonl(c);
    CHECK(export_jsonl(parse_jsonl(exported)) == exported);
    CHECK(parse_jsonl(exported).records() == c.records());
}

TEST_CASE("import errors") {
    SUBCASE("duplicate id names the id") {
        const auto e = capture([] { parse_jsonl(line_for("a1") + "\n" + line_for("a1") + "\n"); });
        CHECK(e.code() == ErrorCode::Conflict);
        CHECK(std::string(e.what()).find("a1") != std::string::npos);
        CHECK(e.line() == 2);
    }
    SUBCASE("malformed JSON has its line number") {
        const auto e = capture([] { parse_jsonl(line_for("a1") + "\n\n{\"id\": \n"); });
        CHECK(e.code() == ErrorCode::Parse);
        CHECK(e.line() == 3);
    }
    SUBCASE("unequal vote arrays") {
        std::string bad = line_for("a1");
        const auto pos = bad.find("[true,true,true]");
        bad.replace(pos, 16, "[true,true]");
        const auto e = capture([&] { parse_jsonl(bad); });
        CHECK(e.code() == ErrorCode::Schema);
        CHECK(e.line() == 1);
    }
    SUBCASE("missing votes are allowed only for queues") {
        const std::string line = R"({"id":"q1","text":"hello"})";
        CHECK(capture([&] { parse_jsonl(line); }).code() == ErrorCode::Schema);
        ParseOptions opts;
        opts.allow_unannotated = true;
        CHECK(parse_jsonl(line, opts).size() == 1);
    }
}

TEST_CASE("tables 1-2 fixture gives seven gold instances") {
    const auto c = import_jsonl(testing::fixture("tables_1_2.jsonl"));
    CHECK(c.size() == 7);
    const auto gold = derive_gold(c, GoldPolicy::PerfectOnly);
    CHECK(gold.size() == 7);
    const auto it = std::find_if(gold.begin(), gold.end(),
                                 [](const GoldInstance& g) { return g.utterance_id == "t2-action-seeking"; });
    REQUIRE(it != gold.end());
    CHECK(it->labels[Characteristic::ActionSeeking] == true);
    CHECK(c.find("t2-action-seeking")->utterance.text == "Try contacting the customer service, here's the link.");
    const auto mixed = std::find_if(gold.begin(), gold.end(),
                                    [](const GoldInstance& g) { return g.utterance_id == "t1-mixed"; });
    CHECK_FALSE(mixed->labels[Characteristic::Emotionality].has_value());
}

TEST_CASE("dedupe by author") {
    SUBCASE("two posts by one author keep the first id") {
        const auto c = Corpus::from_records({make_record("b2", "x", {true}, "u7"), make_record("b1", "y", {true}, "u7"),
                                             make_record("c", "z", {true}, "u8")});
        const auto d = dedupe_by_author(c);
        REQUIRE(d.size() == 2);
        CHECK(d.records()[0].id() == "b1");
        CHECK(d.records()[1].id() == "c");
    }
    SUBCASE("distinct authors unchanged") {
        const auto c = Corpus::from_records({make_record("a", "x", {true}, "u1"), make_record("b", "y", {true}, "u2")});
        CHECK(dedupe_by_author(c).records() == c.records());
    }
    SUBCASE("random corpus against a recount") {
        Rng rng(9);
        std::vector<Record> recs;
        std::size_t no_author = 0;
        std::map<std::string, std::string> first_id;
        for (int i = 0; i < 1000; ++i) {
            const std::string id = "r" + std::to_string(rng.uniform_index(1000000)) + "-" + std::to_string(i);
            std::optional<std::string> author;
            if (rng.bernoulli(0.9)) {
                author = "u" + std::to_string(rng.uniform_index(100));
                auto [it, fresh] = first_id.emplace(*author, id);
                if (!fresh && id < it->second) it->second = id;
            } else {
                ++no_author;
            }
            recs.push_back(make_record(id, "t", {true}, author));
        }
        const auto d = dedupe_by_author(Corpus::from_records(recs));
        CHECK(d.size() == first_id.size() + no_author);
        for (const auto& [author, id] : first_id) CHECK(d.find(id) != nullptr);
    }
}

TEST_CASE("gold derivation") {
    const auto c = Corpus::from_records({make_record("u", "x", {true, true, true}), make_record("s", "y", {true, false, true})});
    const auto perfect = derive_gold(c, GoldPolicy::PerfectOnly);
    REQUIRE(perfect.size() == 1);
    CHECK(perfect[0].labels[Characteristic::Emotionality] == true);
    CHECK(perfect[0].agreement[Characteristic::Emotionality] == Agreement::Perfect);
    const auto majority = derive_gold(c, GoldPolicy::MajorityAll);
    REQUIRE(majority.size() == 2);
    CHECK(majority[1].labels[Characteristic::Emotionality] == true);
    CHECK(majority[1].agreement[Characteristic::Emotionality] == Agreement::Majority);

    SUBCASE("500 unanimous + 500 split") {
        std::vector<Record> recs;
        for (int i = 0; i < 1000; ++i) {
            recs.push_back(make_record("i" + std::to_string(i), "t",
                                       i < 500 ? std::vector<bool>{false, false, false} : std::vector<bool>{true, false, false}));
        }
        const auto corpus = Corpus::from_records(recs);
        CHECK(derive_gold(corpus, GoldPolicy::PerfectOnly).size() == 500);
        CHECK(derive_gold(corpus, GoldPolicy::MajorityAll).size() == 1000);
    }
    SUBCASE("even tie under majority") {
        const auto even = Corpus::from_records({make_record("e", "x", {true, false})});
        CHECK(capture([&] { derive_gold(even, GoldPolicy::MajorityAll); }).code() == ErrorCode::Resolution);
        CHECK(derive_gold(even, GoldPolicy::PerfectOnly).empty());
    }
}

TEST_CASE("stratified split") {
    std::vector<bool> labels;
    for (int i = 0; i < 100; ++i) labels.push_back(i < 80);
    const auto s = stratified_split_indices(labels, 10, 5);
    std::size_t yes = 0;
    for (auto i : s.test) yes += labels[i];
    CHECK(s.test.size() == 10);
    CHECK(yes == 8);
    CHECK(s.train.size() == 90);
    std::set<std::size_t> all(s.train.begin(), s.train.end());
    all.insert(s.test.begin(), s.test.end());
    CHECK(all.size() == 100);
    CHECK(std::is_sorted(s.test.begin(), s.test.end()));

    const auto again = stratified_split_indices(labels, 10, 5);
    CHECK(again.test == s.test);
    CHECK(again.train == s.train);
    CHECK(stratified_split_indices(labels, 10, 6).test != s.test);

    SUBCASE("a missing class") {
        std::vector<bool> one(20, true);
        CHECK(capture([&] { stratified_split_indices(one, 5, 1); }).code() == ErrorCode::Stratification);
    }
    SUBCASE("pool shaped like the emotionality partition") {
        std::vector<bool> pool;
        pool.insert(pool.end(), 6557 + 496, false);
        pool.insert(pool.end(), 6538 + 504, true);
        const auto t = stratified_split_indices(pool, 1000, 1);
        std::size_t y = 0;
        for (auto i : t.test) y += pool[i];
        CHECK(t.test.size() == 1000);
        CHECK(y >= 495);
        CHECK(y <= 505);
    }
}

TEST_CASE("dataset stats") {
    std::vector<GoldInstance> three(3);
    for (auto& g : three) g.labels[Characteristic::Emotionality] = true;
    const auto s = dataset_stats(three);
    CHECK(s.counts[Characteristic::Emotionality] == ClassCount{0, 3});
    CHECK(s.counts[Characteristic::FactOriented] == ClassCount{0, 0});
    CHECK(std::find(s.empty_characteristics.begin(), s.empty_characteristics.end(), Characteristic::FactOriented) !=
          s.empty_characteristics.end());

    Rng rng(4);
    std::vector<GoldInstance> random(200);
    PerCharacteristic<ClassCount> oracle;
    for (auto& g : random) {
        for (auto c : kAllCharacteristics) {
            const auto r = rng.uniform_index(3);
            if (r == 2) continue;
            g.labels[c] = r == 1;
            (r == 1 ? oracle[c].yes : oracle[c].no)++;
        }
    }
    CHECK(dataset_stats(random).counts == oracle);
}

TEST_CASE("gold rows round trip") {
    const auto c = import_jsonl(testing::fixture("difficulty_1000.jsonl"));
    const auto rows = join_text(c, derive_gold(c, GoldPolicy::MajorityAll), PartitionName::AdditionalTest);
    const auto text = export_gold_jsonl(rows);
    const auto back = parse_gold_jsonl(text);
    REQUIRE(back.size() == rows.size());
    CHECK(export_gold_jsonl(back) == text);
    CHECK(back[0].partition == PartitionName::AdditionalTest);
    const auto items = labeled_for(back, Characteristic::Emotionality);
    CHECK(items.size() == 1000);
}

TEST_CASE("synthetic generator") {
    synthetic::SyntheticOptions o;
    o.n = 100;
    const auto a = synthetic::generate_synthetic(o);
    CHECK(a.size() == 100);
    CHECK(export_jsonl(a) == export_jsonl(synthetic::generate_synthetic(o)));

    o.n = 2000;
    o.marker_strength = 1.0;
    const auto strong = synthetic::generate_synthetic(o);
    for (const auto& r : strong.records()) {
        for (auto c : kAllCharacteristics) {
            if (r.annotation.votes[c][0]) CHECK(synthetic::contains_marker(r.utterance.text, c));
        }
    }

    o.marker_strength = 0.5;
    const auto half = synthetic::generate_synthetic(o);
    for (auto c : kAllCharacteristics) {
        std::size_t yes = 0;
        for (const auto& r : half.records()) yes += r.annotation.votes[c][0];
        CHECK(yes >= 900);
        CHECK(yes <= 1100);
    }
}
