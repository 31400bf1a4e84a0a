#include <doctest.h>

#include <algorithm>
#include <memory>
#include <nlohmann/json.hpp>
#include <set>

#include "styleprof/error.hpp"
#include "styleprof/eval.hpp"
#include "styleprof/random.hpp"
#include "oracles.hpp"

using namespace styleprof;
using namespace styleprof::eval;
using oracles::oracle_macro_f1;

namespace {

std::vector<bool> random_bools(Rng& rng, std::size_t n, double p) {
    std::vector<bool> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = rng.bernoulli(p);
    return v;
}

class ThresholdScorer : public Scorer {
public:
    double probability_yes(std::string_view text) const override {
        return text.find("yes") != std::string_view::npos ? 0.8 : 0.2;
    }
};

std::vector<corpus::LabeledText> pool_of(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<corpus::LabeledText> out;
    for (std::size_t i = 0; i < n; ++i) {
        const bool y = rng.bernoulli(0.4);
        out.push_back({"p" + std::to_string(i), y ? "yes text" : "no text", y, corpus::Difficulty::Unknown});
    }
    return out;
}

}  // namespace

TEST_CASE("macro P/R/F against a counting oracle") {
    Rng rng(1);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t n = 1 + rng.uniform_index(60);
        const auto gold = random_bools(rng, n, rng.uniform01());
        const auto pred = random_bools(rng, n, rng.uniform01());
        const auto r = macro_prf(pred, gold);
        CHECK(r.macro_f1 == doctest::Approx(oracle_macro_f1(pred, gold)).epsilon(1e-12));
        CHECK(r.n == n);
        CHECK(r.confusion[0][0] + r.confusion[0][1] + r.confusion[1][0] + r.confusion[1][1] == n);
        CHECK(r.macro_f1 >= 0.0);
        CHECK(r.macro_f1 <= 1.0);
        // Swapping the class names swaps the per-class metrics and keeps the macro.
        std::vector<bool> ip(pred.size()), ig(gold.size());
        for (std::size_t i = 0; i < n; ++i) {
            ip[i] = !pred[i];
            ig[i] = !gold[i];
        }
        const auto s = macro_prf(ip, ig);
        CHECK(s.macro_f1 == doctest::Approx(r.macro_f1).epsilon(1e-12));
        CHECK(s.yes.f1 == doctest::Approx(r.no.f1).epsilon(1e-12));
    }
}

TEST_CASE("hand-computed macro report") {
    // gold yes yes no no, pred yes no no no: yes P=1 R=.5 F=2/3, no P=2/3 R=1 F=.8
    const auto r = macro_prf({true, false, false, false}, {true, true, false, false});
    CHECK(r.yes.precision == 1.0);
    CHECK(r.yes.recall == 0.5);
    CHECK(r.yes.f1 == doctest::Approx(2.0 / 3.0));
    CHECK(r.no.f1 == doctest::Approx(0.8));
    CHECK(r.macro_f1 == doctest::Approx((2.0 / 3.0 + 0.8) / 2.0));

    // one-third case: gold yes no no, all predicted yes
    const auto t = macro_prf({true, true, true}, {true, false, false});
    CHECK(t.yes.precision == doctest::Approx(1.0 / 3.0));
    CHECK(t.no.f1 == 0.0);
    CHECK(t.macro_precision == doctest::Approx(1.0 / 6.0));
    CHECK(t.macro_recall == 0.5);

    CHECK(macro_prf({true}, {true}).macro_f1 == 0.5);
    CHECK(macro_prf({true, false}, {true, false}).macro_f1 == 1.0);
    CHECK_THROWS_AS(macro_prf({}, {}), Error);
    CHECK_THROWS_AS(macro_prf({true}, {true, false}), Error);

    const auto j = nlohmann::json::parse(report_to_json(r));
    CHECK(j["macro"]["f1"].get<double>() == r.macro_f1);
    CHECK(j["confusion"]["gold_yes"]["pred_no"] == 1);
    CHECK(report_to_text(r).find("macro") != std::string::npos);
}

TEST_CASE("majority baseline") {
    std::vector<bool> gold(1000, false);
    std::fill(gold.begin(), gold.begin() + 116, true);
    const auto r = majority_baseline(gold);
    CHECK(r.confusion[0][0] == 884);
    CHECK(r.confusion[1][0] == 116);
    CHECK(r.yes.f1 == 0.0);
    CHECK(r.no.precision == doctest::Approx(0.884));
    CHECK(r.macro_recall == 0.5);
    CHECK(r.macro_f1 == doctest::Approx(0.5 * 2 * 0.884 / 1.884));

    // ties predict no
    const auto tie = majority_baseline({true, false});
    CHECK(tie.confusion[1][0] == 1);
    CHECK(tie.confusion[0][0] == 1);
    const auto yes = majority_baseline({true, true, false});
    CHECK(yes.confusion[1][1] == 2);
    CHECK_THROWS_AS(majority_baseline({}), Error);

    Rng rng(2);
    for (int i = 0; i < 100; ++i) {
        const auto g = random_bools(rng, 1 + rng.uniform_index(50), rng.uniform01());
        CHECK(majority_baseline(g).macro_f1 <= 0.5);
    }
}

TEST_CASE("nested subsamples") {
    Rng rng(3);
    const auto labels = random_bools(rng, 500, 0.3);
    const auto yes_total = std::count(labels.begin(), labels.end(), true);
    std::set<std::size_t> prev;
    for (std::size_t size : {10, 50, 100, 250, 500}) {
        const auto idx = nested_subsample(labels, size, 7);
        CHECK(idx.size() == size);
        CHECK(std::is_sorted(idx.begin(), idx.end()));
        const std::set<std::size_t> cur(idx.begin(), idx.end());
        CHECK(cur.size() == size);
        CHECK(std::includes(cur.begin(), cur.end(), prev.begin(), prev.end()));
        const auto yes = std::count_if(idx.begin(), idx.end(), [&](std::size_t i) { return labels[i]; });
        CHECK(yes == std::llround(static_cast<double>(size) * static_cast<double>(yes_total) / 500.0));
        prev = cur;
    }
    CHECK(nested_subsample(labels, 100, 7) == nested_subsample(labels, 100, 7));
    CHECK(nested_subsample(labels, 100, 7) != nested_subsample(labels, 100, 8));
    CHECK_THROWS_AS(nested_subsample(labels, 501, 7), Error);
}

TEST_CASE("learning curve") {
    const auto pool = pool_of(300, 4);
    const auto test = pool_of(100, 5);
    std::vector<std::vector<std::string>> seen;
    Trainer trainer = [&](std::span<const corpus::LabeledText> train, std::uint64_t) {
        std::vector<std::string> ids;
        for (const auto& t : train) ids.push_back(t.id);
        seen.push_back(ids);
        return std::unique_ptr<Scorer>(new ThresholdScorer);
    };
    const std::vector<std::size_t> sizes{30, 100, 300};
    const auto curve = learning_curve(trainer, pool, test, sizes, 9);
    REQUIRE(curve.points.size() == 3);
    CHECK(curve.nested);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(curve.points[i].train_size == sizes[i]);
        CHECK(curve.points[i].macro_f1 == 1.0);
        CHECK(curve.points[i].seed == 9);
        CHECK(seen[i].size() == sizes[i]);
    }
    for (std::size_t i = 1; i < 3; ++i) {
        const std::set<std::string> small(seen[i - 1].begin(), seen[i - 1].end());
        const std::set<std::string> big(seen[i].begin(), seen[i].end());
        CHECK(std::includes(big.begin(), big.end(), small.begin(), small.end()));
    }
    // The full-pool point trains on the whole pool, in order.
    std::vector<std::string> all;
    for (const auto& p : pool) all.push_back(p.id);
    CHECK(seen[2] == all);

    CHECK(curve_to_csv(curve).rfind("size,f1,seed\n30,1,9\n", 0) == 0);
    const std::vector<std::size_t> too_big{301};
    CHECK_THROWS_AS(learning_curve(trainer, pool, test, too_big, 1), Error);
    const std::vector<std::size_t> unordered{100, 50};
    CHECK_THROWS_AS(learning_curve(trainer, pool, test, unordered, 1), Error);
}

TEST_CASE("calibration bands against brute force") {
    Rng rng(6);
    std::vector<ScoredInstance> inst;
    for (int i = 0; i < 2000; ++i) {
        ScoredInstance s;
        s.p_no = rng.uniform01();
        if (i % 50 == 0) s.p_no = 0.85;
        if (i % 77 == 0) s.p_no = 0.60;
        s.gold = rng.bernoulli(0.5);
        const double d = rng.uniform01();
        s.difficulty = d < 0.45 ? corpus::Difficulty::Easy
                                : (d < 0.9 ? corpus::Difficulty::Difficult : corpus::Difficulty::Unknown);
        inst.push_back(s);
    }
    const auto rep = calibration_report(inst);
    std::size_t unknown = 0;
    for (const auto& s : inst) unknown += s.difficulty == corpus::Difficulty::Unknown;
    CHECK(rep.n_unknown == unknown);
    CHECK(rep.n_sliced + rep.n_unknown == inst.size());
    for (int d = 0; d < 2; ++d) {
        for (int g = 0; g < 2; ++g) {
            const auto want = d ? corpus::Difficulty::Difficult : corpus::Difficulty::Easy;
            std::size_t count = 0;
            std::vector<std::size_t> hits(kDefaultBands.size(), 0);
            for (const auto& s : inst) {
                if (s.difficulty != want || s.gold != (g == 1)) continue;
                ++count;
                for (std::size_t b = 0; b < kDefaultBands.size(); ++b) {
                    hits[b] += !(s.p_no < kDefaultBands[b].lo) && !(s.p_no > kDefaultBands[b].hi);
                }
            }
            const auto& cell = rep.cells[d][g];
            CHECK(cell.count == count);
            for (std::size_t b = 0; b < kDefaultBands.size(); ++b) {
                REQUIRE(cell.band_fractions[b].has_value());
                CHECK(*cell.band_fractions[b] == static_cast<double>(hits[b]) / static_cast<double>(count));
            }
        }
    }

    const std::vector<ScoredInstance> only_easy_no{{0.9, false, corpus::Difficulty::Easy}};
    const auto sparse = calibration_report(only_easy_no);
    CHECK(sparse.cells[0][0].band_fractions[0] == 1.0);
    CHECK(sparse.cells[0][0].band_fractions[1] == 0.0);
    CHECK_FALSE(sparse.cells[1][1].band_fractions[0].has_value());
    const auto j = nlohmann::json::parse(calibration_to_json(sparse));
    CHECK(j["cells"][3]["band_fractions"][0].is_null());
    CHECK(calibration_to_text(sparse).find("n/a") != std::string::npos);
}

TEST_CASE("error slices") {
    const std::vector<std::string> texts{"short one", std::string(60, 'x'), "a b c d e f"};
    std::string long_text;
    for (int i = 0; i < 41; ++i) long_text += "w ";
    const std::vector<std::string> t2{"short", long_text, long_text, "tiny"};
    const auto s = error_slices({true, false, true, false}, {false, true, true, true}, t2);
    CHECK(s.short_texts.n == 2);
    CHECK(s.short_texts.false_positives == 1);
    CHECK(s.short_texts.false_negatives == 1);
    CHECK(s.short_texts.false_positive_rate == 1.0);
    CHECK(s.short_texts.false_negative_rate == 1.0);
    CHECK(s.long_texts.n == 2);
    CHECK(s.long_texts.false_negatives == 1);
    CHECK(s.long_texts.false_negative_rate == 0.5);
    CHECK_FALSE(s.long_texts.false_positive_rate.has_value());
    const auto j = nlohmann::json::parse(slices_to_json(s));
    CHECK(j["long"]["false_positive_rate"].is_null());
    CHECK_THROWS_AS(error_slices({true}, {true}, texts), Error);

    std::string forty;
    for (int i = 0; i < 40; ++i) forty += "w ";
    CHECK(error_slices({true}, {true}, std::vector<std::string>{forty}).short_texts.n == 1);
}
