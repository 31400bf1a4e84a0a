#include "styleprof/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <nlohmann/json.hpp>
#include <sstream>

#include "styleprof/error.hpp"
#include "styleprof/random.hpp"
#include "styleprof/utf8.hpp"

namespace styleprof::eval {

using nlohmann::ordered_json;

namespace {

double safe_div(double num, double den) { return den > 0.0 ? num / den : 0.0; }

ClassMetrics class_metrics(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t support) {
    ClassMetrics m;
    m.precision = safe_div(static_cast<double>(tp), static_cast<double>(tp + fp));
    m.recall = safe_div(static_cast<double>(tp), static_cast<double>(tp + fn));
    m.f1 = safe_div(2.0 * m.precision * m.recall, m.precision + m.recall);
    m.support = support;
    return m;
}

ordered_json optional_json(const std::optional<double>& v) {
    return v ? ordered_json(*v) : ordered_json(nullptr);
}

}  // namespace

EvalReport macro_prf(const std::vector<bool>& predictions, const std::vector<bool>& gold) {
    if (predictions.size() != gold.size()) {
        throw Error(ErrorCode::InvalidArgument, "predictions and gold differ in length");
    }
    if (gold.empty()) throw Error(ErrorCode::InvalidArgument, "nothing to evaluate");
    EvalReport r;
    r.n = gold.size();
    for (std::size_t i = 0; i < gold.size(); ++i) {
        ++r.confusion[gold[i] ? 1 : 0][predictions[i] ? 1 : 0];
    }
    const auto& c = r.confusion;
    r.yes = class_metrics(c[1][1], c[0][1], c[1][0], c[1][0] + c[1][1]);
    r.no = class_metrics(c[0][0], c[1][0], c[0][1], c[0][0] + c[0][1]);
    r.macro_precision = 0.5 * (r.yes.precision + r.no.precision);
    r.macro_recall = 0.5 * (r.yes.recall + r.no.recall);
    r.macro_f1 = 0.5 * (r.yes.f1 + r.no.f1);
    return r;
}

EvalReport majority_baseline(const std::vector<bool>& gold) {
    if (gold.empty()) throw Error(ErrorCode::InvalidArgument, "nothing to evaluate");
    const auto yes = static_cast<std::size_t>(std::count(gold.begin(), gold.end(), true));
    const bool majority = 2 * yes > gold.size();
    return macro_prf(std::vector<bool>(gold.size(), majority), gold);
}

std::string report_to_json(const EvalReport& r, int indent) {
    auto cls = [](const ClassMetrics& m) {
        ordered_json j;
        j["precision"] = m.precision;
        j["recall"] = m.recall;
        j["f1"] = m.f1;
        j["support"] = m.support;
        return j;
    };
    ordered_json j;
    j["n"] = r.n;
    j["per_class"] = {{"yes", cls(r.yes)}, {"no", cls(r.no)}};
    j["macro"] = {{"precision", r.macro_precision}, {"recall", r.macro_recall}, {"f1", r.macro_f1}};
    j["confusion"] = {{"gold_no", {{"pred_no", r.confusion[0][0]}, {"pred_yes", r.confusion[0][1]}}},
                      {"gold_yes", {{"pred_no", r.confusion[1][0]}, {"pred_yes", r.confusion[1][1]}}}};
    return j.dump(indent);
}

std::string report_to_text(const EvalReport& r) {
    std::ostringstream out;
    char line[160];
    std::snprintf(line, sizeof line, "%-6s %9s %9s %9s %8s\n", "class", "precision", "recall", "f1",
                  "support");
    out << line;
    auto row = [&](const char* name, const ClassMetrics& m) {
        std::snprintf(line, sizeof line, "%-6s %9.4f %9.4f %9.4f %8zu\n", name, m.precision,
                      m.recall, m.f1, m.support);
        out << line;
    };
    row("yes", r.yes);
    row("no", r.no);
    std::snprintf(line, sizeof line, "%-6s %9.4f %9.4f %9.4f %8zu\n", "macro", r.macro_precision,
                  r.macro_recall, r.macro_f1, r.n);
    out << line;
    return out.str();
}

// --- learning curves -------------------------------------------------------------

std::vector<std::size_t> nested_subsample(const std::vector<bool>& labels, std::size_t size,
                                          std::uint64_t seed) {
    const std::size_t n = labels.size();
    if (size > n) {
        throw Error(ErrorCode::InvalidArgument,
                    "sample size " + std::to_string(size) + " exceeds pool of " + std::to_string(n));
    }
    std::vector<std::size_t> yes, no;
    for (std::size_t i = 0; i < n; ++i) (labels[i] ? yes : no).push_back(i);
    Rng rng(seed);
    rng.shuffle(std::span<std::size_t>(yes));
    rng.shuffle(std::span<std::size_t>(no));
    auto take_yes = static_cast<std::size_t>(std::llround(
        static_cast<double>(size) * static_cast<double>(yes.size()) / static_cast<double>(n)));
    take_yes = std::min(take_yes, yes.size());
    std::size_t take_no = size - take_yes;
    if (take_no > no.size()) {
        take_no = no.size();
        take_yes = size - take_no;
    }
    std::vector<std::size_t> out(yes.begin(), yes.begin() + static_cast<long>(take_yes));
    out.insert(out.end(), no.begin(), no.begin() + static_cast<long>(take_no));
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<bool> predict_labels(const Scorer& scorer, std::span<const corpus::LabeledText> items) {
    std::vector<bool> out;
    out.reserve(items.size());
    for (const auto& it : items) out.push_back(scorer.probability_yes(it.text) >= 0.5);
    return out;
}

LearningCurve learning_curve(const Trainer& trainer, std::span<const corpus::LabeledText> pool,
                             std::span<const corpus::LabeledText> test,
                             std::span<const std::size_t> sizes, std::uint64_t seed) {
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        if (sizes[i] > pool.size()) {
            throw Error(ErrorCode::InvalidArgument, "curve size " + std::to_string(sizes[i]) +
                                                        " exceeds pool of " +
                                                        std::to_string(pool.size()));
        }
        if (i > 0 && sizes[i] <= sizes[i - 1]) {
            throw Error(ErrorCode::InvalidArgument, "curve sizes must be strictly increasing");
        }
    }
    const auto labels = corpus::labels_of(pool);
    const auto gold = corpus::labels_of(test);
    LearningCurve curve;
    for (std::size_t size : sizes) {
        const auto idx = nested_subsample(labels, size, seed);
        std::vector<corpus::LabeledText> sample;
        sample.reserve(idx.size());
        for (auto i : idx) sample.push_back(pool[i]);
        auto scorer = trainer(sample, seed);
        const auto report = macro_prf(predict_labels(*scorer, test), gold);
        curve.points.push_back(CurvePoint{size, report.macro_f1, seed});
    }
    return curve;
}

std::string curve_to_csv(const LearningCurve& curve) {
    std::string out = "size,f1,seed\n";
    char line[96];
    for (const auto& p : curve.points) {
        std::snprintf(line, sizeof line, "%zu,%.17g,%llu\n", p.train_size, p.macro_f1,
                      static_cast<unsigned long long>(p.seed));
        out += line;
    }
    return out;
}

// --- calibration bands -----------------------------------------------------------

CalibrationReport calibration_report(std::span<const ScoredInstance> instances,
                                     const std::vector<Band>& bands) {
    CalibrationReport report;
    report.bands = bands;
    std::array<std::array<std::vector<std::size_t>, 2>, 2> hits;
    for (auto& row : hits) {
        for (auto& cell : row) cell.assign(bands.size(), 0);
    }
    for (const auto& inst : instances) {
        if (inst.difficulty == corpus::Difficulty::Unknown) {
            ++report.n_unknown;
            continue;
        }
        const int d = inst.difficulty == corpus::Difficulty::Difficult ? 1 : 0;
        const int g = inst.gold ? 1 : 0;
        ++report.cells[d][g].count;
        ++report.n_sliced;
        for (std::size_t b = 0; b < bands.size(); ++b) {
            if (inst.p_no >= bands[b].lo && inst.p_no <= bands[b].hi) ++hits[d][g][b];
        }
    }
    for (int d = 0; d < 2; ++d) {
        for (int g = 0; g < 2; ++g) {
            auto& cell = report.cells[d][g];
            cell.band_fractions.resize(bands.size());
            for (std::size_t b = 0; b < bands.size(); ++b) {
                if (cell.count > 0) {
                    cell.band_fractions[b] =
                        static_cast<double>(hits[d][g][b]) / static_cast<double>(cell.count);
                }
            }
        }
    }
    return report;
}

CalibrationReport calibration_report(const Scorer& scorer,
                                     std::span<const corpus::LabeledText> test,
                                     const std::vector<Band>& bands) {
    std::vector<ScoredInstance> scored;
    scored.reserve(test.size());
    for (const auto& t : test) {
        scored.push_back(ScoredInstance{1.0 - scorer.probability_yes(t.text), t.label, t.difficulty});
    }
    return calibration_report(scored, bands);
}

std::string calibration_to_json(const CalibrationReport& report, int indent) {
    ordered_json j;
    auto bands = ordered_json::array();
    for (const auto& b : report.bands) bands.push_back({b.lo, b.hi});
    j["bands_on_p_no"] = std::move(bands);
    j["n_sliced"] = report.n_sliced;
    j["n_unknown_difficulty"] = report.n_unknown;
    auto cells = ordered_json::array();
    for (int d = 0; d < 2; ++d) {
        for (int g = 0; g < 2; ++g) {
            const auto& cell = report.cells[d][g];
            ordered_json c;
            c["difficulty"] = d ? "difficult" : "easy";
            c["gold"] = g ? "yes" : "no";
            c["count"] = cell.count;
            auto fr = ordered_json::array();
            for (const auto& f : cell.band_fractions) fr.push_back(optional_json(f));
            c["band_fractions"] = std::move(fr);
            cells.push_back(std::move(c));
        }
    }
    j["cells"] = std::move(cells);
    return j.dump(indent);
}

std::string calibration_to_text(const CalibrationReport& report) {
    std::ostringstream out;
    char buf[64];
    out << "difficulty gold   count";
    for (const auto& b : report.bands) {
        std::snprintf(buf, sizeof buf, "  P(no) in [%.2f,%.2f]", b.lo, b.hi);
        out << buf;
    }
    out << '\n';
    for (int d = 0; d < 2; ++d) {
        for (int g = 0; g < 2; ++g) {
            const auto& cell = report.cells[d][g];
            std::snprintf(buf, sizeof buf, "%-10s %-5s %7zu", d ? "difficult" : "easy",
                          g ? "yes" : "no", cell.count);
            out << buf;
            for (const auto& f : cell.band_fractions) {
                if (f) {
                    std::snprintf(buf, sizeof buf, "  %20.4f", *f);
                } else {
                    std::snprintf(buf, sizeof buf, "  %20s", "n/a");
                }
                out << buf;
            }
            out << '\n';
        }
    }
    return out.str();
}

// --- error slices -------------------------------------------------------------------

ErrorSlices error_slices(const std::vector<bool>& predictions, const std::vector<bool>& gold,
                         std::span<const std::string> texts, std::size_t length_threshold) {
    if (predictions.size() != gold.size() || gold.size() != texts.size()) {
        throw Error(ErrorCode::InvalidArgument, "error slices need aligned inputs");
    }
    ErrorSlices s;
    s.length_threshold = length_threshold;
    for (std::size_t i = 0; i < gold.size(); ++i) {
        auto& slice = utf8::word_count(texts[i]) <= length_threshold ? s.short_texts : s.long_texts;
        ++slice.n;
        if (gold[i]) {
            ++slice.gold_yes;
            if (!predictions[i]) ++slice.false_negatives;
        } else {
            ++slice.gold_no;
            if (predictions[i]) ++slice.false_positives;
        }
    }
    for (auto* slice : {&s.short_texts, &s.long_texts}) {
        if (slice->gold_no > 0) {
            slice->false_positive_rate =
                static_cast<double>(slice->false_positives) / static_cast<double>(slice->gold_no);
        }
        if (slice->gold_yes > 0) {
            slice->false_negative_rate =
                static_cast<double>(slice->false_negatives) / static_cast<double>(slice->gold_yes);
        }
    }
    return s;
}

std::string slices_to_json(const ErrorSlices& s, int indent) {
    auto one = [](const SliceCounts& c) {
        ordered_json j;
        j["n"] = c.n;
        j["gold_yes"] = c.gold_yes;
        j["gold_no"] = c.gold_no;
        j["false_positives"] = c.false_positives;
        j["false_negatives"] = c.false_negatives;
        j["false_positive_rate"] = optional_json(c.false_positive_rate);
        j["false_negative_rate"] = optional_json(c.false_negative_rate);
        return j;
    };
    ordered_json j;
    j["length_threshold_words"] = s.length_threshold;
    j["short"] = one(s.short_texts);
    j["long"] = one(s.long_texts);
    return j.dump(indent);
}

}  // namespace styleprof::eval
