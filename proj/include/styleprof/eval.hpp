#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "styleprof/corpus.hpp"

namespace styleprof::eval {

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t support = 0;
};

/// Macro-averaged report over the two classes. Zero denominators yield 0.
struct EvalReport {
    ClassMetrics yes;
    ClassMetrics no;
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double macro_f1 = 0.0;
    /// confusion[gold][predicted], index 1 = yes.
    std::array<std::array<std::size_t, 2>, 2> confusion{};
    std::size_t n = 0;
};

/// Throws InvalidArgument on length mismatch or empty input.
EvalReport macro_prf(const std::vector<bool>& predictions, const std::vector<bool>& gold);

/// Constant predictor of the majority gold class (ties predict no).
EvalReport majority_baseline(const std::vector<bool>& gold);

std::string report_to_json(const EvalReport& report, int indent = 2);
std::string report_to_text(const EvalReport& report);

// --- learning curves -----------------------------------------------------------

/// Anything that maps a text to P(yes).
class Scorer {
public:
    virtual ~Scorer() = default;
    virtual double probability_yes(std::string_view text) const = 0;
};

using Trainer = std::function<std::unique_ptr<Scorer>(std::span<const corpus::LabeledText> train,
                                                      std::uint64_t seed)>;

struct CurvePoint {
    std::size_t train_size = 0;
    double macro_f1 = 0.0;
    std::uint64_t seed = 0;
};

struct LearningCurve {
    std::vector<CurvePoint> points;
    /// Subsamples are nested: the sample for a smaller size is a subset of the
    /// sample for every larger size.
    bool nested = true;
};

/// Nested stratified subsample: per-class Rng(seed) shuffle, then the first
/// round(size * yes/n) yes and the rest no; returned in pool order.
std::vector<std::size_t> nested_subsample(const std::vector<bool>& labels, std::size_t size,
                                          std::uint64_t seed);

/// Throws InvalidArgument when a size exceeds the pool or sizes are not
/// strictly increasing.
LearningCurve learning_curve(const Trainer& trainer, std::span<const corpus::LabeledText> pool,
                             std::span<const corpus::LabeledText> test,
                             std::span<const std::size_t> sizes, std::uint64_t seed);

std::string curve_to_csv(const LearningCurve& curve);

std::vector<bool> predict_labels(const Scorer& scorer, std::span<const corpus::LabeledText> items);

// --- calibration bands -----------------------------------------------------------

struct Band {
    double lo = 0.0;
    double hi = 1.0;
};

inline const std::vector<Band> kDefaultBands = {{0.85, 0.99}, {0.40, 0.60}};

struct ScoredInstance {
    double p_no = 0.0;
    bool gold = false;
    corpus::Difficulty difficulty = corpus::Difficulty::Unknown;
};

struct CalibrationCell {
    std::size_t count = 0;
    std::vector<std::optional<double>> band_fractions;  // null when count == 0
};

/// cells[difficulty (0 easy, 1 difficult)][gold (0 no, 1 yes)]; instances with
/// unknown difficulty are excluded. Bands are closed intervals on P(no).
struct CalibrationReport {
    std::vector<Band> bands;
    std::array<std::array<CalibrationCell, 2>, 2> cells;
    std::size_t n_sliced = 0;
    std::size_t n_unknown = 0;
};

CalibrationReport calibration_report(std::span<const ScoredInstance> instances,
                                     const std::vector<Band>& bands = kDefaultBands);

CalibrationReport calibration_report(const Scorer& scorer,
                                     std::span<const corpus::LabeledText> test,
                                     const std::vector<Band>& bands = kDefaultBands);

std::string calibration_to_json(const CalibrationReport& report, int indent = 2);
std::string calibration_to_text(const CalibrationReport& report);

// --- error slices -------------------------------------------------------------------

struct SliceCounts {
    std::size_t n = 0;
    std::size_t gold_yes = 0;
    std::size_t gold_no = 0;
    std::size_t false_positives = 0;
    std::size_t false_negatives = 0;
    std::optional<double> false_positive_rate;  // FP / gold_no
    std::optional<double> false_negative_rate;  // FN / gold_yes
};

struct ErrorSlices {
    std::size_t length_threshold = 40;
    SliceCounts short_texts;  // <= threshold words
    SliceCounts long_texts;   // > threshold words
};

ErrorSlices error_slices(const std::vector<bool>& predictions, const std::vector<bool>& gold,
                         std::span<const std::string> texts, std::size_t length_threshold = 40);

std::string slices_to_json(const ErrorSlices& slices, int indent = 2);

}  // namespace styleprof::eval
