#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <nlohmann/json.hpp>
#include <string>
#include <string_view>
#include <vector>

#include "styleprof/characteristic.hpp"
#include "styleprof/eval.hpp"
#include "styleprof/model.hpp"

namespace styleprof::cli {

/// Exit codes of run().
inline constexpr int kExitOk = 0;
inline constexpr int kExitDomainError = 1;
inline constexpr int kExitUsage = 2;

/// Runs one subcommand. `args` excludes the program name. Data goes to
/// `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv);

/// Edit distance, for flag suggestions.
std::size_t levenshtein(std::string_view a, std::string_view b);

/// Closest candidate within distance 3, or empty.
std::string suggest(std::string_view word, const std::vector<std::string>& candidates);

// --- pipeline demo -----------------------------------------------------------------------

struct DemoOptions {
    std::uint64_t seed = 1;
    /// Grid corpus: train + test texts and marker strength.
    std::size_t grid_n = 2000;
    std::size_t grid_test = 400;
    double grid_strength = 0.8;
    /// Curve corpus for one characteristic.
    Characteristic curve_task = Characteristic::Emotionality;
    double curve_strength = 0.7;
    std::vector<std::size_t> curve_sizes{250, 1000, 4000};
    std::size_t curve_test = 1000;
    std::vector<model::ModelKind> kinds{model::ModelKind::NgSvm, model::ModelKind::CharCnn,
                                        model::ModelKind::SeqNet};
};

struct GridCell {
    model::ModelKind kind = model::ModelKind::NgSvm;
    Characteristic task = Characteristic::Emotionality;
    eval::EvalReport report;
};

struct DemoResult {
    std::vector<GridCell> cells;  // kinds x tasks, kind-major
    PerCharacteristic<eval::EvalReport> baseline;
    /// One curve per model kind, in DemoOptions::kinds order.
    std::vector<eval::LearningCurve> curves;
};

/// Trains every (kind, task) pair on a synthetic corpus, scores the held-out
/// part, and runs the learning curve. Jobs run in parallel with results
/// placed by index, so output does not depend on the thread count.
DemoResult pipeline_demo(const DemoOptions& options, std::ostream* progress = nullptr);

/// Models as rows, tasks as column groups, P/R/F as percentages; the last
/// row is the majority-class baseline.
std::string grid_to_text(const DemoResult& result);
nlohmann::json grid_to_json(const DemoResult& result);
/// "model,size,f1,seed" rows.
std::string curves_to_csv(const DemoResult& result, const DemoOptions& options);

}  // namespace styleprof::cli
