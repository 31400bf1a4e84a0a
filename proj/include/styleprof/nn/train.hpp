#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <nlohmann/json.hpp>
#include <span>
#include <string>
#include <vector>

#include "styleprof/corpus.hpp"
#include "styleprof/nn/models.hpp"

namespace styleprof::nn {

struct TrainConfig {
    double dev_fraction = 0.05;
    std::size_t batch_size = 32;
    std::size_t max_epochs = 50;
    std::size_t patience = 5;
    double learning_rate = 0.005;
    std::uint64_t seed = 1;
    /// Gradient shards per batch. Example j of a batch goes to shard j % shards
    /// and shards are summed in index order, so results do not depend on the
    /// number of threads.
    std::size_t shards = 4;

    void validate() const;
    nlohmann::json to_json() const;
    static TrainConfig from_json(const nlohmann::json& j);
};

struct EpochLog {
    std::size_t epoch = 0;  // 1-based
    double train_loss = 0.0;
    double dev_loss = 0.0;
    double dev_macro_f1 = 0.0;
};

struct TrainLog {
    std::vector<EpochLog> epochs;
    std::size_t best_epoch = 0;
    std::size_t n_train = 0;
    std::size_t n_dev = 0;

    nlohmann::json to_json() const;
    static TrainLog from_json(const nlohmann::json& j);
};

/// Keeps the best epoch by dev macro-F1 (ties broken by lower dev loss).
/// Patience counts epochs since the last strict macro-F1 improvement.
class EarlyStopper {
public:
    explicit EarlyStopper(std::size_t patience) : patience_(patience) {}

    /// Returns true when this epoch is the new best.
    bool update(std::size_t epoch, double macro_f1, double loss);
    bool should_stop() const { return since_best_ >= patience_; }
    std::size_t best_epoch() const { return best_epoch_; }

private:
    std::size_t patience_;
    std::size_t best_epoch_ = 0;
    std::size_t since_best_ = 0;
    double best_f1_ = -1.0;
    double best_loss_ = 0.0;
};

/// Mini-batch Adam on mean cross-entropy with a stratified dev split carved
/// from `data`; the network keeps the best-dev parameters. Throws
/// DegenerateTraining (fewer than 20 texts or one class) and Divergence.
TrainLog train_network(Network& net, std::span<const corpus::LabeledText> data,
                       const TrainConfig& config);

std::unique_ptr<CharCnn> train_ccnn(std::span<const corpus::LabeledText> data,
                                    const CharCnnConfig& config, const TrainConfig& train,
                                    TrainLog* log = nullptr);

/// Uses config.static_path as a static provider when the source is StaticFile.
std::unique_ptr<SeqNet> train_seqnet(std::span<const corpus::LabeledText> data,
                                     const SeqNetConfig& config, const TrainConfig& train,
                                     TrainLog* log = nullptr);

// --- gradient checking ------------------------------------------------------------------

struct GradCheckExample {
    std::vector<std::int32_t> ids;
    std::size_t label = 0;
};

struct TensorGradError {
    std::string name;
    double max_relative_error = 0.0;
};

struct GradCheckResult {
    double max_relative_error = 0.0;
    std::vector<TensorGradError> per_tensor;
};

inline constexpr double kGradCheckStep = 1e-4;
/// Denominator floor of the relative error |a - n| / max(|a|, |n|, floor).
inline constexpr double kGradCheckFloor = 1e-6;

/// Analytic gradient of the summed loss (no dropout) against central
/// differences on every entry of every trainable tensor.
GradCheckResult grad_check(Network& net, std::span<const GradCheckExample> examples,
                           double step = kGradCheckStep);

double relative_error(double analytic, double numeric, double floor = kGradCheckFloor);

/// Tiny fixed configurations (all dims <= 8, dropout off) and inputs.
GradCheckResult grad_check_tiny(std::string_view model_kind, std::uint64_t seed);

}  // namespace styleprof::nn
