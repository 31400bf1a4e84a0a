#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <nlohmann/json.hpp>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "styleprof/characteristic.hpp"
#include "styleprof/corpus.hpp"
#include "styleprof/eval.hpp"
#include "styleprof/features.hpp"
#include "styleprof/linear.hpp"
#include "styleprof/nn/models.hpp"
#include "styleprof/nn/train.hpp"

namespace styleprof::model {

enum class ModelKind { NgSvm, CharCnn, SeqNet };

std::string_view to_string(ModelKind kind);
std::optional<ModelKind> parse_model_kind(std::string_view s);

/// A trained binary classifier for one characteristic. Labels follow one
/// rule for every kind: yes iff P(yes) >= 0.5.
class Classifier : public eval::Scorer {
public:
    virtual ModelKind kind() const = 0;
    virtual std::optional<Characteristic> task() const = 0;
    double probability_yes(std::string_view text) const override = 0;
    virtual std::vector<double> probability_batch(std::span<const std::string> texts) const;
    /// Container bytes; identical for identical models.
    virtual std::string serialize() const = 0;
    virtual nlohmann::json describe() const = 0;

    bool predict(std::string_view text) const { return probability_yes(text) >= 0.5; }
    /// Hash of serialize().
    std::string fingerprint() const;
    void save(const std::filesystem::path& path) const;
};

class LinearClassifier final : public Classifier {
public:
    LinearClassifier(features::Vocabulary vocab, linear::LinearModel model,
                     std::optional<Characteristic> task);

    ModelKind kind() const override { return ModelKind::NgSvm; }
    std::optional<Characteristic> task() const override { return task_; }
    double probability_yes(std::string_view text) const override;
    std::vector<double> probability_batch(std::span<const std::string> texts) const override;
    std::string serialize() const override;
    nlohmann::json describe() const override;

    double margin(std::string_view text) const;
    const features::Vocabulary& vocab() const { return vocab_; }
    const linear::LinearModel& model() const { return model_; }

private:
    features::Vocabulary vocab_;
    linear::LinearModel model_;
    std::optional<Characteristic> task_;
};

class NeuralClassifier final : public Classifier {
public:
    NeuralClassifier(std::unique_ptr<nn::Network> net, nn::TrainConfig train, nn::TrainLog log,
                     std::optional<Characteristic> task);

    ModelKind kind() const override;
    std::optional<Characteristic> task() const override { return task_; }
    double probability_yes(std::string_view text) const override;
    std::vector<double> probability_batch(std::span<const std::string> texts) const override;
    std::string serialize() const override;
    nlohmann::json describe() const override;

    const nn::Network& network() const { return *net_; }
    const nn::TrainLog& log() const { return log_; }

private:
    std::unique_ptr<nn::Network> net_;
    nn::TrainConfig train_;
    nn::TrainLog log_;
    std::optional<Characteristic> task_;
};

/// Probabilities from a function; for tests and dry runs. Not serializable.
class StubClassifier final : public Classifier {
public:
    using Fn = std::function<double(std::string_view)>;
    StubClassifier(Fn fn, std::optional<Characteristic> task = std::nullopt, std::string tag = "stub");

    ModelKind kind() const override { return ModelKind::NgSvm; }
    std::optional<Characteristic> task() const override { return task_; }
    double probability_yes(std::string_view text) const override { return fn_(text); }
    std::string serialize() const override { return "stub:" + tag_; }
    nlohmann::json describe() const override;

private:
    Fn fn_;
    std::optional<Characteristic> task_;
    std::string tag_;
};

// --- container ---------------------------------------------------------------------------

/// Layout: 8-byte magic "STYPROF\0", u32 version, u64 header length, JSON
/// header, then every tensor listed in the header as little-endian IEEE-754
/// doubles, in header order.
inline constexpr std::string_view kMagic{"STYPROF\0", 8};
inline constexpr std::uint32_t kContainerVersion = 1;

std::unique_ptr<Classifier> deserialize(std::string_view bytes);
std::unique_ptr<Classifier> load_classifier(const std::filesystem::path& path);

/// Header of a container without loading tensors.
nlohmann::json read_header(std::string_view bytes);

// --- training facade -----------------------------------------------------------------------

struct TrainOptions {
    ModelKind kind = ModelKind::NgSvm;
    std::uint64_t seed = 1;
    linear::LinearConfig linear;
    features::VocabConfig vocab;
    nn::CharCnnConfig ccnn;
    nn::SeqNetConfig seqnet;
    nn::TrainConfig train;
};

/// The seed in `options` overrides the seeds of the nested configs. The
/// ng-SVM carves the same stratified dev fraction as the neural trainer and
/// fits its calibration there.
std::unique_ptr<Classifier> train_classifier(std::span<const corpus::LabeledText> data,
                                             std::optional<Characteristic> task,
                                             const TrainOptions& options);

}  // namespace styleprof::model
