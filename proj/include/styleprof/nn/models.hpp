#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "styleprof/nn/layers.hpp"
#include "styleprof/nn/params.hpp"

namespace styleprof::nn {

// --- symbol tables -----------------------------------------------------------------

/// Character ids: 0 = padding, 1 = unknown, then the kept characters.
class Charset {
public:
    static constexpr std::int32_t kPad = 0;
    static constexpr std::int32_t kUnk = 1;

    Charset() = default;
    explicit Charset(std::vector<char32_t> chars);

    /// Most frequent characters first (ties by code point), at most max_size.
    static Charset build(std::span<const std::string> texts, std::size_t max_size);

    std::int32_t id_of(char32_t cp) const;
    /// Ids of the first max_len scalars of text.
    std::vector<std::int32_t> encode(std::string_view text, std::size_t max_len) const;
    /// Table rows including padding and unknown.
    std::size_t size() const { return chars_.size() + 2; }
    const std::vector<char32_t>& chars() const { return chars_; }
    std::string fingerprint() const;

    nlohmann::json to_json() const;
    static Charset from_json(const nlohmann::json& j);

private:
    std::vector<char32_t> chars_;
    std::unordered_map<char32_t, std::int32_t> index_;
};

/// Token ids: 0 = unknown, then the kept tokens.
class TokenVocab {
public:
    static constexpr std::int32_t kUnk = 0;

    TokenVocab() = default;
    explicit TokenVocab(std::vector<std::string> tokens);

    /// Most frequent lowercased tokens first (ties lexicographic), at most max_size.
    static TokenVocab build(std::span<const std::string> texts, std::size_t max_size);

    std::int32_t id_of(std::string_view token) const;
    std::vector<std::int32_t> encode(std::string_view text, std::size_t max_tokens) const;
    std::size_t size() const { return tokens_.size() + 1; }
    const std::vector<std::string>& tokens() const { return tokens_; }
    std::string fingerprint() const;

    nlohmann::json to_json() const;
    static TokenVocab from_json(const nlohmann::json& j);

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, std::int32_t> index_;
};

// --- static embedding files ----------------------------------------------------------

/// Text format: header line "n dim", then n lines "token v1 ... vdim".
struct StaticEmbeddings {
    std::vector<std::string> tokens;
    std::size_t dim = 0;
    std::vector<double> values;  // n x dim

    /// Stored row, or the mean of all rows for an unknown token.
    std::vector<double> lookup(std::string_view token) const;
    std::vector<double> mean() const;
};

StaticEmbeddings parse_static_embeddings(std::string_view content);
StaticEmbeddings import_static_embeddings(const std::filesystem::path& path);
/// Values written with 17 significant digits, so import(export(e)) == e.
std::string export_static_embeddings(const StaticEmbeddings& embeddings);

// --- networks --------------------------------------------------------------------------

/// Class index 0 = no, 1 = yes.
class Network {
public:
    virtual ~Network() = default;

    virtual std::string_view kind() const = 0;
    virtual std::vector<std::int32_t> encode(std::string_view text) const = 0;
    virtual std::array<double, 2> forward(std::span<const std::int32_t> ids) const = 0;
    /// Cross-entropy of one example. Adds gradients into `grads` when given;
    /// dropout is active only when `dropout_rng` is given.
    virtual double loss(std::span<const std::int32_t> ids, std::size_t label, GradSet* grads,
                        Rng* dropout_rng) const = 0;
    virtual nlohmann::json config_json() const = 0;
    virtual nlohmann::json symbols_json() const = 0;
    virtual std::string symbols_fingerprint() const = 0;

    std::array<double, 2> predict(std::string_view text) const { return forward(encode(text)); }

    ParamSet& params() { return params_; }
    const ParamSet& params() const { return params_; }

protected:
    ParamSet params_;
};

struct CharCnnConfig {
    std::size_t embed_dim = 16;
    std::size_t charset_size = 20000;
    std::size_t max_len = 400;
    std::size_t filters_per_kernel = 64;
    std::vector<std::size_t> kernel_sizes{3, 5, 7};
    double dropout_rate = 0.1;
    std::uint64_t seed = 1;
    /// Start with an all-zero output layer.
    bool zero_head = false;

    /// Throws InvalidArgument.
    void validate() const;
    nlohmann::json to_json() const;
    static CharCnnConfig from_json(const nlohmann::json& j);
};

/// Character embeddings -> parallel conv branches with global max pooling
/// -> concatenation -> dropout -> dense softmax head.
class CharCnn final : public Network {
public:
    CharCnn(CharCnnConfig config, Charset charset);

    std::string_view kind() const override { return "ccnn"; }
    std::vector<std::int32_t> encode(std::string_view text) const override;
    std::array<double, 2> forward(std::span<const std::int32_t> ids) const override;
    double loss(std::span<const std::int32_t> ids, std::size_t label, GradSet* grads,
                Rng* dropout_rng) const override;
    nlohmann::json config_json() const override { return config_.to_json(); }
    nlohmann::json symbols_json() const override { return charset_.to_json(); }
    std::string symbols_fingerprint() const override { return charset_.fingerprint(); }

    const CharCnnConfig& config() const { return config_; }
    const Charset& charset() const { return charset_; }

private:
    double run(std::span<const std::int32_t> ids, std::size_t label, GradSet* grads, Rng* rng,
               std::array<double, 2>* probs) const;

    CharCnnConfig config_;
    Charset charset_;
    std::size_t emb_ = 0;
    std::vector<std::size_t> conv_w_, conv_b_;
    std::size_t out_w_ = 0, out_b_ = 0;
};

enum class EmbeddingSource { TrainableTable, StaticFile };

struct SeqNetConfig {
    EmbeddingSource source = EmbeddingSource::TrainableTable;
    std::size_t vocab_size = 5000;
    std::size_t embed_dim = 32;
    std::string static_path;
    std::size_t hidden_dim = 32;
    std::size_t attention_dim = 32;
    std::array<std::size_t, 3> dense_dims{32, 32, 32};
    double dropout_rate = 0.1;
    bool layer_norm = true;
    std::size_t max_tokens = 256;
    std::uint64_t seed = 1;

    void validate() const;
    nlohmann::json to_json() const;
    static SeqNetConfig from_json(const nlohmann::json& j);
};

/// Token embeddings -> bidirectional LSTM -> attention pooling -> three
/// dense blocks (dense, relu, layer norm, dropout) -> 2-unit softmax output.
class SeqNet final : public Network {
public:
    /// With a static provider the table rows are (mean, file rows...) and frozen.
    SeqNet(SeqNetConfig config, TokenVocab vocab,
           const StaticEmbeddings* static_embeddings = nullptr);

    std::string_view kind() const override { return "seqnet"; }
    std::vector<std::int32_t> encode(std::string_view text) const override;
    std::array<double, 2> forward(std::span<const std::int32_t> ids) const override;
    double loss(std::span<const std::int32_t> ids, std::size_t label, GradSet* grads,
                Rng* dropout_rng) const override;
    nlohmann::json config_json() const override { return config_.to_json(); }
    nlohmann::json symbols_json() const override { return vocab_.to_json(); }
    std::string symbols_fingerprint() const override { return vocab_.fingerprint(); }

    /// Attention weights over the token positions. Throws InvalidArgument on
    /// an empty sequence.
    std::vector<double> attention_weights(std::span<const std::int32_t> ids) const;

    const SeqNetConfig& config() const { return config_; }
    const TokenVocab& vocab() const { return vocab_; }

private:
    double run(std::span<const std::int32_t> ids, std::size_t label, GradSet* grads, Rng* rng,
               std::array<double, 2>* probs, std::vector<double>* attention) const;

    SeqNetConfig config_;
    TokenVocab vocab_;
    std::size_t emb_ = 0;
    std::array<std::size_t, 3> fwd_{}, bwd_{};  // Wx, Wh, b
    std::size_t att_w_ = 0, att_b_ = 0, att_ctx_ = 0;
    std::array<std::size_t, 3> dense_w_{}, dense_b_{}, norm_g_{}, norm_b_{};
    std::size_t out_w_ = 0, out_b_ = 0;
};

}  // namespace styleprof::nn
