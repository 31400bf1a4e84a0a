#include "styleprof/nn/models.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <numeric>

#include "styleprof/corpus.hpp"
#include "styleprof/error.hpp"
#include "styleprof/features.hpp"
#include "styleprof/hash.hpp"
#include "styleprof/utf8.hpp"

namespace styleprof::nn {

using nlohmann::json;

// --- Charset --------------------------------------------------------------------------

Charset::Charset(std::vector<char32_t> chars) : chars_(std::move(chars)) {
    for (std::size_t i = 0; i < chars_.size(); ++i) {
        index_.emplace(chars_[i], static_cast<std::int32_t>(i + 2));
    }
}

Charset Charset::build(std::span<const std::string> texts, std::size_t max_size) {
    std::map<char32_t, std::size_t> counts;
    for (const auto& t : texts) {
        for (char32_t cp : utf8::decode(t)) ++counts[cp];
    }
    std::vector<std::pair<char32_t, std::size_t>> ranked(counts.begin(), counts.end());
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    if (ranked.size() > max_size) ranked.resize(max_size);
    std::vector<char32_t> chars;
    chars.reserve(ranked.size());
    for (const auto& [cp, n] : ranked) chars.push_back(cp);
    return Charset(std::move(chars));
}

std::int32_t Charset::id_of(char32_t cp) const {
    auto it = index_.find(cp);
    return it == index_.end() ? kUnk : it->second;
}

std::vector<std::int32_t> Charset::encode(std::string_view text, std::size_t max_len) const {
    const auto cps = utf8::decode(text);
    const std::size_t n = std::min(cps.size(), max_len);
    std::vector<std::int32_t> ids(n);
    for (std::size_t i = 0; i < n; ++i) ids[i] = id_of(cps[i]);
    return ids;
}

std::string Charset::fingerprint() const {
    Fnv1a h;
    h.update("charset");
    for (char32_t cp : chars_) h.update_u64(cp);
    return h.hex();
}

json Charset::to_json() const {
    json arr = json::array();
    for (char32_t cp : chars_) arr.push_back(static_cast<std::uint32_t>(cp));
    return json{{"chars", std::move(arr)}};
}

Charset Charset::from_json(const json& j) {
    std::vector<char32_t> chars;
    for (const auto& v : j.at("chars")) chars.push_back(static_cast<char32_t>(v.get<std::uint32_t>()));
    return Charset(std::move(chars));
}

// --- TokenVocab ------------------------------------------------------------------------------

TokenVocab::TokenVocab(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
        index_.emplace(tokens_[i], static_cast<std::int32_t>(i + 1));
    }
}

TokenVocab TokenVocab::build(std::span<const std::string> texts, std::size_t max_size) {
    std::map<std::string, std::size_t> counts;
    for (const auto& t : texts) {
        for (auto& tok : features::tokenize(t, true)) ++counts[std::move(tok)];
    }
    std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    if (ranked.size() > max_size) ranked.resize(max_size);
    std::vector<std::string> tokens;
    tokens.reserve(ranked.size());
    for (auto& [tok, n] : ranked) tokens.push_back(std::move(tok));
    return TokenVocab(std::move(tokens));
}

std::int32_t TokenVocab::id_of(std::string_view token) const {
    auto it = index_.find(std::string(token));
    return it == index_.end() ? kUnk : it->second;
}

std::vector<std::int32_t> TokenVocab::encode(std::string_view text, std::size_t max_tokens) const {
    auto tokens = features::tokenize(text, true);
    if (tokens.size() > max_tokens) tokens.resize(max_tokens);
    std::vector<std::int32_t> ids;
    ids.reserve(tokens.size());
    for (const auto& t : tokens) ids.push_back(id_of(t));
    return ids;
}

std::string TokenVocab::fingerprint() const {
    Fnv1a h;
    h.update("tokens");
    for (const auto& t : tokens_) h.update(t).update_u64(t.size());
    return h.hex();
}

json TokenVocab::to_json() const { return json{{"tokens", tokens_}}; }

TokenVocab TokenVocab::from_json(const json& j) {
    return TokenVocab(j.at("tokens").get<std::vector<std::string>>());
}

// --- static embeddings ----------------------------------------------------------------------

std::vector<double> StaticEmbeddings::mean() const {
    std::vector<double> m(dim, 0.0);
    if (tokens.empty()) return m;
    for (std::size_t r = 0; r < tokens.size(); ++r) {
        for (std::size_t k = 0; k < dim; ++k) m[k] += values[r * dim + k];
    }
    for (double& v : m) v /= static_cast<double>(tokens.size());
    return m;
}

std::vector<double> StaticEmbeddings::lookup(std::string_view token) const {
    for (std::size_t r = 0; r < tokens.size(); ++r) {
        if (tokens[r] == token) {
            return {values.begin() + static_cast<long>(r * dim),
                    values.begin() + static_cast<long>((r + 1) * dim)};
        }
    }
    return mean();
}

StaticEmbeddings parse_static_embeddings(std::string_view content) {
    StaticEmbeddings e;
    std::size_t line_no = 0, pos = 0, expected = 0;
    bool header = false;
    while (pos < content.size()) {
        std::size_t end = content.find('\n', pos);
        if (end == std::string_view::npos) end = content.size();
        std::string line(content.substr(pos, end - pos));
        pos = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (utf8::trim(line).empty()) continue;
        std::vector<std::string> fields;
        std::size_t i = 0;
        while (i < line.size()) {
            while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
            std::size_t j = i;
            while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
            if (j > i) fields.push_back(line.substr(i, j - i));
            i = j;
        }
        if (!header) {
            char* endp = nullptr;
            if (fields.size() != 2) {
                throw Error(ErrorCode::Format, "header must be \"n dim\"", line_no);
            }
            expected = std::strtoull(fields[0].c_str(), &endp, 10);
            e.dim = std::strtoull(fields[1].c_str(), &endp, 10);
            if (e.dim == 0) throw Error(ErrorCode::Format, "dimension must be positive", line_no);
            header = true;
            continue;
        }
        if (fields.size() != e.dim + 1) {
            throw Error(ErrorCode::Format,
                        "row has " + std::to_string(fields.size() - 1) + " values, header says " +
                            std::to_string(e.dim),
                        line_no);
        }
        e.tokens.push_back(fields[0]);
        for (std::size_t k = 1; k < fields.size(); ++k) {
            char* endp = nullptr;
            const double v = std::strtod(fields[k].c_str(), &endp);
            if (endp == fields[k].c_str() || *endp != '\0') {
                throw Error(ErrorCode::Format, "bad number '" + fields[k] + "'", line_no);
            }
            e.values.push_back(v);
        }
    }
    if (!header) throw Error(ErrorCode::Format, "empty embedding file");
    if (e.tokens.size() != expected) {
        throw Error(ErrorCode::Format, "header says " + std::to_string(expected) + " rows, found " +
                                           std::to_string(e.tokens.size()));
    }
    return e;
}

StaticEmbeddings import_static_embeddings(const std::filesystem::path& path) {
    return parse_static_embeddings(corpus::read_file(path));
}

std::string export_static_embeddings(const StaticEmbeddings& e) {
    std::string out = std::to_string(e.tokens.size()) + " " + std::to_string(e.dim) + "\n";
    char buf[40];
    for (std::size_t r = 0; r < e.tokens.size(); ++r) {
        out += e.tokens[r];
        for (std::size_t k = 0; k < e.dim; ++k) {
            std::snprintf(buf, sizeof buf, " %.17g", e.values[r * e.dim + k]);
            out += buf;
        }
        out += '\n';
    }
    return out;
}

// --- c-CNN -----------------------------------------------------------------------------------

void CharCnnConfig::validate() const {
    if (embed_dim == 0 || charset_size == 0 || max_len == 0 || filters_per_kernel == 0 ||
        kernel_sizes.empty()) {
        throw Error(ErrorCode::InvalidArgument, "c-CNN sizes must be positive");
    }
    for (auto k : kernel_sizes) {
        if (k == 0) throw Error(ErrorCode::InvalidArgument, "kernel sizes must be positive");
        if (k > max_len) throw Error(ErrorCode::InvalidArgument, "max_len below a kernel size");
    }
    if (dropout_rate < 0.0 || dropout_rate >= 1.0) {
        throw Error(ErrorCode::InvalidArgument, "dropout rate must be in [0, 1)");
    }
}

json CharCnnConfig::to_json() const {
    return json{{"embed_dim", embed_dim},       {"charset_size", charset_size},
                {"max_len", max_len},           {"filters_per_kernel", filters_per_kernel},
                {"kernel_sizes", kernel_sizes}, {"dropout_rate", dropout_rate},
                {"seed", seed},                 {"zero_head", zero_head}};
}

CharCnnConfig CharCnnConfig::from_json(const json& j) {
    CharCnnConfig c;
    c.embed_dim = j.at("embed_dim").get<std::size_t>();
    c.charset_size = j.at("charset_size").get<std::size_t>();
    c.max_len = j.at("max_len").get<std::size_t>();
    c.filters_per_kernel = j.at("filters_per_kernel").get<std::size_t>();
    c.kernel_sizes = j.at("kernel_sizes").get<std::vector<std::size_t>>();
    c.dropout_rate = j.at("dropout_rate").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.zero_head = j.value("zero_head", false);
    return c;
}

CharCnn::CharCnn(CharCnnConfig config, Charset charset)
    : config_(std::move(config)), charset_(std::move(charset)) {
    config_.validate();
    const std::size_t E = config_.embed_dim, F = config_.filters_per_kernel;
    Rng rng(config_.seed);
    emb_ = params_.add("embedding", {charset_.size(), E});
    init_uniform(params_[emb_].values, 1.0 / std::sqrt(static_cast<double>(E)), rng);
    std::fill_n(params_[emb_].values.begin(), E, 0.0);  // padding row
    for (auto k : config_.kernel_sizes) {
        const std::string name = "conv" + std::to_string(k);
        conv_w_.push_back(params_.add(name + ".W", {F, k * E}));
        conv_b_.push_back(params_.add(name + ".b", {F}));
        init_uniform(params_[conv_w_.back()].values, 1.0 / std::sqrt(static_cast<double>(k * E)),
                     rng);
    }
    const std::size_t feat = F * config_.kernel_sizes.size();
    out_w_ = params_.add("output.W", {2, feat});
    out_b_ = params_.add("output.b", {2});
    if (!config_.zero_head) {
        init_uniform(params_[out_w_].values, 1.0 / std::sqrt(static_cast<double>(feat)), rng);
    }
}

std::vector<std::int32_t> CharCnn::encode(std::string_view text) const {
    return charset_.encode(text, config_.max_len);
}

double CharCnn::run(std::span<const std::int32_t> ids, std::size_t label, GradSet* grads, Rng* rng,
                    std::array<double, 2>* probs) const {
    const std::size_t E = config_.embed_dim, F = config_.filters_per_kernel;
    const std::size_t L = std::min(ids.size(), config_.max_len);
    const auto used = ids.first(L);
    const std::size_t nb = config_.kernel_sizes.size();

    Vec x(L * E);
    embedding_forward(params_[emb_].values, E, used, x);
    Vec feat(nb * F);
    std::vector<ConvPoolCache> caches(nb);
    for (std::size_t b = 0; b < nb; ++b) {
        conv_pool_forward(params_[conv_w_[b]].values, params_[conv_b_[b]].values, F,
                          config_.kernel_sizes[b], E, x, L, config_.max_len,
                          MSpan(feat).subspan(b * F, F), caches[b]);
    }
    Vec mask;
    Vec h = feat;
    if (rng && config_.dropout_rate > 0.0) {
        mask.resize(feat.size());
        dropout_mask(config_.dropout_rate, *rng, mask);
        for (std::size_t i = 0; i < h.size(); ++i) h[i] *= mask[i];
    }
    Vec z(2), p(2), dz(2);
    dense_forward(params_[out_w_].values, params_[out_b_].values, h, z);
    const double loss = softmax_ce(z, label, p, dz);
    if (probs) *probs = {p[0], p[1]};
    if (!grads) return loss;

    auto& g = *grads;
    Vec dh(h.size(), 0.0);
    dense_backward(params_[out_w_].values, h, dz, g[out_w_], g[out_b_], dh);
    if (!mask.empty()) {
        for (std::size_t i = 0; i < dh.size(); ++i) dh[i] *= mask[i];
    }
    Vec dx(L * E, 0.0);
    for (std::size_t b = 0; b < nb; ++b) {
        conv_pool_backward(params_[conv_w_[b]].values, F, config_.kernel_sizes[b], E, x, L,
                           caches[b], CSpan(dh).subspan(b * F, F), g[conv_w_[b]], g[conv_b_[b]],
                           dx);
    }
    embedding_backward(E, used, dx, g[emb_], Charset::kPad);
    return loss;
}

std::array<double, 2> CharCnn::forward(std::span<const std::int32_t> ids) const {
    std::array<double, 2> p{};
    run(ids, 0, nullptr, nullptr, &p);
    return p;
}

double CharCnn::loss(std::span<const std::int32_t> ids, std::size_t label, GradSet* grads,
                     Rng* dropout_rng) const {
    return run(ids, label, grads, dropout_rng, nullptr);
}

// --- seqnet ------------------------------------------------------------------------------------

void SeqNetConfig::validate() const {
    if (embed_dim == 0 || hidden_dim == 0 || attention_dim == 0 || max_tokens == 0) {
        throw Error(ErrorCode::InvalidArgument, "seqnet sizes must be positive");
    }
    for (auto d : dense_dims) {
        if (d == 0) throw Error(ErrorCode::InvalidArgument, "dense sizes must be positive");
    }
    if (source == EmbeddingSource::TrainableTable && vocab_size == 0) {
        throw Error(ErrorCode::InvalidArgument, "vocabulary size must be positive");
    }
    if (dropout_rate < 0.0 || dropout_rate >= 1.0) {
        throw Error(ErrorCode::InvalidArgument, "dropout rate must be in [0, 1)");
    }
}

json SeqNetConfig::to_json() const {
    return json{{"embedding_source",
                 source == EmbeddingSource::TrainableTable ? "trainable_table" : "static_file"},
                {"vocab_size", vocab_size},
                {"embed_dim", embed_dim},
                {"static_path", static_path},
                {"hidden_dim", hidden_dim},
                {"attention_dim", attention_dim},
                {"dense_dims", dense_dims},
                {"dropout_rate", dropout_rate},
                {"layer_norm", layer_norm},
                {"max_tokens", max_tokens},
                {"seed", seed}};
}

SeqNetConfig SeqNetConfig::from_json(const json& j) {
    SeqNetConfig c;
    c.source = j.at("embedding_source").get<std::string>() == "static_file"
                   ? EmbeddingSource::StaticFile
                   : EmbeddingSource::TrainableTable;
    c.vocab_size = j.at("vocab_size").get<std::size_t>();
    c.embed_dim = j.at("embed_dim").get<std::size_t>();
    c.static_path = j.value("static_path", "");
    c.hidden_dim = j.at("hidden_dim").get<std::size_t>();
    c.attention_dim = j.at("attention_dim").get<std::size_t>();
    c.dense_dims = j.at("dense_dims").get<std::array<std::size_t, 3>>();
    c.dropout_rate = j.at("dropout_rate").get<double>();
    c.layer_norm = j.at("layer_norm").get<bool>();
    c.max_tokens = j.at("max_tokens").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
}

SeqNet::SeqNet(SeqNetConfig config, TokenVocab vocab, const StaticEmbeddings* static_embeddings)
    : config_(std::move(config)), vocab_(std::move(vocab)) {
    if (static_embeddings) {
        config_.source = EmbeddingSource::StaticFile;
        config_.embed_dim = static_embeddings->dim;
        vocab_ = TokenVocab(static_embeddings->tokens);
    }
    config_.validate();
    const std::size_t E = config_.embed_dim, H = config_.hidden_dim, A = config_.attention_dim;
    const std::size_t D = 2 * H;
    Rng rng(config_.seed);
    auto uniform_fan_in = [&](std::size_t idx, std::size_t fan_in) {
        init_uniform(params_[idx].values, 1.0 / std::sqrt(static_cast<double>(fan_in)), rng);
    };

    emb_ = params_.add("embedding", {vocab_.size(), E});
    if (config_.source == EmbeddingSource::StaticFile) {
        params_[emb_].frozen = true;
        if (static_embeddings) {
            auto& t = params_[emb_].values;
            const auto m = static_embeddings->mean();
            std::copy(m.begin(), m.end(), t.begin());
            std::copy(static_embeddings->values.begin(), static_embeddings->values.end(),
                      t.begin() + static_cast<long>(E));
        }
    } else {
        uniform_fan_in(emb_, E);
    }
    const char* dirs[] = {"lstm_fwd", "lstm_bwd"};
    for (int d = 0; d < 2; ++d) {
        auto& ids = d == 0 ? fwd_ : bwd_;
        const std::string name = dirs[d];
        ids[0] = params_.add(name + ".Wx", {4 * H, E});
        ids[1] = params_.add(name + ".Wh", {4 * H, H});
        ids[2] = params_.add(name + ".b", {4 * H});
        uniform_fan_in(ids[0], E + H);
        uniform_fan_in(ids[1], E + H);
        std::fill_n(params_[ids[2]].values.begin() + static_cast<long>(H), H, 1.0);  // forget gate
    }
    att_w_ = params_.add("attention.W", {A, D});
    att_b_ = params_.add("attention.b", {A});
    att_ctx_ = params_.add("attention.context", {A});
    uniform_fan_in(att_w_, D);
    uniform_fan_in(att_ctx_, A);
    std::size_t in = D;
    for (std::size_t l = 0; l < 3; ++l) {
        const std::string name = "dense" + std::to_string(l + 1);
        const std::size_t out = config_.dense_dims[l];
        dense_w_[l] = params_.add(name + ".W", {out, in});
        dense_b_[l] = params_.add(name + ".b", {out});
        uniform_fan_in(dense_w_[l], in);
        const std::string norm = "norm" + std::to_string(l + 1);
        norm_g_[l] = params_.add(norm + ".gamma", {out});
        norm_b_[l] = params_.add(norm + ".beta", {out});
        std::fill(params_[norm_g_[l]].values.begin(), params_[norm_g_[l]].values.end(), 1.0);
        in = out;
    }
    out_w_ = params_.add("output.W", {2, in});
    out_b_ = params_.add("output.b", {2});
    uniform_fan_in(out_w_, in);
}

std::vector<std::int32_t> SeqNet::encode(std::string_view text) const {
    return vocab_.encode(text, config_.max_tokens);
}

double SeqNet::run(std::span<const std::int32_t> ids, std::size_t label, GradSet* grads, Rng* rng,
                   std::array<double, 2>* probs, std::vector<double>* attention) const {
    if (ids.empty()) throw Error(ErrorCode::InvalidArgument, "seqnet needs at least one token");
    const std::size_t T = ids.size(), E = config_.embed_dim, H = config_.hidden_dim;
    const std::size_t D = 2 * H, A = config_.attention_dim;
    const auto& P = params_;

    Vec x(T * E);
    embedding_forward(P[emb_].values, E, ids, x);
    Vec hf(T * H), hb(T * H);
    LstmCache cf, cb;
    lstm_forward(P[fwd_[0]].values, P[fwd_[1]].values, P[fwd_[2]].values, H, E, x, T, false, hf, cf);
    lstm_forward(P[bwd_[0]].values, P[bwd_[1]].values, P[bwd_[2]].values, H, E, x, T, true, hb, cb);
    Vec hs(T * D);
    for (std::size_t t = 0; t < T; ++t) {
        std::copy_n(hf.begin() + static_cast<long>(t * H), H, hs.begin() + static_cast<long>(t * D));
        std::copy_n(hb.begin() + static_cast<long>(t * H), H,
                    hs.begin() + static_cast<long>(t * D + H));
    }
    Vec pooled(D);
    AttentionCache ac;
    attention_forward(P[att_w_].values, P[att_b_].values, P[att_ctx_].values, A, D, hs, T, pooled,
                      ac);
    if (attention) *attention = ac.alpha;

    std::array<Vec, 4> inputs;  // inputs[l] feeds dense l; inputs[3] feeds the output layer
    std::array<Vec, 3> relu_out, masks;
    std::array<LayerNormCache, 3> norms;
    inputs[0] = pooled;
    for (std::size_t l = 0; l < 3; ++l) {
        const std::size_t n = config_.dense_dims[l];
        Vec z(n);
        dense_forward(P[dense_w_[l]].values, P[dense_b_[l]].values, inputs[l], z);
        relu_out[l].resize(n);
        relu_forward(z, relu_out[l]);
        Vec y = relu_out[l];
        if (config_.layer_norm) {
            layer_norm_forward(P[norm_g_[l]].values, P[norm_b_[l]].values, relu_out[l], y, norms[l]);
        }
        if (rng && config_.dropout_rate > 0.0) {
            masks[l].resize(n);
            dropout_mask(config_.dropout_rate, *rng, masks[l]);
            for (std::size_t i = 0; i < n; ++i) y[i] *= masks[l][i];
        }
        inputs[l + 1] = std::move(y);
    }
    Vec z(2), p(2), dz(2);
    dense_forward(P[out_w_].values, P[out_b_].values, inputs[3], z);
    const double loss = softmax_ce(z, label, p, dz);
    if (probs) *probs = {p[0], p[1]};
    if (!grads) return loss;

    auto& g = *grads;
    Vec din(inputs[3].size(), 0.0);
    dense_backward(P[out_w_].values, inputs[3], dz, g[out_w_], g[out_b_], din);
    for (std::size_t l = 3; l-- > 0;) {
        const std::size_t n = config_.dense_dims[l];
        if (!masks[l].empty()) {
            for (std::size_t i = 0; i < n; ++i) din[i] *= masks[l][i];
        }
        Vec dr(n, 0.0);
        if (config_.layer_norm) {
            layer_norm_backward(P[norm_g_[l]].values, norms[l], din, g[norm_g_[l]], g[norm_b_[l]],
                                dr);
        } else {
            dr = din;
        }
        Vec dzl(n, 0.0);
        relu_backward(relu_out[l], dr, dzl);
        Vec dprev(inputs[l].size(), 0.0);
        dense_backward(P[dense_w_[l]].values, inputs[l], dzl, g[dense_w_[l]], g[dense_b_[l]], dprev);
        din = std::move(dprev);
    }
    Vec dhs(T * D, 0.0);
    attention_backward(P[att_w_].values, P[att_ctx_].values, A, D, hs, T, ac, din, g[att_w_],
                       g[att_b_], g[att_ctx_], dhs);
    Vec dhf(T * H), dhb(T * H);
    for (std::size_t t = 0; t < T; ++t) {
        std::copy_n(dhs.begin() + static_cast<long>(t * D), H, dhf.begin() + static_cast<long>(t * H));
        std::copy_n(dhs.begin() + static_cast<long>(t * D + H), H,
                    dhb.begin() + static_cast<long>(t * H));
    }
    const bool frozen = P[emb_].frozen;
    Vec dx(frozen ? 0 : T * E, 0.0);
    lstm_backward(P[fwd_[0]].values, P[fwd_[1]].values, H, E, x, false, cf, dhf, g[fwd_[0]],
                  g[fwd_[1]], g[fwd_[2]], dx);
    lstm_backward(P[bwd_[0]].values, P[bwd_[1]].values, H, E, x, true, cb, dhb, g[bwd_[0]],
                  g[bwd_[1]], g[bwd_[2]], dx);
    if (!frozen) embedding_backward(E, ids, dx, g[emb_]);
    return loss;
}

std::array<double, 2> SeqNet::forward(std::span<const std::int32_t> ids) const {
    std::array<double, 2> p{};
    run(ids, 0, nullptr, nullptr, &p, nullptr);
    return p;
}

double SeqNet::loss(std::span<const std::int32_t> ids, std::size_t label, GradSet* grads,
                    Rng* dropout_rng) const {
    return run(ids, label, grads, dropout_rng, nullptr, nullptr);
}

std::vector<double> SeqNet::attention_weights(std::span<const std::int32_t> ids) const {
    std::vector<double> alpha;
    run(ids, 0, nullptr, nullptr, nullptr, &alpha);
    return alpha;
}

}  // namespace styleprof::nn
