#include "styleprof/nn/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "styleprof/error.hpp"
#include "styleprof/eval.hpp"
#include "styleprof/random.hpp"

namespace styleprof::nn {

using nlohmann::json;

void TrainConfig::validate() const {
    if (!(dev_fraction > 0.0 && dev_fraction < 0.5)) {
        throw Error(ErrorCode::InvalidArgument, "dev_fraction must be in (0, 0.5)");
    }
    if (batch_size == 0 || max_epochs == 0 || shards == 0) {
        throw Error(ErrorCode::InvalidArgument, "batch size, epochs and shards must be positive");
    }
    if (!(learning_rate > 0.0)) throw Error(ErrorCode::InvalidArgument, "learning rate must be > 0");
}

json TrainConfig::to_json() const {
    return json{{"dev_fraction", dev_fraction}, {"batch_size", batch_size},
                {"max_epochs", max_epochs},     {"patience", patience},
                {"learning_rate", learning_rate}, {"seed", seed},
                {"shards", shards},             {"optimizer", "adam"}};
}

TrainConfig TrainConfig::from_json(const json& j) {
    TrainConfig c;
    c.dev_fraction = j.at("dev_fraction").get<double>();
    c.batch_size = j.at("batch_size").get<std::size_t>();
    c.max_epochs = j.at("max_epochs").get<std::size_t>();
    c.patience = j.at("patience").get<std::size_t>();
    c.learning_rate = j.at("learning_rate").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.shards = j.at("shards").get<std::size_t>();
    return c;
}

json TrainLog::to_json() const {
    json arr = json::array();
    for (const auto& e : epochs) {
        arr.push_back(json{{"epoch", e.epoch},
                           {"train_loss", e.train_loss},
                           {"dev_loss", e.dev_loss},
                           {"dev_macro_f1", e.dev_macro_f1}});
    }
    return json{{"epochs", std::move(arr)},
                {"best_epoch", best_epoch},
                {"n_train", n_train},
                {"n_dev", n_dev}};
}

TrainLog TrainLog::from_json(const json& j) {
    TrainLog log;
    for (const auto& e : j.at("epochs")) {
        log.epochs.push_back(EpochLog{e.at("epoch").get<std::size_t>(),
                                      e.at("train_loss").get<double>(),
                                      e.at("dev_loss").get<double>(),
                                      e.at("dev_macro_f1").get<double>()});
    }
    log.best_epoch = j.at("best_epoch").get<std::size_t>();
    log.n_train = j.at("n_train").get<std::size_t>();
    log.n_dev = j.at("n_dev").get<std::size_t>();
    return log;
}

bool EarlyStopper::update(std::size_t epoch, double macro_f1, double loss) {
    const bool first = best_epoch_ == 0;
    const bool improved = first || macro_f1 > best_f1_;
    const bool better = improved || (macro_f1 == best_f1_ && loss < best_loss_);
    since_best_ = improved ? 0 : since_best_ + 1;
    if (better) {
        best_epoch_ = epoch;
        best_f1_ = macro_f1;
        best_loss_ = loss;
    }
    return better;
}

namespace {

constexpr std::uint64_t kDropoutStream = 0x632be59bd9b4e019ULL;

struct Encoded {
    std::vector<std::int32_t> ids;
    std::size_t label = 0;
};

}  // namespace

TrainLog train_network(Network& net, std::span<const corpus::LabeledText> data,
                       const TrainConfig& config) {
    config.validate();
    if (data.size() < 20) {
        throw Error(ErrorCode::DegenerateTraining, "need at least 20 labeled texts, got " +
                                                       std::to_string(data.size()));
    }
    const auto labels = corpus::labels_of(data);
    const auto n_yes = std::count(labels.begin(), labels.end(), true);
    if (n_yes == 0 || n_yes == static_cast<long>(labels.size())) {
        throw Error(ErrorCode::DegenerateTraining, "training data contains a single class");
    }
    const auto dev_n = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(config.dev_fraction * static_cast<double>(data.size()))));
    const auto split = corpus::stratified_split_indices(labels, dev_n, config.seed);

    std::vector<Encoded> encoded(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        encoded[i].ids = net.encode(data[i].text);
        encoded[i].label = data[i].label ? 1 : 0;
    }
    const auto& train_idx = split.train;
    const auto& dev_idx = split.test;

    TrainLog log;
    log.n_train = train_idx.size();
    log.n_dev = dev_idx.size();

    auto& params = net.params();
    Adam adam(params, AdamConfig{config.learning_rate});
    EarlyStopper stopper(config.patience);
    std::vector<std::vector<double>> best(params.count());
    for (std::size_t i = 0; i < params.count(); ++i) best[i] = params[i].values;

    const std::size_t S = config.shards;
    std::vector<GradSet> shard_grads(S, params.zero_grads());
    std::vector<double> shard_loss(S, 0.0);
    GradSet total = params.zero_grads();
    std::vector<std::size_t> order(train_idx.begin(), train_idx.end());
    std::vector<std::array<double, 2>> dev_probs(dev_idx.size());

    for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
        std::copy(train_idx.begin(), train_idx.end(), order.begin());
        Rng shuffle_rng = Rng::derive(config.seed, epoch);
        shuffle_rng.shuffle(std::span<std::size_t>(order));
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t m = std::min(config.batch_size, order.size() - start);
#pragma omp parallel for schedule(static)
            for (long s = 0; s < static_cast<long>(S); ++s) {
                auto& g = shard_grads[static_cast<std::size_t>(s)];
                zero(g);
                double sum = 0.0;
                for (std::size_t j = static_cast<std::size_t>(s); j < m; j += S) {
                    const std::size_t idx = order[start + j];
                    Rng rng = Rng::derive(config.seed ^ kDropoutStream, (epoch << 32) | idx);
                    sum += net.loss(encoded[idx].ids, encoded[idx].label, &g, &rng);
                }
                shard_loss[static_cast<std::size_t>(s)] = sum;
            }
            zero(total);
            double batch_loss = 0.0;
            for (std::size_t s = 0; s < S; ++s) {
                accumulate(total, shard_grads[s]);
                batch_loss += shard_loss[s];
            }
            if (!std::isfinite(batch_loss)) {
                throw Error(ErrorCode::Divergence,
                            "non-finite training loss at epoch " + std::to_string(epoch));
            }
            scale(total, 1.0 / static_cast<double>(m));
            adam.step(params, total);
            epoch_loss += batch_loss;
        }

#pragma omp parallel for schedule(static)
        for (long k = 0; k < static_cast<long>(dev_idx.size()); ++k) {
            const auto& ex = encoded[dev_idx[static_cast<std::size_t>(k)]];
            dev_probs[static_cast<std::size_t>(k)] = net.forward(ex.ids);
        }
        std::vector<bool> pred, gold;
        double dev_loss = 0.0;
        for (std::size_t k = 0; k < dev_idx.size(); ++k) {
            const auto& ex = encoded[dev_idx[k]];
            const double p = std::max(dev_probs[k][ex.label], 1e-300);
            dev_loss -= std::log(p);
            pred.push_back(dev_probs[k][1] >= 0.5);
            gold.push_back(ex.label == 1);
        }
        dev_loss /= static_cast<double>(dev_idx.size());
        const double f1 = eval::macro_prf(pred, gold).macro_f1;
        const double train_loss = epoch_loss / static_cast<double>(order.size());
        if (!std::isfinite(train_loss) || !std::isfinite(dev_loss)) {
            throw Error(ErrorCode::Divergence, "non-finite loss at epoch " + std::to_string(epoch));
        }
        log.epochs.push_back(EpochLog{epoch, train_loss, dev_loss, f1});
        if (stopper.update(epoch, f1, dev_loss)) {
            for (std::size_t i = 0; i < params.count(); ++i) best[i] = params[i].values;
        }
        if (stopper.should_stop()) break;
    }
    for (std::size_t i = 0; i < params.count(); ++i) params[i].values = best[i];
    log.best_epoch = stopper.best_epoch();
    return log;
}

namespace {

std::vector<std::string> texts_of(std::span<const corpus::LabeledText> data) {
    std::vector<std::string> out;
    out.reserve(data.size());
    for (const auto& d : data) out.push_back(d.text);
    return out;
}

}  // namespace

std::unique_ptr<CharCnn> train_ccnn(std::span<const corpus::LabeledText> data,
                                    const CharCnnConfig& config, const TrainConfig& train,
                                    TrainLog* log) {
    const auto texts = texts_of(data);
    auto net = std::make_unique<CharCnn>(config, Charset::build(texts, config.charset_size));
    auto l = train_network(*net, data, train);
    if (log) *log = std::move(l);
    return net;
}

std::unique_ptr<SeqNet> train_seqnet(std::span<const corpus::LabeledText> data,
                                     const SeqNetConfig& config, const TrainConfig& train,
                                     TrainLog* log) {
    std::unique_ptr<SeqNet> net;
    if (config.source == EmbeddingSource::StaticFile) {
        const auto table = import_static_embeddings(config.static_path);
        net = std::make_unique<SeqNet>(config, TokenVocab{}, &table);
    } else {
        const auto texts = texts_of(data);
        net = std::make_unique<SeqNet>(config, TokenVocab::build(texts, config.vocab_size));
    }
    auto l = train_network(*net, data, train);
    if (log) *log = std::move(l);
    return net;
}

// --- gradient checking ------------------------------------------------------------------

double relative_error(double analytic, double numeric, double floor) {
    const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
    return std::abs(analytic - numeric) / denom;
}

GradCheckResult grad_check(Network& net, std::span<const GradCheckExample> examples, double step) {
    auto total_loss = [&] {
        double s = 0.0;
        for (const auto& ex : examples) s += net.loss(ex.ids, ex.label, nullptr, nullptr);
        if (!std::isfinite(s)) throw Error(ErrorCode::Divergence, "non-finite loss in gradient check");
        return s;
    };
    auto& params = net.params();
    GradSet analytic = params.zero_grads();
    for (const auto& ex : examples) net.loss(ex.ids, ex.label, &analytic, nullptr);
    total_loss();

    GradCheckResult result;
    for (std::size_t i = 0; i < params.count(); ++i) {
        auto& t = params[i];
        if (t.frozen) continue;
        TensorGradError err{t.name, 0.0};
        for (std::size_t k = 0; k < t.size(); ++k) {
            const double saved = t.values[k];
            t.values[k] = saved + step;
            const double lp = total_loss();
            t.values[k] = saved - step;
            const double lm = total_loss();
            t.values[k] = saved;
            const double numeric = (lp - lm) / (2.0 * step);
            err.max_relative_error =
                std::max(err.max_relative_error, relative_error(analytic[i][k], numeric));
        }
        result.max_relative_error = std::max(result.max_relative_error, err.max_relative_error);
        result.per_tensor.push_back(std::move(err));
    }
    return result;
}

namespace {

void randomize(ParamSet& params, std::uint64_t seed) {
    Rng rng(seed);
    for (auto& t : params.tensors()) init_uniform(t.values, 0.5, rng);
}

}  // namespace

GradCheckResult grad_check_tiny(std::string_view model_kind, std::uint64_t seed) {
    if (model_kind == "ccnn") {
        CharCnnConfig cfg;
        cfg.embed_dim = 4;
        cfg.max_len = 8;
        cfg.filters_per_kernel = 3;
        cfg.kernel_sizes = {2, 3};
        cfg.dropout_rate = 0.0;
        cfg.seed = seed;
        CharCnn net(cfg, Charset({U'a', U'b', U'c', U'd', U'e', U'f'}));
        randomize(net.params(), seed);
        std::vector<GradCheckExample> ex{{net.encode("abcde"), 1},
                                         {net.encode("fax"), 0},
                                         {net.encode("abcdefabcd"), 1},
                                         {net.encode("b"), 0}};
        return grad_check(net, ex);
    }
    if (model_kind == "seqnet") {
        SeqNetConfig cfg;
        cfg.embed_dim = 3;
        cfg.hidden_dim = 4;
        cfg.attention_dim = 4;
        cfg.dense_dims = {5, 4, 3};
        cfg.dropout_rate = 0.0;
        cfg.seed = seed;
        SeqNet net(cfg, TokenVocab({"the", "cat", "sat", "mat"}));
        randomize(net.params(), seed);
        std::vector<GradCheckExample> ex{{net.encode("the cat sat"), 1},
                                         {net.encode("mat"), 0},
                                         {net.encode("dog the mat cat"), 0}};
        return grad_check(net, ex);
    }
    throw Error(ErrorCode::InvalidArgument, "unknown model kind " + std::string(model_kind));
}

}  // namespace styleprof::nn
