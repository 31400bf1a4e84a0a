#include "styleprof/model.hpp"

#include <bit>
#include <cmath>
#include <cstring>

#include "styleprof/error.hpp"
#include "styleprof/hash.hpp"
#include "styleprof/kernels.hpp"

namespace styleprof::model {

using nlohmann::json;

std::string_view to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::NgSvm: return "ngsvm";
        case ModelKind::CharCnn: return "ccnn";
        case ModelKind::SeqNet: return "seqnet";
    }
    return "?";
}

std::optional<ModelKind> parse_model_kind(std::string_view s) {
    if (s == "ngsvm") return ModelKind::NgSvm;
    if (s == "ccnn") return ModelKind::CharCnn;
    if (s == "seqnet") return ModelKind::SeqNet;
    return std::nullopt;
}

std::vector<double> Classifier::probability_batch(std::span<const std::string> texts) const {
    std::vector<double> out(texts.size());
    for (std::size_t i = 0; i < texts.size(); ++i) out[i] = probability_yes(texts[i]);
    return out;
}

std::string Classifier::fingerprint() const { return fingerprint_of(serialize()); }

void Classifier::save(const std::filesystem::path& path) const {
    corpus::write_file(path, serialize());
}

namespace {

json task_json(std::optional<Characteristic> task) {
    return task ? json(std::string(wire_name(*task))) : json(nullptr);
}

struct TensorRef {
    std::string name;
    std::vector<std::size_t> shape;
    const std::vector<double>* values;
};

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_u64(std::string_view bytes, std::size_t at, int width) {
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) {
        v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[at + i])) << (8 * i);
    }
    return v;
}

std::string write_container(json header, const std::vector<TensorRef>& tensors) {
    json dir = json::array();
    std::size_t offset = 0;
    for (const auto& t : tensors) {
        dir.push_back(json{{"name", t.name}, {"shape", t.shape}, {"offset", offset},
                           {"count", t.values->size()}});
        offset += t.values->size();
    }
    header["tensors"] = std::move(dir);
    header["format"] = "styleprof-model";
    header["byte_order"] = "little-endian float64";
    const std::string text = header.dump();
    std::string out(kMagic);
    put_u32(out, kContainerVersion);
    put_u64(out, text.size());
    out += text;
    out.reserve(out.size() + offset * 8);
    for (const auto& t : tensors) {
        for (double v : *t.values) put_u64(out, std::bit_cast<std::uint64_t>(v));
    }
    return out;
}

struct Parsed {
    json header;
    std::string_view payload;
};

Parsed parse_container(std::string_view bytes) {
    if (bytes.size() < 20 || bytes.substr(0, 8) != kMagic) {
        throw Error(ErrorCode::Format, "not a styleprof model container");
    }
    const auto version = static_cast<std::uint32_t>(get_u64(bytes, 8, 4));
    if (version != kContainerVersion) {
        throw Error(ErrorCode::Format, "unsupported container version " + std::to_string(version));
    }
    const std::uint64_t len = get_u64(bytes, 12, 8);
    if (20 + len > bytes.size()) throw Error(ErrorCode::Format, "truncated container header");
    Parsed p;
    try {
        p.header = json::parse(bytes.substr(20, len));
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Format, std::string("bad container header: ") + e.what());
    }
    p.payload = bytes.substr(20 + len);
    std::size_t doubles = 0;
    try {
        for (const auto& t : p.header.at("tensors")) doubles += t.at("count").get<std::size_t>();
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Format, std::string("bad tensor table: ") + e.what());
    }
    if (doubles * 8 != p.payload.size()) {
        throw Error(ErrorCode::Format, "payload size does not match the tensor table");
    }
    return p;
}

std::vector<double> read_tensor(const Parsed& p, std::string_view name,
                                const std::vector<std::size_t>& expected_shape) {
    for (const auto& t : p.header.at("tensors")) {
        if (t.at("name").get<std::string>() != name) continue;
        const auto shape = t.at("shape").get<std::vector<std::size_t>>();
        if (shape != expected_shape) {
            throw Error(ErrorCode::Format, "tensor " + std::string(name) + " has unexpected shape");
        }
        const auto offset = t.at("offset").get<std::size_t>();
        const auto count = t.at("count").get<std::size_t>();
        if ((offset + count) * 8 > p.payload.size()) {
            throw Error(ErrorCode::Format, "truncated tensor " + std::string(name));
        }
        std::vector<double> values(count);
        for (std::size_t i = 0; i < count; ++i) {
            values[i] = std::bit_cast<double>(get_u64(p.payload, (offset + i) * 8, 8));
        }
        return values;
    }
    throw Error(ErrorCode::Format, "container lacks tensor " + std::string(name));
}

std::optional<Characteristic> parse_task(const json& j) {
    if (j.is_null()) return std::nullopt;
    auto c = parse_characteristic(j.get<std::string>());
    if (!c) throw Error(ErrorCode::Format, "unknown task in container");
    return c;
}

}  // namespace

// --- linear ---------------------------------------------------------------------------------

LinearClassifier::LinearClassifier(features::Vocabulary vocab, linear::LinearModel model,
                                   std::optional<Characteristic> task)
    : vocab_(std::move(vocab)), model_(std::move(model)), task_(task) {
    if (model_.dimension() != vocab_.size()) {
        throw Error(ErrorCode::DimensionMismatch, "model and vocabulary dimensions differ");
    }
}

double LinearClassifier::margin(std::string_view text) const {
    return linear::margin_of(model_, features::vectorize(text, vocab_));
}

double LinearClassifier::probability_yes(std::string_view text) const {
    return linear::probability(model_.calibration, margin(text));
}

std::vector<double> LinearClassifier::probability_batch(std::span<const std::string> texts) const {
    const auto xs = kernels::parallel::vectorize_batch(texts, vocab_);
    auto m = kernels::parallel::margins(model_, xs);
    for (double& v : m) v = linear::probability(model_.calibration, v);
    return m;
}

json LinearClassifier::describe() const {
    return json{{"kind", "ngsvm"},
                {"task", task_json(task_)},
                {"config", {{"C", model_.config.C},
                            {"epochs", model_.config.epochs},
                            {"seed", model_.config.seed}}},
                {"dimension", model_.dimension()},
                {"calibration", {{"a", model_.calibration.a}, {"b", model_.calibration.b}}},
                {"vocab_fingerprint", vocab_.fingerprint()}};
}

std::string LinearClassifier::serialize() const {
    json h = describe();
    h["objective_log"] = model_.objective_log;
    h["symbols"] = json::parse(vocab_.to_json());
    h["symbols_fingerprint"] = vocab_.fingerprint();
    const std::vector<double> bias{model_.bias};
    return write_container(std::move(h), {{"weights", {model_.dimension()}, &model_.weights},
                                          {"bias", {1}, &bias}});
}

// --- neural -----------------------------------------------------------------------------------

NeuralClassifier::NeuralClassifier(std::unique_ptr<nn::Network> net, nn::TrainConfig train,
                                   nn::TrainLog log, std::optional<Characteristic> task)
    : net_(std::move(net)), train_(train), log_(std::move(log)), task_(task) {}

ModelKind NeuralClassifier::kind() const {
    return net_->kind() == "ccnn" ? ModelKind::CharCnn : ModelKind::SeqNet;
}

double NeuralClassifier::probability_yes(std::string_view text) const {
    return net_->predict(text)[1];
}

std::vector<double> NeuralClassifier::probability_batch(std::span<const std::string> texts) const {
    const auto probs = kernels::parallel::forward_batch(*net_, texts);
    std::vector<double> out(probs.size());
    for (std::size_t i = 0; i < probs.size(); ++i) out[i] = probs[i][1];
    return out;
}

json NeuralClassifier::describe() const {
    return json{{"kind", std::string(net_->kind())},
                {"task", task_json(task_)},
                {"config", net_->config_json()},
                {"train_config", train_.to_json()},
                {"parameters", net_->params().total_size()},
                {"symbols_fingerprint", net_->symbols_fingerprint()}};
}

std::string NeuralClassifier::serialize() const {
    json h = describe();
    h["log"] = log_.to_json();
    h["symbols"] = net_->symbols_json();
    std::vector<TensorRef> refs;
    for (const auto& t : net_->params().tensors()) refs.push_back({t.name, t.shape, &t.values});
    return write_container(std::move(h), refs);
}

// --- stub ---------------------------------------------------------------------------------------

StubClassifier::StubClassifier(Fn fn, std::optional<Characteristic> task, std::string tag)
    : fn_(std::move(fn)), task_(task), tag_(std::move(tag)) {}

json StubClassifier::describe() const {
    return json{{"kind", "stub"}, {"task", task_json(task_)}, {"tag", tag_}};
}

// --- loading -------------------------------------------------------------------------------------

json read_header(std::string_view bytes) { return parse_container(bytes).header; }

std::unique_ptr<Classifier> deserialize(std::string_view bytes) {
    const Parsed p = parse_container(bytes);
    const auto& h = p.header;
    try {
        const auto kind = parse_model_kind(h.at("kind").get<std::string>());
        if (!kind) throw Error(ErrorCode::Format, "unknown model kind in container");
        const auto task = parse_task(h.at("task"));
        if (*kind == ModelKind::NgSvm) {
            auto vocab = features::Vocabulary::from_json(h.at("symbols").dump());
            if (vocab.fingerprint() != h.at("symbols_fingerprint").get<std::string>()) {
                throw Error(ErrorCode::Format, "vocabulary fingerprint mismatch");
            }
            linear::LinearModel m;
            m.config.C = h.at("config").at("C").get<double>();
            m.config.epochs = h.at("config").at("epochs").get<std::size_t>();
            m.config.seed = h.at("config").at("seed").get<std::uint64_t>();
            m.calibration.a = h.at("calibration").at("a").get<double>();
            m.calibration.b = h.at("calibration").at("b").get<double>();
            m.objective_log = h.at("objective_log").get<std::vector<double>>();
            m.vocab_fingerprint = vocab.fingerprint();
            m.weights = read_tensor(p, "weights", {vocab.size()});
            m.bias = read_tensor(p, "bias", {1})[0];
            return std::make_unique<LinearClassifier>(std::move(vocab), std::move(m), task);
        }
        std::unique_ptr<nn::Network> net;
        if (*kind == ModelKind::CharCnn) {
            net = std::make_unique<nn::CharCnn>(nn::CharCnnConfig::from_json(h.at("config")),
                                                nn::Charset::from_json(h.at("symbols")));
        } else {
            net = std::make_unique<nn::SeqNet>(nn::SeqNetConfig::from_json(h.at("config")),
                                               nn::TokenVocab::from_json(h.at("symbols")));
        }
        if (net->symbols_fingerprint() != h.at("symbols_fingerprint").get<std::string>()) {
            throw Error(ErrorCode::Format, "symbol table fingerprint mismatch");
        }
        for (auto& t : net->params().tensors()) t.values = read_tensor(p, t.name, t.shape);
        return std::make_unique<NeuralClassifier>(std::move(net),
                                                  nn::TrainConfig::from_json(h.at("train_config")),
                                                  nn::TrainLog::from_json(h.at("log")), task);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::Format, std::string("bad container header: ") + e.what());
    }
}

std::unique_ptr<Classifier> load_classifier(const std::filesystem::path& path) {
    return deserialize(corpus::read_file(path));
}

// --- training ---------------------------------------------------------------------------------------

std::unique_ptr<Classifier> train_classifier(std::span<const corpus::LabeledText> data,
                                             std::optional<Characteristic> task,
                                             const TrainOptions& options) {
    nn::TrainConfig train = options.train;
    train.seed = options.seed;
    switch (options.kind) {
        case ModelKind::NgSvm: {
            train.validate();
            if (data.size() < 4) {
                throw Error(ErrorCode::DegenerateTraining, "too few training texts");
            }
            const auto labels = corpus::labels_of(data);
            const auto dev_n = std::max<std::size_t>(
                1, static_cast<std::size_t>(
                       std::llround(train.dev_fraction * static_cast<double>(data.size()))));
            const auto split = corpus::stratified_split_indices(labels, dev_n, options.seed);
            std::vector<std::string> texts, dev_texts;
            std::vector<bool> y, dev_y;
            for (auto i : split.train) {
                texts.push_back(data[i].text);
                y.push_back(data[i].label);
            }
            for (auto i : split.test) {
                dev_texts.push_back(data[i].text);
                dev_y.push_back(data[i].label);
            }
            auto vocab = features::build_vocab(texts, options.vocab);
            const auto xs = kernels::parallel::vectorize_batch(texts, vocab);
            linear::LinearConfig cfg = options.linear;
            cfg.seed = options.seed;
            auto m = linear::train_linear(xs, y, cfg);
            m.vocab_fingerprint = vocab.fingerprint();
            const auto dev_yes = std::count(dev_y.begin(), dev_y.end(), true);
            if (dev_yes > 0 && dev_yes < static_cast<long>(dev_y.size())) {
                const auto dev_xs = kernels::parallel::vectorize_batch(dev_texts, vocab);
                m = linear::calibrate(std::move(m), dev_xs, dev_y);
            }
            return std::make_unique<LinearClassifier>(std::move(vocab), std::move(m), task);
        }
        case ModelKind::CharCnn: {
            auto cfg = options.ccnn;
            cfg.seed = options.seed;
            nn::TrainLog log;
            auto net = nn::train_ccnn(data, cfg, train, &log);
            return std::make_unique<NeuralClassifier>(std::move(net), train, std::move(log), task);
        }
        case ModelKind::SeqNet: {
            auto cfg = options.seqnet;
            cfg.seed = options.seed;
            nn::TrainLog log;
            auto net = nn::train_seqnet(data, cfg, train, &log);
            return std::make_unique<NeuralClassifier>(std::move(net), train, std::move(log), task);
        }
    }
    throw Error(ErrorCode::InvalidArgument, "unknown model kind");
}

}  // namespace styleprof::model
