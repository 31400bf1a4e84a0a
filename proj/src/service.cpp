#include "styleprof/service.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cstdlib>
#include <httplib.h>

#include "styleprof/agreement.hpp"
#include "styleprof/error.hpp"
#include "styleprof/hash.hpp"
#include "styleprof/utf8.hpp"

namespace styleprof::service {

using nlohmann::json;

// --- configuration ----------------------------------------------------------------------

json ServiceConfig::to_json() const {
    return json{{"bind", bind},           {"port", port},
                {"bundle", bundle_path},  {"store", store_path},
                {"max_body", max_body},   {"timeout_seconds", timeout_seconds}};
}

namespace {

long long parse_int_env(const std::string& name, const std::string& value) {
    char* end = nullptr;
    const long long v = std::strtoll(value.c_str(), &end, 10);
    if (value.empty() || *end != '\0' || v < 0) {
        throw Error(ErrorCode::InvalidArgument, name + " must be a non-negative integer, got '" + value + "'");
    }
    return v;
}

}  // namespace

ServiceConfig resolve_config(const ServiceFlags& flags, const EnvLookup& env) {
    ServiceConfig c;
    if (auto v = env("STYLEPROF_BIND")) c.bind = *v;
    if (auto v = env("STYLEPROF_PORT")) c.port = static_cast<int>(parse_int_env("STYLEPROF_PORT", *v));
    if (auto v = env("STYLEPROF_BUNDLE")) c.bundle_path = *v;
    if (auto v = env("STYLEPROF_STORE")) c.store_path = *v;
    if (auto v = env("STYLEPROF_MAX_BODY")) {
        c.max_body = static_cast<std::size_t>(parse_int_env("STYLEPROF_MAX_BODY", *v));
    }
    if (auto v = env("STYLEPROF_TIMEOUT")) {
        c.timeout_seconds = static_cast<int>(parse_int_env("STYLEPROF_TIMEOUT", *v));
    }
    if (flags.bind) c.bind = *flags.bind;
    if (flags.port) c.port = *flags.port;
    if (flags.bundle_path) c.bundle_path = *flags.bundle_path;
    if (flags.store_path) c.store_path = *flags.store_path;
    if (flags.max_body) c.max_body = *flags.max_body;
    if (flags.timeout_seconds) c.timeout_seconds = *flags.timeout_seconds;
    return c;
}

EnvLookup process_env() {
    return [](const std::string& name) -> std::optional<std::string> {
        const char* v = std::getenv(name.c_str());
        if (!v) return std::nullopt;
        return std::string(v);
    };
}

// --- annotation store ----------------------------------------------------------------------

json vote_to_json(const Vote& v) {
    json labels;
    for (auto c : kAllCharacteristics) labels[std::string(wire_name(c))] = v.labels[c];
    return json{{"annotator", v.annotator},
                {"utterance_id", v.utterance_id},
                {"votes", std::move(labels)},
                {"difficulty", v.difficult ? json(*v.difficult) : json(nullptr)}};
}

namespace {

Vote vote_from_json(const json& j) {
    Vote v;
    v.annotator = j.at("annotator").get<std::string>();
    v.utterance_id = j.at("utterance_id").get<std::string>();
    for (auto c : kAllCharacteristics) v.labels[c] = j.at("votes").at(std::string(wire_name(c))).get<bool>();
    if (j.contains("difficulty") && !j["difficulty"].is_null()) v.difficult = j["difficulty"].get<bool>();
    return v;
}

void append_durably(const std::filesystem::path& path, const std::string& line) {
    const int fd = ::open(path.c_str(), O_WRONLY | O_APPEND | O_CREAT, 0644);
    if (fd < 0) throw Error(ErrorCode::Io, "cannot open vote log " + path.string());
    std::size_t done = 0;
    while (done < line.size()) {
        const auto n = ::write(fd, line.data() + done, line.size() - done);
        if (n < 0) {
            ::close(fd);
            throw Error(ErrorCode::Io, "cannot append to vote log " + path.string());
        }
        done += static_cast<std::size_t>(n);
    }
    const bool synced = ::fsync(fd) == 0;
    ::close(fd);
    if (!synced) throw Error(ErrorCode::Io, "fsync failed on vote log " + path.string());
}

// One writer at a time; readers only wait for the in-memory apply.
std::mutex& writer_mutex() {
    static std::mutex m;
    return m;
}

}  // namespace

std::unique_ptr<AnnotationStore> AnnotationStore::in_memory(corpus::Corpus queue) {
    auto s = std::make_unique<AnnotationStore>();
    s->queue_ = std::move(queue);
    for (const auto& r : s->queue_.records()) s->sorted_ids_.push_back(r.id());
    std::sort(s->sorted_ids_.begin(), s->sorted_ids_.end());
    return s;
}

std::unique_ptr<AnnotationStore> AnnotationStore::open(const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    const auto queue_path = dir / "corpus.jsonl";
    const auto log_path = dir / "votes.ndjson";
    if (!std::filesystem::exists(queue_path)) corpus::write_file(queue_path, "");
    if (!std::filesystem::exists(log_path)) corpus::write_file(log_path, "");
    corpus::ParseOptions opts;
    opts.allow_unannotated = true;
    auto s = in_memory(corpus::parse_jsonl(corpus::read_file(queue_path), opts));
    s->log_path_ = log_path;
    std::string log = corpus::read_file(log_path);
    if (!log.empty() && log.back() != '\n') {
        // torn final write: drop the partial line
        log.erase(log.rfind('\n') == std::string::npos ? 0 : log.rfind('\n') + 1);
        std::filesystem::resize_file(log_path, log.size());
    }
    std::size_t pos = 0, line_no = 0;
    while (pos < log.size()) {
        const std::size_t end = log.find('\n', pos);
        const std::string line = log.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (line.empty()) continue;
        Vote v;
        try {
            v = vote_from_json(json::parse(line));
        } catch (const json::exception& e) {
            throw Error(ErrorCode::Format, std::string("bad vote log entry: ") + e.what(), line_no);
        }
        if (!s->queue_.find(v.utterance_id)) {
            throw Error(ErrorCode::Format, "vote for unknown utterance " + v.utterance_id, line_no);
        }
        s->apply(v);
    }
    s->log_content_ = std::move(log);
    return s;
}

void AnnotationStore::apply(const Vote& v) { votes_[v.utterance_id].emplace(v.annotator, v); }

AnnotationStore::PostResult AnnotationStore::post(const Vote& vote) {
    std::lock_guard writer(writer_mutex());
    {
        std::shared_lock read(mutex_);
        if (!queue_.find(vote.utterance_id)) return PostResult::UnknownUtterance;
        auto it = votes_.find(vote.utterance_id);
        if (it != votes_.end() && it->second.count(vote.annotator)) return PostResult::Duplicate;
    }
    const std::string line = vote_to_json(vote).dump() + "\n";
    if (!log_path_.empty()) append_durably(log_path_, line);
    std::unique_lock write(mutex_);
    apply(vote);
    log_content_ += line;
    return PostResult::Accepted;
}

std::optional<corpus::Record> AnnotationStore::next_for(const std::string& annotator) const {
    std::shared_lock read(mutex_);
    for (const auto& id : sorted_ids_) {
        auto it = votes_.find(id);
        if (it == votes_.end() || !it->second.count(annotator)) return *queue_.find(id);
    }
    return std::nullopt;
}

std::size_t AnnotationStore::remaining_for(const std::string& annotator) const {
    std::shared_lock read(mutex_);
    std::size_t n = 0;
    for (const auto& id : sorted_ids_) {
        auto it = votes_.find(id);
        if (it == votes_.end() || !it->second.count(annotator)) ++n;
    }
    return n;
}

corpus::Corpus AnnotationStore::effective_corpus() const {
    std::shared_lock read(mutex_);
    std::vector<corpus::Record> records = queue_.records();
    for (auto& r : records) {
        auto it = votes_.find(r.id());
        if (it == votes_.end()) continue;
        auto& ann = r.annotation;
        std::vector<bool> difficulty = ann.difficulty_votes.value_or(std::vector<bool>{});
        for (const auto& [annotator, v] : it->second) {  // map: sorted by annotator id
            for (auto c : kAllCharacteristics) ann.votes[c].push_back(v.labels[c]);
            if (v.difficult) difficulty.push_back(*v.difficult);
        }
        if (!difficulty.empty()) ann.difficulty_votes = std::move(difficulty);
    }
    corpus::ParseOptions opts;
    opts.allow_unannotated = true;
    return corpus::Corpus::from_records(std::move(records), opts);
}

std::string AnnotationStore::export_jsonl() const { return corpus::export_jsonl(effective_corpus()); }

std::string AnnotationStore::checksum() const {
    std::shared_lock read(mutex_);
    Fnv1a h;
    h.update(corpus::export_jsonl(queue_)).update_u64(0).update(log_content_);
    return h.hex();
}

std::size_t AnnotationStore::size() const {
    std::shared_lock read(mutex_);
    return queue_.size();
}

// --- service ----------------------------------------------------------------------------------

Response error_response(int status, std::string_view code, std::string_view message,
                        std::string_view pointer) {
    json j{{"code", std::string(code)}, {"message", std::string(message)}, {"path", std::string(pointer)}};
    return Response{status, j.dump(), "application/json"};
}

namespace {

Response ok_json(const json& j) { return Response{200, j.dump(), "application/json"}; }

std::optional<json> parse_body(const Request& r, Response& error) {
    try {
        return json::parse(r.body);
    } catch (const json::exception& e) {
        error = error_response(422, "invalid_json", std::string("request body is not JSON: ") + e.what());
        return std::nullopt;
    }
}

}  // namespace

Service::Service(ServiceConfig config) : config_(std::move(config)) {
    if (!config_.bundle_path.empty()) {
        bundle_ = std::make_shared<const adapt::ModelBundle>(adapt::ModelBundle::load(config_.bundle_path));
    }
    store_ = config_.store_path.empty() ? AnnotationStore::in_memory({})
                                        : AnnotationStore::open(config_.store_path);
}

Service::Service(ServiceConfig config, std::shared_ptr<const adapt::ModelBundle> bundle,
                 std::unique_ptr<AnnotationStore> store)
    : config_(std::move(config)), bundle_(std::move(bundle)), store_(std::move(store)) {
    if (!store_) store_ = AnnotationStore::in_memory({});
}

std::shared_ptr<const adapt::ModelBundle> Service::bundle() const {
    std::lock_guard lock(bundle_mutex_);
    return bundle_;
}

void Service::reload() const {
    std::lock_guard serial(reload_mutex_);
    if (config_.bundle_path.empty()) {
        throw Error(ErrorCode::NotFound, "no bundle path configured");
    }
    auto fresh = std::make_shared<const adapt::ModelBundle>(adapt::ModelBundle::load(config_.bundle_path));
    std::lock_guard lock(bundle_mutex_);
    bundle_ = std::move(fresh);
}

Response Service::handle(const Request& r) const {
    struct Route {
        const char* method;
        const char* path;
        Response (Service::*fn)(const Request&) const;
    };
    static const Route routes[] = {
        {"POST", "/v1/classify", &Service::classify},
        {"POST", "/v1/adapt", &Service::adapt_conversation},
        {"GET", "/v1/annotation/next", &Service::next_annotation},
        {"POST", "/v1/annotation", &Service::post_annotation},
        {"POST", "/v1/admin/reload", &Service::admin_reload},
    };
    if (r.method == "POST" && r.body.size() > config_.max_body) {
        return error_response(413, "payload_too_large",
                              "request body exceeds " + std::to_string(config_.max_body) + " bytes");
    }
    try {
        bool path_known = false;
        for (const auto& route : routes) {
            if (r.path != route.path) continue;
            path_known = true;
            if (r.method == route.method) return (this->*route.fn)(r);
        }
        if (r.path == "/v1/stats" || r.path == "/v1/agreement" || r.path == "/v1/health" ||
            r.path == "/v1/annotation/export") {
            if (r.method != "GET") return error_response(405, "method_not_allowed", "use GET");
            if (r.path == "/v1/stats") return stats();
            if (r.path == "/v1/agreement") return agreement_report();
            if (r.path == "/v1/health") return health();
            return export_store();
        }
        if (path_known) return error_response(405, "method_not_allowed", "method not allowed");
        return error_response(404, "not_found", "no route for " + r.path);
    } catch (const adapt::SchemaError& e) {
        return error_response(422, "schema_violation", e.what(), e.pointer());
    } catch (const Error& e) {
        return error_response(500, std::string(to_string(e.code())), e.what());
    } catch (const std::exception& e) {
        return error_response(500, "internal", e.what());
    }
}

Response Service::classify(const Request& r) const {
    Response err;
    auto body = parse_body(r, err);
    if (!body) return err;
    if (!body->is_object() || !body->contains("text") || !(*body)["text"].is_string()) {
        return error_response(422, "schema_violation", "text must be a string", "/text");
    }
    const auto text = (*body)["text"].get<std::string>();
    if (utf8::trim(text).empty()) return error_response(422, "empty_text", "text is empty", "/text");
    const auto b = bundle();
    if (!b) return error_response(503, "bundle_unavailable", "no model bundle loaded");
    return ok_json(adapt::profile_to_json(adapt::profile(text, *b)));
}

Response Service::adapt_conversation(const Request& r) const {
    Response err;
    auto body = parse_body(r, err);
    if (!body) return err;
    adapt::Conversation conv;
    if (body->is_object() && body->contains("conversation")) {
        try {
            conv = adapt::parse_conversation((*body)["conversation"]);
        } catch (const adapt::SchemaError& e) {
            return error_response(422, "schema_violation", e.what(), "/conversation" + e.pointer());
        }
    } else {
        conv = adapt::parse_conversation(*body);
    }
    const auto b = bundle();
    if (!b) return error_response(503, "bundle_unavailable", "no model bundle loaded");
    return ok_json(adapt::analysis_to_json(adapt::analyze(conv, *b, adapt::Lexicons::defaults())));
}

namespace {

std::optional<std::string> annotator_of(const Request& r, const json* body) {
    if (auto it = r.headers.find("x-annotator-id"); it != r.headers.end() && !it->second.empty()) {
        return it->second;
    }
    if (auto it = r.query.find("annotator"); it != r.query.end() && !it->second.empty()) {
        return it->second;
    }
    if (body && body->is_object() && body->contains("annotator") && (*body)["annotator"].is_string()) {
        auto a = (*body)["annotator"].get<std::string>();
        if (!a.empty()) return a;
    }
    return std::nullopt;
}

}  // namespace

Response Service::next_annotation(const Request& r) const {
    const auto annotator = annotator_of(r, nullptr);
    if (!annotator) return error_response(422, "missing_annotator", "annotator id required", "/annotator");
    const auto rec = store_->next_for(*annotator);
    json j{{"annotator", *annotator}, {"remaining", store_->remaining_for(*annotator)}};
    if (rec) {
        j["utterance"] = json{{"id", rec->id()}, {"text", rec->utterance.text}};
    } else {
        j["utterance"] = nullptr;
    }
    return ok_json(j);
}

Response Service::post_annotation(const Request& r) const {
    Response err;
    auto body = parse_body(r, err);
    if (!body) return err;
    if (!body->is_object()) return error_response(422, "schema_violation", "body must be an object");
    const auto annotator = annotator_of(r, &*body);
    if (!annotator) return error_response(422, "missing_annotator", "annotator id required", "/annotator");
    Vote v;
    v.annotator = *annotator;
    if (!body->contains("utterance_id") || !(*body)["utterance_id"].is_string()) {
        return error_response(422, "schema_violation", "utterance_id must be a string", "/utterance_id");
    }
    v.utterance_id = (*body)["utterance_id"].get<std::string>();
    if (!body->contains("votes") || !(*body)["votes"].is_object()) {
        return error_response(422, "schema_violation", "votes must be an object", "/votes");
    }
    for (auto c : kAllCharacteristics) {
        const std::string name(wire_name(c));
        const auto& votes = (*body)["votes"];
        if (!votes.contains(name) || !votes[name].is_boolean()) {
            return error_response(422, "schema_violation", name + " vote must be a boolean", "/votes/" + name);
        }
        v.labels[c] = votes[name].get<bool>();
    }
    if (body->contains("difficulty") && !(*body)["difficulty"].is_null()) {
        const auto& d = (*body)["difficulty"];
        if (d.is_boolean()) {
            v.difficult = d.get<bool>();
        } else if (d.is_string() && (d == "easy" || d == "difficult")) {
            v.difficult = d == "difficult";
        } else {
            return error_response(422, "schema_violation", "difficulty must be a boolean, \"easy\" or \"difficult\"",
                                  "/difficulty");
        }
    }
    switch (store_->post(v)) {
        case AnnotationStore::PostResult::UnknownUtterance:
            return error_response(404, "unknown_utterance", "no utterance " + v.utterance_id, "/utterance_id");
        case AnnotationStore::PostResult::Duplicate:
            return error_response(409, "duplicate_vote",
                                  v.annotator + " already voted on " + v.utterance_id, "/utterance_id");
        case AnnotationStore::PostResult::Accepted: break;
    }
    return ok_json(json{{"accepted", true}, {"vote", vote_to_json(v)}});
}

Response Service::stats() const {
    const auto corpus = store_->effective_corpus();
    const auto gold = corpus::derive_gold(corpus, corpus::GoldPolicy::PerfectOnly);
    const auto counts = corpus::dataset_stats(gold);
    const auto agreement = agreement::perfect_agreement(corpus);
    json classes, rates;
    for (auto c : kAllCharacteristics) {
        const std::string name(wire_name(c));
        classes[name] = {{"no", counts.counts[c].no}, {"yes", counts.counts[c].yes}};
        const auto& rate = agreement.perfect_agreement_rate[c];
        rates[name] = rate ? json(*rate) : json(nullptr);
    }
    return ok_json(json{{"n_records", corpus.size()},
                        {"n_gold_instances", gold.size()},
                        {"class_counts", std::move(classes)},
                        {"perfect_agreement", std::move(rates)},
                        {"n_agreement_instances", agreement.n_instances},
                        {"gold_policy", "perfect_only"}});
}

// Same report as the CLI `agreement` default (deduplicated by author).
Response Service::agreement_report() const {
    const auto corpus = corpus::dedupe_by_author(store_->effective_corpus());
    return Response{200, agreement::report_to_json(agreement::perfect_agreement(corpus)), "application/json"};
}

Response Service::health() const {
    const auto b = bundle();
    return ok_json(json{{"status", "ok"},
                        {"bundle_loaded", b != nullptr},
                        {"store_records", store_->size()}});
}

Response Service::admin_reload(const Request&) const {
    try {
        reload();
    } catch (const Error& e) {
        return error_response(e.code() == ErrorCode::NotFound ? 404 : 409, std::string(to_string(e.code())),
                              std::string("reload failed, previous bundle kept: ") + e.what());
    }
    json fps;
    const auto b = bundle();
    const auto f = b->fingerprints();
    for (auto c : kAllCharacteristics) fps[std::string(wire_name(c))] = f[c];
    return ok_json(json{{"reloaded", true}, {"model_fingerprints", std::move(fps)}});
}

Response Service::export_store() const {
    return Response{200, store_->export_jsonl(), "application/x-ndjson"};
}

// --- HTTP ----------------------------------------------------------------------------------------

struct HttpServer::Impl {
    Service& service;
    httplib::Server server;
    explicit Impl(Service& s) : service(s) {}
};

HttpServer::HttpServer(Service& service) : impl_(std::make_unique<Impl>(service)) {
    const auto& cfg = service.config();
    auto& srv = impl_->server;
    srv.set_read_timeout(cfg.timeout_seconds, 0);
    srv.set_write_timeout(cfg.timeout_seconds, 0);
    srv.set_payload_max_length(cfg.max_body + 1);
    auto handler = [this](const httplib::Request& req, httplib::Response& res) {
        Request r;
        r.method = req.method;
        r.path = req.path;
        for (const auto& [k, v] : req.params) r.query.emplace(k, v);
        for (const auto& [k, v] : req.headers) {
            std::string key = k;
            std::transform(key.begin(), key.end(), key.begin(), [](unsigned char ch) { return std::tolower(ch); });
            r.headers.emplace(std::move(key), v);
        }
        r.body = req.body;
        const Response out = impl_->service.handle(r);
        res.status = out.status;
        res.set_content(out.body, out.content_type);
    };
    // Transport-level rejections (oversized body, malformed request) get the same envelope.
    srv.set_error_handler([max_body = cfg.max_body](const httplib::Request&, httplib::Response& res) {
        if (!res.body.empty()) return httplib::Server::HandlerResponse::Unhandled;
        const Response out =
            res.status == 413
                ? error_response(413, "payload_too_large", "request body exceeds " + std::to_string(max_body) + " bytes")
                : error_response(res.status, "bad_request", "malformed request");
        res.set_content(out.body, out.content_type);
        return httplib::Server::HandlerResponse::Handled;
    });
    srv.Get(".*", handler);
    srv.Post(".*", handler);
    srv.Put(".*", handler);
    srv.Delete(".*", handler);
}

HttpServer::~HttpServer() = default;

int HttpServer::bind() {
    const auto& cfg = impl_->service.config();
    if (cfg.port == 0) return impl_->server.bind_to_any_port(cfg.bind);
    return impl_->server.bind_to_port(cfg.bind, cfg.port) ? cfg.port : -1;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::stop() { impl_->server.stop(); }

}  // namespace styleprof::service
