#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <nlohmann/json.hpp>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "styleprof/adapt.hpp"
#include "styleprof/corpus.hpp"

namespace styleprof::service {

// --- configuration ----------------------------------------------------------------------

struct ServiceConfig {
    std::string bind = "127.0.0.1";
    int port = 8080;
    std::string bundle_path;  // empty: start without models (classify/adapt answer 503)
    std::string store_path;   // empty: in-memory empty store
    std::size_t max_body = 1 << 20;
    int timeout_seconds = 30;

    nlohmann::json to_json() const;
};

struct ServiceFlags {
    std::optional<std::string> bind;
    std::optional<int> port;
    std::optional<std::string> bundle_path;
    std::optional<std::string> store_path;
    std::optional<std::size_t> max_body;
    std::optional<int> timeout_seconds;
};

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

/// Flag > environment (STYLEPROF_BIND, STYLEPROF_PORT, STYLEPROF_BUNDLE,
/// STYLEPROF_STORE, STYLEPROF_MAX_BODY, STYLEPROF_TIMEOUT) > default.
/// Throws InvalidArgument on an unparsable environment value.
ServiceConfig resolve_config(const ServiceFlags& flags, const EnvLookup& env);
EnvLookup process_env();

// --- annotation store ----------------------------------------------------------------------

struct Vote {
    std::string annotator;
    std::string utterance_id;
    PerCharacteristic<bool> labels;
    std::optional<bool> difficult;

    friend bool operator==(const Vote&, const Vote&) = default;
};

nlohmann::json vote_to_json(const Vote& v);

/// Annotation queue (`corpus.jsonl`, wire schema, votes optional) plus an
/// append-only vote log (`votes.ndjson`). Every accepted vote is written and
/// fsync'ed before it becomes visible.
class AnnotationStore {
public:
    AnnotationStore() = default;
    /// Creates the directory and empty files when missing.
    static std::unique_ptr<AnnotationStore> open(const std::filesystem::path& dir);
    static std::unique_ptr<AnnotationStore> in_memory(corpus::Corpus queue);

    enum class PostResult { Accepted, UnknownUtterance, Duplicate };

    PostResult post(const Vote& vote);
    /// First utterance (by id) the annotator has not voted on.
    std::optional<corpus::Record> next_for(const std::string& annotator) const;
    std::size_t remaining_for(const std::string& annotator) const;

    /// Queue votes followed by log votes (annotators sorted by id).
    corpus::Corpus effective_corpus() const;
    std::string export_jsonl() const;
    /// Hash over queue and log contents.
    std::string checksum() const;
    std::size_t size() const;

private:
    void apply(const Vote& v);

    mutable std::shared_mutex mutex_;
    corpus::Corpus queue_;
    std::vector<std::string> sorted_ids_;
    std::map<std::string, std::map<std::string, Vote>> votes_;  // utterance -> annotator -> vote
    std::filesystem::path log_path_;
    std::string log_content_;
};

// --- request handling -----------------------------------------------------------------------

struct Request {
    std::string method;
    std::string path;
    std::map<std::string, std::string> query;
    std::map<std::string, std::string> headers;  // lowercase names
    std::string body;
};

struct Response {
    int status = 200;
    std::string body;
    std::string content_type = "application/json";
};

/// Error body: {"code": ..., "message": ..., "path": <JSON pointer or "">}.
Response error_response(int status, std::string_view code, std::string_view message,
                        std::string_view pointer = "");

class Service {
public:
    /// Loads the bundle when configured; throws (refusing to start) on a
    /// missing or mismatching bundle.
    explicit Service(ServiceConfig config);
    Service(ServiceConfig config, std::shared_ptr<const adapt::ModelBundle> bundle,
            std::unique_ptr<AnnotationStore> store);

    /// Routes a request without any network involvement.
    Response handle(const Request& request) const;

    /// Reloads the bundle from the configured path; keeps the old one on failure.
    void reload() const;

    const ServiceConfig& config() const { return config_; }
    AnnotationStore& store() const { return *store_; }
    std::shared_ptr<const adapt::ModelBundle> bundle() const;

private:
    Response classify(const Request& r) const;
    Response adapt_conversation(const Request& r) const;
    Response next_annotation(const Request& r) const;
    Response post_annotation(const Request& r) const;
    Response stats() const;
    Response agreement_report() const;
    Response health() const;
    Response admin_reload(const Request& r) const;
    Response export_store() const;

    ServiceConfig config_;
    mutable std::mutex bundle_mutex_;
    mutable std::shared_ptr<const adapt::ModelBundle> bundle_;
    std::unique_ptr<AnnotationStore> store_;
    mutable std::mutex reload_mutex_;
};

/// Serves `service` over HTTP/1.1 until stop() or a signal. Blocking.
class HttpServer {
public:
    explicit HttpServer(Service& service);
    ~HttpServer();
    /// Binds; port 0 picks a free port. Returns the bound port or -1.
    int bind();
    void listen();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace styleprof::service
