#include <doctest.h>

#include <fstream>
#include <httplib.h>
#include <map>
#include <sstream>
#include <thread>

#include "styleprof/cli.hpp"
#include "styleprof/error.hpp"
#include "styleprof/random.hpp"
#include "styleprof/service.hpp"
#include "test_support.hpp"

using namespace styleprof;
using namespace styleprof::service;
using nlohmann::json;

namespace {

Request post(std::string path, std::string body, std::map<std::string, std::string> headers = {}) {
    Request r;
    r.method = "POST";
    r.path = std::move(path);
    r.body = std::move(body);
    r.headers = std::move(headers);
    return r;
}

Request get(std::string path, std::map<std::string, std::string> query = {}) {
    Request r;
    r.method = "GET";
    r.path = std::move(path);
    r.query = std::move(query);
    return r;
}

std::string error_code(const Response& r) { return json::parse(r.body).at("code").get<std::string>(); }

std::string queue_jsonl(std::size_t n) {
    std::string out;
    for (std::size_t i = 0; i < n; ++i) {
        char id[16];
        std::snprintf(id, sizeof id, "u%03zu", i);
        out += json{{"id", id}, {"text", "Queued utterance " + std::to_string(i) + "."}}.dump() + "\n";
    }
    return out;
}

json vote_body(const std::string& id, const std::array<bool, 5>& v, std::optional<bool> difficult = std::nullopt) {
    json votes;
    for (auto c : kAllCharacteristics) votes[std::string(wire_name(c))] = v[static_cast<std::size_t>(c)];
    json j{{"utterance_id", id}, {"votes", votes}};
    if (difficult) j["difficulty"] = *difficult;
    return j;
}

std::unique_ptr<Service> make_service(const std::filesystem::path& store_dir,
                                      std::shared_ptr<const adapt::ModelBundle> bundle = testing::stub_bundle()) {
    ServiceConfig cfg;
    cfg.store_path = store_dir.string();
    return std::make_unique<Service>(cfg, std::move(bundle), AnnotationStore::open(store_dir));
}

}  // namespace

TEST_CASE("classify") {
    Service svc(ServiceConfig{}, testing::stub_bundle(), nullptr);
    const auto a = svc.handle(post("/v1/classify", R"({"text":"Wow, I did it myself!"})"));
    const auto b = svc.handle(post("/v1/classify", R"({"text":"Wow, I did it myself!"})"));
    REQUIRE(a.status == 200);
    CHECK(a.body == b.body);
    CHECK(a.body == adapt::profile_to_json(adapt::profile("Wow, I did it myself!", *testing::stub_bundle())).dump());

    CHECK(svc.handle(post("/v1/classify", "{nope")).status == 422);
    CHECK(error_code(svc.handle(post("/v1/classify", "{nope"))) == "invalid_json");
    const auto missing = svc.handle(post("/v1/classify", R"({"txt":"x"})"));
    CHECK(missing.status == 422);
    CHECK(error_code(missing) == "schema_violation");
    CHECK(json::parse(missing.body)["path"] == "/text");
    const auto empty = svc.handle(post("/v1/classify", R"({"text":"   "})"));
    CHECK(error_code(empty) == "empty_text");

    Service no_models(ServiceConfig{}, nullptr, nullptr);
    const auto unavailable = no_models.handle(post("/v1/classify", R"({"text":"hi"})"));
    CHECK(unavailable.status == 503);
    CHECK(error_code(unavailable) == "bundle_unavailable");
    CHECK(json::parse(no_models.handle(get("/v1/health")).body)["bundle_loaded"] == false);
}

TEST_CASE("routing and limits") {
    ServiceConfig cfg;
    cfg.max_body = 64;
    Service svc(cfg, testing::stub_bundle(), nullptr);
    const auto big = svc.handle(post("/v1/classify", json{{"text", std::string(100, 'a')}}.dump()));
    CHECK(big.status == 413);
    CHECK(error_code(big) == "payload_too_large");
    CHECK(svc.handle(post("/v1/classify", json{{"text", std::string(40, 'a')}}.dump())).status == 200);
    CHECK(svc.handle(get("/v1/nothing")).status == 404);
    CHECK(error_code(svc.handle(get("/v1/nothing"))) == "not_found");
    CHECK(svc.handle(get("/v1/classify")).status == 405);
    CHECK(svc.handle(post("/v1/stats", "{}")).status == 405);
    CHECK(svc.handle(get("/v1/health")).status == 200);
    const auto reload = svc.handle(post("/v1/admin/reload", "{}"));
    CHECK(reload.status == 404);
}

TEST_CASE("adapt endpoint replays like the offline engine") {
    Service svc(ServiceConfig{}, testing::stub_bundle(), nullptr);
    const auto content = corpus::read_file(testing::fixture("conversations_50.jsonl"));
    std::istringstream lines(content);
    std::string line;
    std::size_t n = 0;
    while (std::getline(lines, line)) {
        if (line.empty()) continue;
        const auto j = json::parse(line);
        const auto offline = adapt::analysis_to_json(
            adapt::analyze(adapt::parse_conversation(j), *testing::stub_bundle(), adapt::Lexicons::defaults()));
        const auto wrapped = svc.handle(post("/v1/adapt", json{{"conversation", j}}.dump()));
        REQUIRE(wrapped.status == 200);
        CHECK(wrapped.body == offline.dump());
        CHECK(svc.handle(post("/v1/adapt", j.dump())).body == offline.dump());
        ++n;
    }
    CHECK(n == 50);

    const auto single = svc.handle(post("/v1/adapt", R"({"conversation":{"id":"s","turns":[{"speaker":"user","text":"hi"}],"satisfaction":null}})"));
    CHECK(json::parse(single.body)["report"]["matching_level"].is_null());

    const auto bad = svc.handle(post("/v1/adapt", R"({"conversation":{"id":"s","turns":[{"speaker":"robot","text":"hi"}]}})"));
    CHECK(bad.status == 422);
    CHECK(json::parse(bad.body)["path"] == "/conversation/turns/0/speaker");
    const auto bare = svc.handle(post("/v1/adapt", R"({"id":"s","turns":[{"speaker":"user"}]})"));
    CHECK(bare.status == 422);
    CHECK(json::parse(bare.body)["path"] == "/turns/0/text");
}

TEST_CASE("annotation flow") {
    testing::TempDir dir;
    std::filesystem::create_directories(dir / "store");
    corpus::write_file(dir / "store" / "corpus.jsonl", queue_jsonl(3));
    auto svc = make_service(dir / "store");

    CHECK(error_code(svc->handle(get("/v1/annotation/next"))) == "missing_annotator");
    auto next = json::parse(svc->handle(get("/v1/annotation/next", {{"annotator", "ann-1"}})).body);
    CHECK(next["utterance"]["id"] == "u000");
    CHECK(next["remaining"] == 3);

    const auto before = svc->store().checksum();
    const auto ok = svc->handle(post("/v1/annotation", vote_body("u000", {true, false, true, false, false}, true).dump(),
                                     {{"x-annotator-id", "ann-1"}}));
    CHECK(ok.status == 200);
    CHECK(svc->store().checksum() != before);

    Request via_header = get("/v1/annotation/next");
    via_header.headers["x-annotator-id"] = "ann-1";
    next = json::parse(svc->handle(via_header).body);
    CHECK(next["utterance"]["id"] == "u001");
    CHECK(next["remaining"] == 2);

    const auto after = svc->store().checksum();
    const auto dup = svc->handle(post("/v1/annotation", vote_body("u000", {false, false, false, false, false}).dump(),
                                      {{"x-annotator-id", "ann-1"}}));
    CHECK(dup.status == 409);
    CHECK(error_code(dup) == "duplicate_vote");
    auto body = vote_body("u999", {false, false, false, false, false});
    body["annotator"] = "ann-1";
    const auto unknown = svc->handle(post("/v1/annotation", body.dump()));
    CHECK(unknown.status == 404);
    CHECK(error_code(unknown) == "unknown_utterance");
    auto partial = vote_body("u001", {false, false, false, false, false});
    partial["votes"].erase("action_seeking");
    const auto invalid = svc->handle(post("/v1/annotation", partial.dump(), {{"x-annotator-id", "ann-2"}}));
    CHECK(invalid.status == 422);
    CHECK(json::parse(invalid.body)["path"] == "/votes/action_seeking");
    CHECK(error_code(svc->handle(post("/v1/annotation", vote_body("u001", {true, true, true, true, true}).dump()))) ==
          "missing_annotator");
    // Rejected requests leave the store untouched.
    CHECK(svc->store().checksum() == after);

    svc->handle(post("/v1/annotation", vote_body("u001", {true, true, true, true, true}).dump(), {{"x-annotator-id", "ann-1"}}));
    svc->handle(post("/v1/annotation", vote_body("u002", {true, true, true, true, true}).dump(), {{"x-annotator-id", "ann-1"}}));
    next = json::parse(svc->handle(get("/v1/annotation/next", {{"annotator", "ann-1"}})).body);
    CHECK(next["utterance"].is_null());
    CHECK(next["remaining"] == 0);

    // Restart: the log replays to the same state.
    const auto checksum = svc->store().checksum();
    const auto exported = svc->store().export_jsonl();
    svc.reset();
    auto again = make_service(dir / "store");
    CHECK(again->store().checksum() == checksum);
    CHECK(again->store().export_jsonl() == exported);
    CHECK(again->handle(get("/v1/annotation/export")).body == exported);

    // A torn final line is dropped on open.
    again.reset();
    {
        std::ofstream log(dir / "store" / "votes.ndjson", std::ios::app);
        log << R"({"annotator":"ann-9","utterance_id":"u0)";
    }
    auto torn = make_service(dir / "store");
    CHECK(torn->store().checksum() == checksum);
    CHECK(corpus::read_file(dir / "store" / "votes.ndjson").back() == '\n');
}

TEST_CASE("stats") {
    Service empty(ServiceConfig{}, nullptr, nullptr);
    const auto s = json::parse(empty.handle(get("/v1/stats")).body);
    CHECK(s["n_records"] == 0);
    CHECK(s["n_gold_instances"] == 0);
    CHECK(s["perfect_agreement"]["emotionality"].is_null());
    CHECK(s["class_counts"]["fact_oriented"]["yes"] == 0);

    const auto tables = corpus::parse_jsonl(corpus::read_file(testing::fixture("tables_1_2.jsonl")));
    Service svc(ServiceConfig{}, nullptr, AnnotationStore::in_memory(tables));
    const auto t = json::parse(svc.handle(get("/v1/stats")).body);
    CHECK(t["n_records"] == 7);
    CHECK(t["n_gold_instances"] == 7);
    CHECK(t["class_counts"]["emotionality"] == json{{"no", 5}, {"yes", 1}});
    CHECK(t["class_counts"]["fact_oriented"] == json{{"no", 5}, {"yes", 2}});
    CHECK(t["class_counts"]["information_seeking"] == json{{"no", 6}, {"yes", 1}});
    CHECK(t["perfect_agreement"]["emotionality"].get<double>() == doctest::Approx(600.0 / 7.0));
    CHECK(t["perfect_agreement"]["self_revealing"].get<double>() == 100.0);
}

TEST_CASE("stats on a random store match an offline recount") {
    testing::TempDir dir;
    std::filesystem::create_directories(dir / "store");
    corpus::write_file(dir / "store" / "corpus.jsonl", queue_jsonl(40));
    auto svc = make_service(dir / "store", nullptr);
    Rng rng(17);
    // votes[utterance][annotator] = labels
    std::map<std::string, std::map<std::string, std::array<bool, 5>>> votes;
    for (int i = 0; i < 150; ++i) {
        char id[16];
        std::snprintf(id, sizeof id, "u%03zu", static_cast<std::size_t>(rng.uniform_index(40)));
        const std::string annotator = "a" + std::to_string(rng.uniform_index(5));
        std::array<bool, 5> v{};
        for (auto& b : v) b = rng.bernoulli(0.7);
        const auto res = svc->handle(post("/v1/annotation", vote_body(id, v).dump(), {{"x-annotator-id", annotator}}));
        if (votes[id].count(annotator)) {
            CHECK(res.status == 409);
        } else {
            CHECK(res.status == 200);
            votes[id][annotator] = v;
        }
    }
    std::size_t gold = 0, agreement_n = 0;
    std::array<std::size_t, 5> yes{}, no{}, unanimous{};
    for (const auto& [id, by] : votes) {
        if (by.empty()) continue;
        bool any = false;
        for (std::size_t c = 0; c < 5; ++c) {
            std::size_t y = 0;
            for (const auto& [a, v] : by) y += v[c];
            const bool agreed = y == 0 || y == by.size();
            if (agreed) {
                any = true;
                (y ? yes : no)[c]++;
            }
            if (by.size() >= 2 && agreed) unanimous[c]++;
        }
        gold += any;
        agreement_n += by.size() >= 2;
    }
    const auto s = json::parse(svc->handle(get("/v1/stats")).body);
    CHECK(s["n_records"] == 40);
    CHECK(s["n_gold_instances"] == gold);
    CHECK(s["n_agreement_instances"] == agreement_n);
    for (auto c : kAllCharacteristics) {
        const std::string name(wire_name(c));
        const auto i = static_cast<std::size_t>(c);
        CHECK(s["class_counts"][name]["yes"] == yes[i]);
        CHECK(s["class_counts"][name]["no"] == no[i]);
        CHECK(s["perfect_agreement"][name].get<double>() ==
              doctest::Approx(100.0 * static_cast<double>(unanimous[i]) / static_cast<double>(agreement_n)));
    }
}

TEST_CASE("agreement endpoint equals the command-line report on the exported store") {
    testing::TempDir dir;
    std::filesystem::create_directories(dir / "store");
    corpus::write_file(dir / "store" / "corpus.jsonl", queue_jsonl(100));
    auto svc = make_service(dir / "store", nullptr);
    Rng rng(23);
    for (const char* annotator : {"ann-a", "ann-b", "ann-c"}) {
        for (int k = 0; k < 100; ++k) {
            const auto next = json::parse(svc->handle(get("/v1/annotation/next", {{"annotator", annotator}})).body);
            const std::string id = next["utterance"]["id"];
            std::array<bool, 5> v{};
            for (auto& b : v) b = rng.bernoulli(0.8);
            REQUIRE(svc->handle(post("/v1/annotation", vote_body(id, v, rng.bernoulli(0.5)).dump(),
                                     {{"x-annotator-id", annotator}}))
                        .status == 200);
        }
    }
    const auto exported = svc->handle(get("/v1/annotation/export")).body;
    corpus::write_file(dir / "export.jsonl", exported);
    std::ostringstream out, err;
    REQUIRE(cli::run({"agreement", "--in", (dir / "export.jsonl").string(), "--format", "json"}, out, err) == 0);
    const auto served = svc->handle(get("/v1/agreement"));
    CHECK(served.status == 200);
    CHECK(served.body + "\n" == out.str());
    CHECK(json::parse(served.body)["n_instances"] == 100);
}

TEST_CASE("concurrent votes") {
    testing::TempDir dir;
    std::filesystem::create_directories(dir / "store");
    corpus::write_file(dir / "store" / "corpus.jsonl", queue_jsonl(20));
    auto svc = make_service(dir / "store", nullptr);
    std::atomic<int> accepted{0}, duplicates{0};
    std::vector<std::thread> threads;
    for (int t = 0; t < 4; ++t) {
        threads.emplace_back([&, t] {
            for (int i = 0; i < 40; ++i) {
                char id[16];
                std::snprintf(id, sizeof id, "u%03d", i % 20);
                const std::string annotator = "t" + std::to_string(t % 2);
                const auto r = svc->handle(post("/v1/annotation", vote_body(id, {true, false, true, false, true}).dump(),
                                                {{"x-annotator-id", annotator}}));
                if (r.status == 200) ++accepted;
                if (r.status == 409) ++duplicates;
                svc->handle(get("/v1/stats"));
            }
        });
    }
    for (auto& th : threads) th.join();
    CHECK(accepted == 40);
    CHECK(duplicates == 120);
    const auto checksum = svc->store().checksum();
    svc.reset();
    CHECK(make_service(dir / "store", nullptr)->store().checksum() == checksum);
}

TEST_CASE("configuration precedence") {
    std::map<std::string, std::string> env{{"STYLEPROF_PORT", "9000"}, {"STYLEPROF_BIND", "0.0.0.0"},
                                           {"STYLEPROF_MAX_BODY", "2048"}};
    auto lookup = [&](const std::string& k) -> std::optional<std::string> {
        auto it = env.find(k);
        if (it == env.end()) return std::nullopt;
        return it->second;
    };
    auto c = resolve_config(ServiceFlags{}, lookup);
    CHECK(c.port == 9000);
    CHECK(c.bind == "0.0.0.0");
    CHECK(c.max_body == 2048);
    CHECK(c.timeout_seconds == ServiceConfig{}.timeout_seconds);
    ServiceFlags flags;
    flags.port = 7000;
    c = resolve_config(flags, lookup);
    CHECK(c.port == 7000);
    CHECK(c.bind == "0.0.0.0");
    env["STYLEPROF_PORT"] = "eighty";
    CHECK_THROWS_AS(resolve_config(ServiceFlags{}, lookup), Error);
    const auto none = resolve_config(ServiceFlags{}, [](const std::string&) { return std::optional<std::string>{}; });
    CHECK(none.port == 8080);
    CHECK(none.to_json()["port"] == 8080);

    ServiceConfig missing;
    missing.bundle_path = "/nonexistent/bundle";
    CHECK_THROWS_AS(Service{missing}, Error);
}

TEST_CASE("HTTP round trip") {
    ServiceConfig cfg;
    cfg.port = 0;
    cfg.max_body = 256;
    Service svc(cfg, testing::stub_bundle(), nullptr);
    HttpServer server(svc);
    const int port = server.bind();
    REQUIRE(port > 0);
    std::thread loop([&] { server.listen(); });

    httplib::Client client("127.0.0.1", port);
    auto health = client.Get("/v1/health");
    REQUIRE(health);
    CHECK(health->status == 200);
    CHECK(json::parse(health->body)["status"] == "ok");

    const std::string body = R"({"text":"Please answer my question"})";
    auto classified = client.Post("/v1/classify", body, "application/json");
    REQUIRE(classified);
    CHECK(classified->status == 200);
    CHECK(classified->body == svc.handle(post("/v1/classify", body)).body);

    for (std::size_t size : {257u, 258u, 5000u}) {
        auto big = client.Post("/v1/classify", std::string(size, 'x'), "application/json");
        REQUIRE(big);
        CHECK(big->status == 413);
        CHECK(json::parse(big->body)["code"] == "payload_too_large");
    }
    auto missing = client.Get("/v2/anything");
    REQUIRE(missing);
    CHECK(missing->status == 404);
    CHECK(json::parse(missing->body)["code"] == "not_found");
    auto wrong = client.Delete("/v1/classify");
    REQUIRE(wrong);
    CHECK(wrong->status == 405);

    httplib::Headers headers{{"X-Annotator-Id", "web-1"}};
    auto next = client.Get("/v1/annotation/next", headers);
    REQUIRE(next);
    CHECK(json::parse(next->body)["annotator"] == "web-1");

    server.stop();
    loop.join();
}
