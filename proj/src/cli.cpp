#include "styleprof/cli.hpp"

#include <pthread.h>
#include <signal.h>

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <thread>

#include "styleprof/adapt.hpp"
#include "styleprof/agreement.hpp"
#include "styleprof/corpus.hpp"
#include "styleprof/error.hpp"
#include "styleprof/features.hpp"
#include "styleprof/hash.hpp"
#include "styleprof/kernels.hpp"
#include "styleprof/random.hpp"
#include "styleprof/service.hpp"
#include "styleprof/synthetic.hpp"

namespace styleprof::cli {

namespace fs = std::filesystem;
using nlohmann::json;

std::size_t levenshtein(std::string_view a, std::string_view b) {
    std::vector<std::size_t> row(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        std::size_t diag = row[0];
        row[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t up = row[j];
            row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
            diag = up;
        }
    }
    return row[b.size()];
}

std::string suggest(std::string_view word, const std::vector<std::string>& candidates) {
    std::string best;
    std::size_t best_d = 4;
    for (const auto& c : candidates) {
        const auto d = levenshtein(word, c);
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    return best;
}

namespace {

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::vector<std::string> task_names(bool with_all) {
    std::vector<std::string> names;
    for (auto c : kAllCharacteristics) names.emplace_back(wire_name(c));
    if (with_all) names.emplace_back("all");
    return names;
}

Characteristic task_of(const std::string& name) {
    auto c = parse_characteristic(name);
    if (!c) throw UsageError("unknown task '" + name + "'");
    return *c;
}

std::vector<Characteristic> tasks_of(const std::string& name) {
    if (name == "all") return {kAllCharacteristics.begin(), kAllCharacteristics.end()};
    return {task_of(name)};
}

model::ModelKind kind_of(const std::string& name) {
    auto k = model::parse_model_kind(name);
    if (!k) throw UsageError("unknown model kind '" + name + "'");
    return *k;
}

std::vector<std::size_t> parse_sizes(const std::string& csv) {
    std::vector<std::size_t> sizes;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            const long long v = std::stoll(item, &used);
            if (used != item.size() || v <= 0) throw std::invalid_argument(item);
            sizes.push_back(static_cast<std::size_t>(v));
        } catch (const std::exception&) {
            throw UsageError("bad size '" + item + "' in --sizes");
        }
    }
    if (sizes.empty()) throw UsageError("--sizes is empty");
    return sizes;
}

std::vector<eval::Band> parse_bands(const std::string& spec) {
    std::vector<eval::Band> bands;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto colon = item.find(':');
        try {
            if (colon == std::string::npos) throw std::invalid_argument(item);
            eval::Band b{std::stod(item.substr(0, colon)), std::stod(item.substr(colon + 1))};
            if (!(b.lo <= b.hi) || b.lo < 0.0 || b.hi > 1.0) throw std::invalid_argument(item);
            bands.push_back(b);
        } catch (const std::exception&) {
            throw UsageError("bad band '" + item + "'; expected lo:hi within [0,1]");
        }
    }
    return bands;
}

// --- manifests ---------------------------------------------------------------------------

struct Manifest {
    std::vector<std::string> command;
    std::string subcommand;
    std::string config;
    std::uint64_t seed = 0;
    std::vector<fs::path> inputs;
    std::vector<fs::path> outputs;
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

    json file_list(const std::vector<fs::path>& paths) const {
        json arr = json::array();
        for (const auto& p : paths) {
            json entry{{"path", p.string()}};
            if (fs::is_regular_file(p)) entry["fingerprint"] = fingerprint_file(p.string());
            arr.push_back(std::move(entry));
        }
        return arr;
    }

    void write(const fs::path& where) const {
        const double wall =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        json j{{"command", command},
               {"subcommand", subcommand},
               {"config", config},
               {"seed", seed},
               {"inputs", file_list(inputs)},
               {"outputs", file_list(outputs)},
               {"wall_time_seconds", wall},
               {"threads", kernels::max_threads()}};
        corpus::write_file(where, j.dump(2) + "\n");
    }
};

fs::path manifest_beside(const fs::path& out) { return fs::path(out.string() + ".manifest.json"); }

struct Context {
    std::ostream& out;
    std::ostream& err;
    Manifest manifest;
};

/// Writes to `path`, or to stdout when path is empty; records the manifest.
void emit(Context& ctx, const std::string& path, const std::string& content) {
    if (path.empty()) {
        ctx.out << content;
        return;
    }
    if (fs::path(path).has_parent_path()) fs::create_directories(fs::path(path).parent_path());
    corpus::write_file(path, content);
    ctx.manifest.outputs.emplace_back(path);
    ctx.manifest.write(manifest_beside(path));
}

corpus::Corpus load_corpus(Context& ctx, const std::string& path, bool allow_unannotated = false) {
    ctx.manifest.inputs.emplace_back(path);
    corpus::ParseOptions opts;
    opts.allow_unannotated = allow_unannotated;
    return corpus::import_jsonl(path, opts);
}

std::vector<corpus::GoldRow> load_rows(Context& ctx, const std::string& path) {
    ctx.manifest.inputs.emplace_back(path);
    return corpus::load_rows(path);
}

// --- synthetic learning-curve data ----------------------------------------------------------

struct CurveData {
    std::vector<corpus::LabeledText> pool;
    std::vector<corpus::LabeledText> test;
};

CurveData synthetic_curve_data(std::uint64_t seed, double strength, std::size_t pool_n, std::size_t test_n,
                               Characteristic task) {
    synthetic::SyntheticOptions so;
    so.seed = seed;
    so.n = pool_n + test_n;
    so.marker_strength = strength;
    const auto corpus = synthetic::generate_synthetic(so);
    const auto gold = corpus::derive_gold(corpus, corpus::GoldPolicy::PerfectOnly);
    const auto rows = corpus::join_text(corpus, gold);
    const auto items = corpus::labeled_for(rows, task);
    auto [pool, test] = corpus::stratified_split(items, test_n, seed);
    return {std::move(pool), std::move(test)};
}

eval::Trainer trainer_for(model::TrainOptions options, Characteristic task) {
    return [options, task](std::span<const corpus::LabeledText> train, std::uint64_t seed) mutable {
        options.seed = seed;
        return std::unique_ptr<eval::Scorer>(model::train_classifier(train, task, options));
    };
}

// --- shared training flags ---------------------------------------------------------------

struct TrainFlags {
    std::string model = "ngsvm";
    double C = 1.0;
    std::size_t svm_epochs = 20;
    std::size_t top_k_word = 20000;
    std::size_t top_k_char = 20000;
    std::size_t min_df = 2;
    std::size_t max_epochs = 50;
    std::size_t patience = 5;
    std::size_t batch_size = 32;
    double learning_rate = 0.005;
    std::string static_embeddings;

    void add_to(CLI::App* app) {
        app->add_option("--model", model, "Model kind")
            ->check(CLI::IsMember({"ngsvm", "ccnn", "seqnet"}))
            ->capture_default_str();
        app->add_option("--C", C, "ng-SVM regularization constant")->capture_default_str();
        app->add_option("--svm-epochs", svm_epochs, "ng-SVM passes over the data")->capture_default_str();
        app->add_option("--top-k-word", top_k_word, "Word n-gram vocabulary size")->capture_default_str();
        app->add_option("--top-k-char", top_k_char, "Char n-gram vocabulary size")->capture_default_str();
        app->add_option("--min-df", min_df, "Minimum document frequency")->capture_default_str();
        app->add_option("--max-epochs", max_epochs, "Neural training epochs cap")->capture_default_str();
        app->add_option("--patience", patience, "Early-stopping patience")->capture_default_str();
        app->add_option("--batch-size", batch_size, "Neural mini-batch size")->capture_default_str();
        app->add_option("--learning-rate", learning_rate, "Adam learning rate")->capture_default_str();
        app->add_option("--static-embeddings", static_embeddings,
                        "seqnet: frozen embeddings text file instead of a trained table");
    }

    model::TrainOptions options(std::uint64_t seed) const {
        model::TrainOptions o;
        o.kind = kind_of(model);
        o.seed = seed;
        o.linear.C = C;
        o.linear.epochs = svm_epochs;
        o.vocab.top_k_word = top_k_word;
        o.vocab.top_k_char = top_k_char;
        o.vocab.min_df = min_df;
        o.train.max_epochs = max_epochs;
        o.train.patience = patience;
        o.train.batch_size = batch_size;
        o.train.learning_rate = learning_rate;
        if (!static_embeddings.empty()) {
            o.seqnet.source = nn::EmbeddingSource::StaticFile;
            o.seqnet.static_path = static_embeddings;
        }
        return o;
    }
};

std::string format_pct(double v) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%.1f", 100.0 * v);
    return buf;
}

std::string format_probability(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void install_stop_on_signal(service::HttpServer& server) {
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);
    std::thread([set, &server]() {
        int sig = 0;
        sigwait(&set, &sig);
        server.stop();
    }).detach();
}

}  // namespace

// --- demo ------------------------------------------------------------------------------------

DemoResult pipeline_demo(const DemoOptions& options, std::ostream* progress) {
    synthetic::SyntheticOptions so;
    so.seed = options.seed;
    so.n = options.grid_n;
    so.marker_strength = options.grid_strength;
    const auto corpus = synthetic::generate_synthetic(so);
    const auto rows = corpus::join_text(corpus, corpus::derive_gold(corpus, corpus::GoldPolicy::PerfectOnly));

    PerCharacteristic<std::vector<corpus::LabeledText>> train, test;
    DemoResult result;
    for (auto c : kAllCharacteristics) {
        auto [tr, te] = corpus::stratified_split(corpus::labeled_for(rows, c), options.grid_test, options.seed);
        train[c] = std::move(tr);
        test[c] = std::move(te);
        result.baseline[c] = eval::majority_baseline(corpus::labels_of(test[c]));
    }

    const std::size_t max_size =
        options.curve_sizes.empty() ? 0 : *std::max_element(options.curve_sizes.begin(), options.curve_sizes.end());
    CurveData curve_data;
    if (!options.curve_sizes.empty()) {
        curve_data = synthetic_curve_data(options.seed, options.curve_strength, max_size, options.curve_test,
                                          options.curve_task);
    }

    const std::size_t n_grid = options.kinds.size() * kNumCharacteristics;
    const std::size_t n_curve = options.curve_sizes.empty() ? 0 : options.kinds.size();
    result.cells.resize(n_grid);
    result.curves.resize(n_curve);
    std::vector<std::exception_ptr> failures(n_grid + n_curve);

#pragma omp parallel for schedule(dynamic, 1)
    for (std::size_t job = 0; job < n_grid + n_curve; ++job) {
        try {
            if (job < n_grid) {
                const auto kind = options.kinds[job / kNumCharacteristics];
                const auto task = kAllCharacteristics[job % kNumCharacteristics];
                model::TrainOptions to;
                to.kind = kind;
                to.seed = options.seed;
                const auto clf = model::train_classifier(train[task], task, to);
                const auto preds = eval::predict_labels(*clf, test[task]);
                result.cells[job] = GridCell{kind, task, eval::macro_prf(preds, corpus::labels_of(test[task]))};
            } else {
                const std::size_t k = job - n_grid;
                model::TrainOptions to;
                to.kind = options.kinds[k];
                result.curves[k] = eval::learning_curve(trainer_for(to, options.curve_task), curve_data.pool,
                                                        curve_data.test, options.curve_sizes, options.seed);
            }
            if (progress) {
#pragma omp critical(styleprof_demo_progress)
                *progress << "demo: job " << job + 1 << "/" << n_grid + n_curve << " done\n" << std::flush;
            }
        } catch (...) {
            failures[job] = std::current_exception();
        }
    }
    for (const auto& f : failures) {
        if (f) std::rethrow_exception(f);
    }
    return result;
}

std::string grid_to_text(const DemoResult& result) {
    std::ostringstream os;
    os << std::left;
    auto cell = [&](const std::string& s, std::size_t w) {
        os << s;
        for (std::size_t i = s.size(); i < w; ++i) os << ' ';
    };
    cell("model", 10);
    for (auto c : kAllCharacteristics) cell(std::string(display_name(c)), 22);
    os << "\n";
    cell("", 10);
    for (std::size_t i = 0; i < kNumCharacteristics; ++i) cell("P     R     F", 22);
    os << "\n";
    auto row = [&](const std::string& name, auto report_of) {
        cell(name, 10);
        for (auto c : kAllCharacteristics) {
            const eval::EvalReport& r = report_of(c);
            std::string s = format_pct(r.macro_precision);
            s.resize(6, ' ');
            std::string t = format_pct(r.macro_recall);
            t.resize(6, ' ');
            cell(s + t + format_pct(r.macro_f1), 22);
        }
        os << "\n";
    };
    std::vector<model::ModelKind> kinds;
    for (const auto& g : result.cells) {
        if (std::find(kinds.begin(), kinds.end(), g.kind) == kinds.end()) kinds.push_back(g.kind);
    }
    for (auto k : kinds) {
        row(std::string(model::to_string(k)), [&](Characteristic c) -> const eval::EvalReport& {
            for (const auto& g : result.cells) {
                if (g.kind == k && g.task == c) return g.report;
            }
            throw Error(ErrorCode::NotFound, "missing grid cell");
        });
    }
    row("majority", [&](Characteristic c) -> const eval::EvalReport& { return result.baseline[c]; });
    return os.str();
}

nlohmann::json grid_to_json(const DemoResult& result) {
    auto prf = [](const eval::EvalReport& r) {
        return json{{"precision", r.macro_precision}, {"recall", r.macro_recall}, {"f1", r.macro_f1}, {"n", r.n}};
    };
    json models = json::object();
    for (const auto& g : result.cells) {
        models[std::string(model::to_string(g.kind))][std::string(wire_name(g.task))] = prf(g.report);
    }
    json baseline = json::object();
    for (auto c : kAllCharacteristics) baseline[std::string(wire_name(c))] = prf(result.baseline[c]);
    return json{{"models", std::move(models)}, {"majority_baseline", std::move(baseline)}};
}

std::string curves_to_csv(const DemoResult& result, const DemoOptions& options) {
    std::string csv = "model,size,f1,seed\n";
    for (std::size_t k = 0; k < result.curves.size(); ++k) {
        for (const auto& p : result.curves[k].points) {
            csv += std::string(model::to_string(options.kinds[k])) + "," + std::to_string(p.train_size) + "," +
                   format_probability(p.macro_f1) + "," + std::to_string(p.seed) + "\n";
        }
    }
    return csv;
}

// --- run ---------------------------------------------------------------------------------------

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"styleprof: psycholinguistic text profiling toolkit", "styleprof"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_config("--config", "", "INI/TOML config file; [subcommand] sections, flags override");
    app.set_version_flag("--version", "styleprof 1.0.0");

    Context ctx{out, err, {}};
    ctx.manifest.command.push_back("styleprof");
    ctx.manifest.command.insert(ctx.manifest.command.end(), args.begin(), args.end());

    std::uint64_t seed = 1;
    std::string out_path;
    auto common = [&](CLI::App* sub, bool has_out = true) {
        sub->add_option("--seed", seed, "Random seed")->capture_default_str();
        if (has_out) sub->add_option("--out", out_path, "Output path (stdout when omitted)");
        return sub;
    };

    // import / dedupe / gold / split / stats / agreement / featurize
    std::string in_path;
    bool allow_unannotated = false;
    auto* import = common(app.add_subcommand("import", "Validate a corpus file and write its canonical export"));
    import->add_option("--in", in_path, "Corpus JSONL")->required();
    import->add_flag("--allow-unannotated", allow_unannotated, "Accept records without votes");

    auto* dedupe = common(app.add_subcommand("dedupe", "Keep one utterance per author"));
    dedupe->add_option("--in", in_path, "Corpus JSONL")->required();

    std::string policy = "perfect_only";
    auto* gold = common(app.add_subcommand("gold", "Resolve gold labels"));
    gold->add_option("--in", in_path, "Corpus JSONL")->required();
    gold->add_option("--policy", policy, "perfect_only | majority_all")
        ->check(CLI::IsMember({"perfect_only", "majority_all"}))
        ->capture_default_str();

    std::string task = "emotionality";
    std::size_t test_size = 0;
    auto* split = common(app.add_subcommand("split", "Stratified train/test split for one task"));
    split->add_option("--in", in_path, "Gold rows or corpus JSONL")->required();
    split->add_option("--task", task, "Characteristic")->check(CLI::IsMember(task_names(false)))->capture_default_str();
    split->add_option("--test-size", test_size, "Test instances")->required();

    auto* stats = common(app.add_subcommand("stats", "Class counts per characteristic"));
    stats->add_option("--in", in_path, "Gold rows or corpus JSONL")->required();

    bool no_dedupe = false;
    std::string format = "text";
    std::string disagreements;
    auto* agree = common(app.add_subcommand("agreement", "Perfect-agreement report"));
    agree->add_option("--in", in_path, "Corpus JSONL")->required();
    agree->add_flag("--no-dedupe", no_dedupe, "Skip the per-author deduplication");
    agree->add_option("--format", format, "text | json")->check(CLI::IsMember({"text", "json"}))->capture_default_str();
    agree->add_option("--disagreements", disagreements, "List non-unanimous records for this characteristic")
        ->check(CLI::IsMember(task_names(false)));

    features::VocabConfig vocab_cfg;
    auto* featurize = common(app.add_subcommand("featurize", "Build a TF-IDF vocabulary"));
    featurize->add_option("--in", in_path, "Gold rows or corpus JSONL")->required();
    featurize->add_option("--top-k-word", vocab_cfg.top_k_word, "Word n-gram features kept")->capture_default_str();
    featurize->add_option("--top-k-char", vocab_cfg.top_k_char, "Char n-gram features kept")->capture_default_str();
    featurize->add_option("--min-df", vocab_cfg.min_df, "Minimum document frequency")->capture_default_str();

    // train / evaluate / curve / calibrate
    TrainFlags train_flags;
    std::string train_path;
    auto* train = common(app.add_subcommand("train", "Train classifiers"));
    train->add_option("--task", task, "Characteristic or 'all' (then --out is a bundle directory)")
        ->check(CLI::IsMember(task_names(true)))
        ->required();
    train->add_option("--train", train_path, "Gold rows or corpus JSONL")->required();
    train_flags.add_to(train);
    train->get_option("--out")->required();

    std::string model_path, test_path, slices_out;
    std::string task_override;
    std::string report_format = "json";
    auto* evaluate = common(app.add_subcommand("evaluate", "Macro P/R/F of a model on a test file"));
    evaluate->add_option("--model", model_path, "Model file")->required();
    evaluate->add_option("--test", test_path, "Gold rows or corpus JSONL")->required();
    evaluate->add_option("--task", task_override, "Override the model's task")->check(CLI::IsMember(task_names(false)));
    evaluate->add_option("--format", report_format, "json | text")
        ->check(CLI::IsMember({"text", "json"}))
        ->capture_default_str();
    evaluate->add_option("--slices-out", slices_out, "Also write short/long error slices here");

    std::string sizes_csv = "250,1000,4000";
    std::string pool_path;
    double strength = 0.7;
    std::size_t curve_test = 1000;
    auto* curve = common(app.add_subcommand("curve", "Learning curve over nested subsamples (CSV)"));
    curve->add_option("--task", task, "Characteristic")->check(CLI::IsMember(task_names(false)))->capture_default_str();
    curve->add_option("--sizes", sizes_csv, "Comma-separated train sizes")->capture_default_str();
    curve->add_option("--pool", pool_path, "Training pool (synthetic when omitted)");
    curve->add_option("--test", test_path, "Test rows (required with --pool)");
    curve->add_option("--strength", strength, "Synthetic marker strength")->capture_default_str();
    curve->add_option("--test-size", curve_test, "Synthetic test size")->capture_default_str();
    train_flags.add_to(curve);

    std::string bands_spec = "0.85:0.99,0.40:0.60";
    auto* calibrate = common(app.add_subcommand("calibrate", "P(no) band fractions by difficulty and gold"));
    calibrate->add_option("--model", model_path, "Model file")->required();
    calibrate->add_option("--test", test_path, "Corpus or gold rows with difficulty")->required();
    calibrate->add_option("--task", task_override, "Override the model's task")->check(CLI::IsMember(task_names(false)));
    calibrate->add_option("--bands", bands_spec, "lo:hi,lo:hi on P(no)")->capture_default_str();
    calibrate->add_option("--format", report_format, "json | text")
        ->check(CLI::IsMember({"text", "json"}))
        ->capture_default_str();

    // adapt / serve / synth / demo
    std::string bundle_path, association_out;
    std::size_t concise_max_words = 40;
    auto* adapt_cmd = common(app.add_subcommand("adapt", "Replay conversations through the adaptation engine"));
    adapt_cmd->add_option("--bundle", bundle_path, "Model bundle directory")->required();
    adapt_cmd->add_option("--in", in_path, "Conversations JSONL")->required();
    adapt_cmd->add_option("--concise-max-words", concise_max_words, "Word limit of concise replies")
        ->capture_default_str();
    adapt_cmd->add_option("--association-out", association_out,
                          "Write matching-level vs satisfaction association JSON here");

    service::ServiceFlags sflags;
    auto* serve = app.add_subcommand("serve", "HTTP API");
    serve->add_option("--bind", sflags.bind, "Address (env STYLEPROF_BIND, default 127.0.0.1)");
    serve->add_option("--port", sflags.port, "Port, 0 for any (env STYLEPROF_PORT, default 8080)");
    serve->add_option("--bundle", sflags.bundle_path, "Model bundle directory (env STYLEPROF_BUNDLE)");
    serve->add_option("--store", sflags.store_path, "Annotation store directory (env STYLEPROF_STORE)");
    serve->add_option("--max-body", sflags.max_body, "Max request body bytes (env STYLEPROF_MAX_BODY)");
    serve->add_option("--timeout", sflags.timeout_seconds, "Read/write timeout seconds (env STYLEPROF_TIMEOUT)");

    synthetic::SyntheticOptions synth_opts;
    auto* synth = common(app.add_subcommand("synth", "Generate a synthetic labeled corpus"));
    synth->add_option("--n", synth_opts.n, "Utterances")->capture_default_str();
    synth->add_option("--strength", synth_opts.marker_strength, "Marker strength in [0,1]")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    synth->add_option("--annotators", synth_opts.annotators, "Annotators per utterance")->capture_default_str();

    DemoOptions demo_opts;
    std::string demo_models = "ngsvm,ccnn,seqnet";
    std::string demo_sizes = "250,1000,4000";
    out_path.clear();
    auto* demo = common(app.add_subcommand("demo", "Synthetic end-to-end run: comparison grid and learning curve"));
    demo->add_option("--grid-n", demo_opts.grid_n, "Grid corpus size")->capture_default_str();
    demo->add_option("--grid-test", demo_opts.grid_test, "Grid test size")->capture_default_str();
    demo->add_option("--grid-strength", demo_opts.grid_strength, "Grid marker strength")->capture_default_str();
    demo->add_option("--curve-strength", demo_opts.curve_strength, "Curve marker strength")->capture_default_str();
    demo->add_option("--curve-sizes", demo_sizes, "Curve train sizes")->capture_default_str();
    demo->add_option("--curve-test", demo_opts.curve_test, "Curve test size")->capture_default_str();
    demo->add_option("--models", demo_models, "Model kinds")->capture_default_str();

    // unknown flags: usage error with the nearest known flag
    if (!args.empty()) {
        const CLI::App* target = nullptr;
        std::vector<std::string> sub_names;
        for (const auto* s : app.get_subcommands({})) sub_names.push_back(s->get_name());
        auto first = args.begin();
        while (first != args.end() && (first->empty() || (*first)[0] == '-')) {
            if (*first == "--config" && first + 1 != args.end()) ++first;
            ++first;
        }
        if (first != args.end()) {
            try {
                target = app.get_subcommand(*first);
            } catch (const CLI::OptionNotFound&) {
                const auto hint = suggest(*first, sub_names);
                err << "error: unknown subcommand '" << *first << "'";
                if (!hint.empty()) err << "; did you mean '" << hint << "'?";
                err << "\n";
                return kExitUsage;
            }
        }
        std::vector<std::string> known{"--config", "--help", "--version"};
        if (target) {
            for (const auto* opt : target->get_options()) {
                for (const auto& l : opt->get_lnames()) known.push_back("--" + l);
            }
        }
        for (const auto& a : args) {
            if (a.rfind("--", 0) != 0 || a == "--") continue;
            const std::string flag = a.substr(0, a.find('='));
            if (std::find(known.begin(), known.end(), flag) != known.end()) continue;
            const auto hint = suggest(flag, known);
            err << "error: unknown flag " << flag;
            if (!hint.empty()) err << "; did you mean " << hint << "?";
            err << "\n";
            return kExitUsage;
        }
    }

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::CallForVersion&) {
        out << "styleprof 1.0.0\n";
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        if (auto* s = app.get_subcommands().empty() ? nullptr : app.get_subcommands().front()) {
            err << "usage: styleprof " << s->get_name() << " --help\n";
        }
        return kExitUsage;
    }

    CLI::App* sub = app.get_subcommands().front();
    ctx.manifest.subcommand = sub->get_name();
    ctx.manifest.seed = seed;
    ctx.manifest.config = "[" + sub->get_name() + "]\n" + sub->config_to_str(true, false);

    try {
        if (sub == import) {
            emit(ctx, out_path, corpus::export_jsonl(load_corpus(ctx, in_path, allow_unannotated)));
        } else if (sub == dedupe) {
            emit(ctx, out_path, corpus::export_jsonl(corpus::dedupe_by_author(load_corpus(ctx, in_path))));
        } else if (sub == gold) {
            const auto corpus = load_corpus(ctx, in_path);
            const auto g = corpus::derive_gold(corpus, *corpus::parse_gold_policy(policy));
            emit(ctx, out_path, corpus::export_gold_jsonl(corpus::join_text(corpus, g)));
        } else if (sub == split) {
            const auto c = task_of(task);
            const auto rows = load_rows(ctx, in_path);
            std::vector<corpus::GoldRow> labeled;
            for (const auto& r : rows) {
                if (r.gold.labels[c]) labeled.push_back(r);
            }
            std::vector<bool> labels;
            for (const auto& r : labeled) labels.push_back(*r.gold.labels[c]);
            const auto idx = corpus::stratified_split_indices(labels, test_size, seed);
            auto part = [&](const std::vector<std::size_t>& ids, corpus::PartitionName name) {
                std::vector<corpus::GoldRow> out_rows;
                for (auto i : ids) {
                    out_rows.push_back(labeled[i]);
                    out_rows.back().partition = name;
                }
                return corpus::export_gold_jsonl(out_rows);
            };
            const std::string train_text = part(idx.train, corpus::PartitionName::Train);
            const std::string test_text = part(idx.test, corpus::PartitionName::Test);
            if (out_path.empty()) throw UsageError("split needs --out <directory>");
            fs::create_directories(out_path);
            const auto train_file = fs::path(out_path) / "train.jsonl";
            const auto test_file = fs::path(out_path) / "test.jsonl";
            corpus::write_file(train_file, train_text);
            corpus::write_file(test_file, test_text);
            ctx.manifest.outputs = {train_file, test_file};
            ctx.manifest.write(fs::path(out_path) / "manifest.json");
        } else if (sub == stats) {
            const auto rows = load_rows(ctx, in_path);
            std::vector<corpus::GoldInstance> gold_instances;
            for (const auto& r : rows) gold_instances.push_back(r.gold);
            const auto s = corpus::dataset_stats(gold_instances);
            json j = json::object();
            for (auto c : kAllCharacteristics) {
                j[std::string(wire_name(c))] = {{"no", s.counts[c].no}, {"yes", s.counts[c].yes}};
            }
            emit(ctx, out_path, j.dump(2) + "\n");
        } else if (sub == agree) {
            auto corpus = load_corpus(ctx, in_path);
            if (!no_dedupe) corpus = corpus::dedupe_by_author(corpus);
            std::string text;
            if (!disagreements.empty()) {
                json arr = json::array();
                for (const auto& d : agreement::disagreement_report(corpus, task_of(disagreements))) {
                    arr.push_back({{"utterance_id", d.utterance_id}, {"text", d.text}, {"votes", d.votes}});
                }
                text = arr.dump(2) + "\n";
            } else {
                const auto report = agreement::perfect_agreement(corpus);
                text = format == "json" ? agreement::report_to_json(report) + "\n" : agreement::report_to_text(report);
            }
            emit(ctx, out_path, text);
        } else if (sub == featurize) {
            const auto rows = load_rows(ctx, in_path);
            std::vector<std::string> docs;
            for (const auto& r : rows) docs.push_back(r.text);
            emit(ctx, out_path, features::build_vocab(docs, vocab_cfg).to_json() + "\n");
        } else if (sub == train) {
            const auto rows = load_rows(ctx, train_path);
            const auto options = train_flags.options(seed);
            const auto tasks = tasks_of(task);
            if (task == "all") {
                PerCharacteristic<adapt::ModelBundle::Ptr> models;
                for (auto c : tasks) {
                    err << "train: " << wire_name(c) << " (" << train_flags.model << ")\n";
                    models[c] = model::train_classifier(corpus::labeled_for(rows, c), c, options);
                }
                adapt::ModelBundle bundle(models);
                bundle.save(out_path);
                for (auto c : tasks) {
                    ctx.manifest.outputs.push_back(fs::path(out_path) / (std::string(wire_name(c)) + ".model"));
                }
                ctx.manifest.outputs.push_back(fs::path(out_path) / std::string(adapt::kBundleManifest));
                ctx.manifest.write(fs::path(out_path) / "manifest.json");
            } else {
                const auto c = tasks.front();
                const auto clf = model::train_classifier(corpus::labeled_for(rows, c), c, options);
                emit(ctx, out_path, clf->serialize());
            }
        } else if (sub == evaluate || sub == calibrate) {
            ctx.manifest.inputs.emplace_back(model_path);
            const auto clf = model::load_classifier(model_path);
            std::optional<Characteristic> c = clf->task();
            if (!task_override.empty()) c = task_of(task_override);
            if (!c) throw UsageError("model has no task; pass --task");
            const auto rows = load_rows(ctx, test_path);
            const auto items = corpus::labeled_for(rows, *c);
            if (sub == evaluate) {
                const auto preds = eval::predict_labels(*clf, items);
                const auto gold_labels = corpus::labels_of(items);
                const auto report = eval::macro_prf(preds, gold_labels);
                if (!slices_out.empty()) {
                    std::vector<std::string> texts;
                    for (const auto& it : items) texts.push_back(it.text);
                    corpus::write_file(slices_out,
                                       eval::slices_to_json(eval::error_slices(preds, gold_labels, texts)) + "\n");
                }
                emit(ctx, out_path,
                     report_format == "text" ? eval::report_to_text(report) : eval::report_to_json(report) + "\n");
            } else {
                const auto report = eval::calibration_report(*clf, items, parse_bands(bands_spec));
                emit(ctx, out_path,
                     report_format == "text" ? eval::calibration_to_text(report) : eval::calibration_to_json(report) + "\n");
            }
        } else if (sub == curve) {
            const auto sizes = parse_sizes(sizes_csv);
            const auto c = task_of(task);
            CurveData data;
            if (!pool_path.empty()) {
                if (test_path.empty()) throw UsageError("--pool needs --test");
                data.pool = corpus::labeled_for(load_rows(ctx, pool_path), c);
                data.test = corpus::labeled_for(load_rows(ctx, test_path), c);
            } else {
                data = synthetic_curve_data(seed, strength, *std::max_element(sizes.begin(), sizes.end()), curve_test, c);
            }
            const auto lc = eval::learning_curve(trainer_for(train_flags.options(seed), c), data.pool, data.test,
                                                 sizes, seed);
            emit(ctx, out_path, eval::curve_to_csv(lc));
        } else if (sub == adapt_cmd) {
            ctx.manifest.inputs.emplace_back(fs::path(bundle_path) / std::string(adapt::kBundleManifest));
            const auto bundle = adapt::ModelBundle::load(bundle_path);
            ctx.manifest.inputs.emplace_back(in_path);
            const auto conversations = adapt::parse_conversations_jsonl(corpus::read_file(in_path));
            adapt::MatchConfig mc;
            mc.concise_max_words = concise_max_words;
            const auto& lex = adapt::Lexicons::defaults();
            std::string lines;
            std::vector<adapt::AssociationInput> inputs;
            for (const auto& conv : conversations) {
                const auto analysis = adapt::analyze(conv, bundle, lex, mc);
                lines += adapt::analysis_to_json(analysis).dump() + "\n";
                inputs.push_back({analysis.report.matching_level,
                                  conv.satisfaction != adapt::Satisfaction::Unset ? conv.satisfaction
                                                                                 : analysis.satisfaction});
            }
            if (!association_out.empty()) {
                corpus::write_file(association_out,
                                   adapt::association_to_json(adapt::association(inputs)).dump(2) + "\n");
                ctx.manifest.outputs.emplace_back(association_out);
            }
            emit(ctx, out_path, lines);
        } else if (sub == serve) {
            const auto config = service::resolve_config(sflags, service::process_env());
            service::Service svc(config);
            service::HttpServer server(svc);
            const int port = server.bind();
            if (port < 0) throw Error(ErrorCode::Io, "cannot bind " + config.bind + ":" + std::to_string(config.port));
            install_stop_on_signal(server);
            err << "serving on " << config.bind << ":" << port << "\n" << std::flush;
            server.listen();
        } else if (sub == synth) {
            synth_opts.seed = seed;
            emit(ctx, out_path, corpus::export_jsonl(synthetic::generate_synthetic(synth_opts)));
        } else if (sub == demo) {
            demo_opts.seed = seed;
            demo_opts.curve_sizes = parse_sizes(demo_sizes);
            demo_opts.kinds.clear();
            std::stringstream ss(demo_models);
            std::string k;
            while (std::getline(ss, k, ',')) demo_opts.kinds.push_back(kind_of(k));
            const auto result = pipeline_demo(demo_opts, &err);
            const std::string grid = grid_to_text(result);
            out << grid;
            if (!out_path.empty()) {
                fs::create_directories(out_path);
                const fs::path dir(out_path);
                corpus::write_file(dir / "grid.txt", grid);
                corpus::write_file(dir / "grid.json", grid_to_json(result).dump(2) + "\n");
                corpus::write_file(dir / "curve.csv", curves_to_csv(result, demo_opts));
                ctx.manifest.outputs = {dir / "grid.txt", dir / "grid.json", dir / "curve.csv"};
                ctx.manifest.write(dir / "manifest.json");
            }
        }
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const Error& e) {
        json j{{"error", {{"code", std::string(to_string(e.code()))}, {"message", e.what()}}}};
        if (e.line() > 0) j["error"]["line"] = e.line();
        err << j.dump() << "\n";
        return kExitDomainError;
    } catch (const std::exception& e) {
        json j{{"error", {{"code", std::string(to_string(ErrorCode::Io))}, {"message", e.what()}}}};
        err << j.dump() << "\n";
        return kExitDomainError;
    }
    return kExitOk;
}

int run(int argc, const char* const* argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return run(args, std::cout, std::cerr);
}

}  // namespace styleprof::cli
