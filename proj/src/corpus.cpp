#include "styleprof/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <sstream>

#include "styleprof/agreement.hpp"
#include "styleprof/error.hpp"
#include "styleprof/hash.hpp"
#include "styleprof/random.hpp"
#include "styleprof/utf8.hpp"

namespace styleprof::corpus {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string require_string(const json& obj, const char* key, std::size_t line) {
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_string()) {
        throw Error(ErrorCode::Schema, std::string("field '") + key + "' must be a string", line);
    }
    return it->get<std::string>();
}

std::optional<std::string> optional_string(const json& obj, const char* key, std::size_t line) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) {
        throw Error(ErrorCode::Schema, std::string("field '") + key + "' must be a string or null",
                    line);
    }
    return it->get<std::string>();
}

std::vector<bool> bool_array(const json& value, const std::string& what, std::size_t line) {
    if (!value.is_array()) throw Error(ErrorCode::Schema, what + " must be an array", line);
    std::vector<bool> out;
    out.reserve(value.size());
    for (const auto& v : value) {
        if (!v.is_boolean()) throw Error(ErrorCode::Schema, what + " must contain booleans", line);
        out.push_back(v.get<bool>());
    }
    return out;
}

void validate_record(const Record& r, const ParseOptions& options, std::size_t line) {
    if (r.utterance.id.empty()) throw Error(ErrorCode::Schema, "empty id", line);
    if (utf8::trim(r.utterance.text).empty()) {
        throw Error(ErrorCode::Schema, "empty text for id '" + r.utterance.id + "'", line);
    }
    const std::size_t n = r.annotation.annotator_count();
    for (auto c : kAllCharacteristics) {
        if (r.annotation.votes[c].size() != n) {
            throw Error(ErrorCode::Schema,
                        "vote arrays of unequal length for id '" + r.utterance.id + "'", line);
        }
    }
    if (n == 0 && !options.allow_unannotated) {
        throw Error(ErrorCode::Schema, "no votes for id '" + r.utterance.id + "'", line);
    }
    if (r.annotation.difficulty_votes && r.annotation.difficulty_votes->empty()) {
        throw Error(ErrorCode::Schema, "empty difficulty_votes for id '" + r.utterance.id + "'",
                    line);
    }
}

Record parse_record(const json& obj, const ParseOptions& options, std::size_t line) {
    if (!obj.is_object()) throw Error(ErrorCode::Schema, "line is not a JSON object", line);
    Record r;
    r.utterance.id = require_string(obj, "id", line);
    r.utterance.text = require_string(obj, "text", line);
    r.utterance.author_id = optional_string(obj, "author_id", line);
    r.utterance.source = optional_string(obj, "source", line);
    r.utterance.language = obj.contains("language") ? require_string(obj, "language", line) : "und";
    r.annotation.utterance_id = r.utterance.id;

    auto votes = obj.find("votes");
    if (votes == obj.end() || votes->is_null()) {
        if (!options.allow_unannotated) throw Error(ErrorCode::Schema, "missing 'votes'", line);
    } else {
        if (!votes->is_object()) throw Error(ErrorCode::Schema, "'votes' must be an object", line);
        for (auto c : kAllCharacteristics) {
            auto it = votes->find(std::string(wire_name(c)));
            if (it == votes->end()) {
                if (options.allow_unannotated) continue;
                throw Error(ErrorCode::Schema,
                            "missing votes for '" + std::string(wire_name(c)) + "'", line);
            }
            r.annotation.votes[c] = bool_array(*it, "votes." + std::string(wire_name(c)), line);
        }
        for (const auto& [key, _] : votes->items()) {
            if (!parse_characteristic(key)) {
                throw Error(ErrorCode::Schema, "unknown characteristic '" + key + "'", line);
            }
        }
    }
    auto diff = obj.find("difficulty_votes");
    if (diff != obj.end() && !diff->is_null()) {
        r.annotation.difficulty_votes = bool_array(*diff, "difficulty_votes", line);
    }
    validate_record(r, options, line);
    return r;
}

ordered_json bools_to_json(const std::vector<bool>& v) {
    ordered_json arr = ordered_json::array();
    for (bool b : v) arr.push_back(b);
    return arr;
}

template <typename T>
ordered_json optional_to_json(const std::optional<T>& v) {
    return v ? ordered_json(*v) : ordered_json(nullptr);
}

}  // namespace

Corpus Corpus::from_records(std::vector<Record> records, ParseOptions options) {
    Corpus c;
    c.records_.reserve(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        auto& r = records[i];
        r.annotation.utterance_id = r.utterance.id;
        validate_record(r, options, 0);
        if (!c.index_.emplace(r.utterance.id, c.records_.size()).second) {
            throw Error(ErrorCode::Conflict, "duplicate id '" + r.utterance.id + "'");
        }
        c.records_.push_back(std::move(r));
    }
    return c;
}

const Record* Corpus::find(std::string_view id) const {
    auto it = index_.find(std::string(id));
    return it == index_.end() ? nullptr : &records_[it->second];
}

std::string Corpus::fingerprint() const { return fingerprint_of(export_jsonl(*this)); }

Corpus parse_jsonl(std::string_view content, ParseOptions options) {
    std::vector<Record> records;
    std::unordered_map<std::string, std::size_t> seen;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= content.size()) {
        auto nl = content.find('\n', pos);
        if (nl == std::string_view::npos) nl = content.size();
        std::string_view line = content.substr(pos, nl - pos);
        pos = nl + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.find_first_not_of(" \t") == std::string_view::npos) {
            if (nl == content.size()) break;
            continue;
        }
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::parse_error& e) {
            throw Error(ErrorCode::Parse,
                        "malformed JSON at column " + std::to_string(e.byte) + ": " + e.what(),
                        line_no);
        }
        Record r = parse_record(obj, options, line_no);
        auto [it, inserted] = seen.emplace(r.utterance.id, line_no);
        if (!inserted) {
            throw Error(ErrorCode::Conflict,
                        "duplicate id '" + r.utterance.id + "' (first seen on line " +
                            std::to_string(it->second) + ")",
                        line_no);
        }
        records.push_back(std::move(r));
        if (nl == content.size()) break;
    }
    return Corpus::from_records(std::move(records), options);
}

Corpus import_jsonl(const std::filesystem::path& path, ParseOptions options) {
    return parse_jsonl(read_file(path), options);
}

std::string record_to_json_line(const Record& r) {
    ordered_json obj;
    obj["id"] = r.utterance.id;
    obj["text"] = r.utterance.text;
    obj["author_id"] = optional_to_json(r.utterance.author_id);
    obj["source"] = optional_to_json(r.utterance.source);
    obj["language"] = r.utterance.language;
    ordered_json votes = ordered_json::object();
    for (auto c : kAllCharacteristics) {
        votes[std::string(wire_name(c))] = bools_to_json(r.annotation.votes[c]);
    }
    obj["votes"] = std::move(votes);
    obj["difficulty_votes"] = r.annotation.difficulty_votes
                                  ? bools_to_json(*r.annotation.difficulty_votes)
                                  : ordered_json(nullptr);
    return obj.dump();
}

std::string export_jsonl(const Corpus& corpus) {
    std::string out;
    for (const auto& r : corpus.records()) {
        out += record_to_json_line(r);
        out += '\n';
    }
    return out;
}

Corpus dedupe_by_author(const Corpus& corpus) {
    std::unordered_map<std::string, std::string> keeper;  // author -> smallest id
    for (const auto& r : corpus.records()) {
        if (!r.utterance.author_id) continue;
        auto [it, inserted] = keeper.emplace(*r.utterance.author_id, r.id());
        if (!inserted && r.id() < it->second) it->second = r.id();
    }
    std::vector<Record> kept;
    kept.reserve(corpus.size());
    for (const auto& r : corpus.records()) {
        if (!r.utterance.author_id || keeper.at(*r.utterance.author_id) == r.id()) {
            kept.push_back(r);
        }
    }
    return Corpus::from_records(std::move(kept), ParseOptions{.allow_unannotated = true});
}

// --- gold --------------------------------------------------------------------

std::string_view to_string(Agreement a) { return a == Agreement::Perfect ? "perfect" : "majority"; }

std::string_view to_string(Difficulty d) {
    switch (d) {
        case Difficulty::Easy: return "easy";
        case Difficulty::Difficult: return "difficult";
        case Difficulty::Unknown: return "unknown";
    }
    return "unknown";
}

std::optional<Difficulty> parse_difficulty(std::string_view s) {
    if (s == "easy") return Difficulty::Easy;
    if (s == "difficult") return Difficulty::Difficult;
    if (s == "unknown") return Difficulty::Unknown;
    return std::nullopt;
}

std::optional<GoldPolicy> parse_gold_policy(std::string_view s) {
    if (s == "perfect" || s == "perfect_only" || s == "PerfectOnly") return GoldPolicy::PerfectOnly;
    if (s == "majority" || s == "majority_all" || s == "MajorityAll") return GoldPolicy::MajorityAll;
    return std::nullopt;
}

std::vector<GoldInstance> derive_gold(const Corpus& corpus, GoldPolicy policy) {
    std::vector<GoldInstance> out;
    out.reserve(corpus.size());
    for (const auto& r : corpus.records()) {
        if (r.annotation.annotator_count() == 0) continue;
        GoldInstance g;
        g.utterance_id = r.id();
        bool any = false;
        for (auto c : kAllCharacteristics) {
            const auto& v = r.annotation.votes[c];
            const bool unanimous = agreement::is_unanimous(v);
            if (unanimous) {
                g.labels[c] = v.front();
                g.agreement[c] = Agreement::Perfect;
                any = true;
            } else if (policy == GoldPolicy::MajorityAll) {
                if (v.size() % 2 == 0) {
                    throw Error(ErrorCode::Resolution,
                                "tie with an even annotator count for '" + r.id() + "' (" +
                                    std::string(wire_name(c)) + ")");
                }
                g.labels[c] = agreement::majority_vote(v);
                g.agreement[c] = Agreement::Majority;
                any = true;
            }
        }
        if (r.annotation.difficulty_votes) {
            g.difficulty = agreement::difficulty_of(*r.annotation.difficulty_votes);
        }
        if (any) out.push_back(std::move(g));
    }
    return out;
}

std::vector<GoldInstance> instances_for(std::span<const GoldInstance> gold, Characteristic c) {
    std::vector<GoldInstance> out;
    for (const auto& g : gold) {
        if (g.labels[c]) out.push_back(g);
    }
    return out;
}

// --- partitions ----------------------------------------------------------------

std::string_view to_string(PartitionName p) {
    switch (p) {
        case PartitionName::Train: return "train";
        case PartitionName::Dev: return "dev";
        case PartitionName::Test: return "test";
        case PartitionName::AdditionalTest: return "additional_test";
    }
    return "train";
}

std::optional<PartitionName> parse_partition(std::string_view s) {
    if (s == "train") return PartitionName::Train;
    if (s == "dev") return PartitionName::Dev;
    if (s == "test") return PartitionName::Test;
    if (s == "additional_test") return PartitionName::AdditionalTest;
    return std::nullopt;
}

StatsResult dataset_stats(std::span<const GoldInstance> partition) {
    StatsResult s;
    for (const auto& g : partition) {
        for (auto c : kAllCharacteristics) {
            if (!g.labels[c]) continue;
            if (*g.labels[c]) {
                ++s.counts[c].yes;
            } else {
                ++s.counts[c].no;
            }
        }
    }
    for (auto c : kAllCharacteristics) {
        if (s.counts[c].total() == 0) s.empty_characteristics.push_back(c);
    }
    return s;
}

DatasetPartition make_partition(PartitionName name, std::span<const GoldInstance> instances) {
    DatasetPartition p;
    p.name = name;
    for (const auto& g : instances) p.instances.push_back(g.utterance_id);
    p.class_counts = dataset_stats(instances).counts;
    return p;
}

SplitIndices stratified_split_indices(const std::vector<bool>& labels, std::size_t test_size,
                                      std::uint64_t seed) {
    const std::size_t n = labels.size();
    if (test_size >= n) {
        throw Error(ErrorCode::Stratification,
                    "test size " + std::to_string(test_size) + " must be below pool size " +
                        std::to_string(n));
    }
    std::vector<std::size_t> yes, no;
    for (std::size_t i = 0; i < n; ++i) (labels[i] ? yes : no).push_back(i);
    if (yes.empty() || no.empty()) {
        throw Error(ErrorCode::Stratification, "both classes must be present to stratify");
    }
    auto test_yes = static_cast<std::size_t>(
        std::llround(static_cast<double>(test_size) * static_cast<double>(yes.size()) /
                     static_cast<double>(n)));
    test_yes = std::min(test_yes, yes.size());
    std::size_t test_no = test_size - test_yes;
    if (test_no > no.size()) {
        test_no = no.size();
        test_yes = test_size - test_no;
    }
    Rng rng(seed);
    rng.shuffle(std::span<std::size_t>(yes));
    rng.shuffle(std::span<std::size_t>(no));

    std::vector<bool> in_test(n, false);
    for (std::size_t i = 0; i < test_yes; ++i) in_test[yes[i]] = true;
    for (std::size_t i = 0; i < test_no; ++i) in_test[no[i]] = true;
    SplitIndices out;
    for (std::size_t i = 0; i < n; ++i) (in_test[i] ? out.test : out.train).push_back(i);
    return out;
}

std::pair<std::vector<GoldInstance>, std::vector<GoldInstance>> stratified_split(
    std::span<const GoldInstance> instances, Characteristic c, std::size_t test_size,
    std::uint64_t seed) {
    auto pool = instances_for(instances, c);
    std::vector<bool> labels;
    labels.reserve(pool.size());
    for (const auto& g : pool) labels.push_back(*g.labels[c]);
    auto idx = stratified_split_indices(labels, test_size, seed);
    std::pair<std::vector<GoldInstance>, std::vector<GoldInstance>> out;
    for (auto i : idx.train) out.first.push_back(pool[i]);
    for (auto i : idx.test) out.second.push_back(pool[i]);
    return out;
}

// --- gold rows -------------------------------------------------------------------

std::vector<GoldRow> join_text(const Corpus& corpus, std::span<const GoldInstance> gold,
                               std::optional<PartitionName> partition) {
    std::vector<GoldRow> rows;
    rows.reserve(gold.size());
    for (const auto& g : gold) {
        const Record* r = corpus.find(g.utterance_id);
        if (!r) throw Error(ErrorCode::NotFound, "unknown utterance '" + g.utterance_id + "'");
        rows.push_back(GoldRow{g, r->utterance.text, partition});
    }
    return rows;
}

std::string export_gold_jsonl(std::span<const GoldRow> rows) {
    std::string out;
    for (const auto& row : rows) {
        ordered_json obj;
        obj["id"] = row.gold.utterance_id;
        obj["text"] = row.text;
        ordered_json labels = ordered_json::object();
        ordered_json agreement = ordered_json::object();
        for (auto c : kAllCharacteristics) {
            const std::string key(wire_name(c));
            labels[key] = optional_to_json(row.gold.labels[c]);
            agreement[key] = row.gold.agreement[c]
                                 ? ordered_json(std::string(to_string(*row.gold.agreement[c])))
                                 : ordered_json(nullptr);
        }
        obj["labels"] = std::move(labels);
        obj["agreement"] = std::move(agreement);
        obj["difficulty"] = std::string(to_string(row.gold.difficulty));
        obj["partition"] = row.partition ? ordered_json(std::string(to_string(*row.partition)))
                                         : ordered_json(nullptr);
        out += obj.dump();
        out += '\n';
    }
    return out;
}

namespace {

GoldRow parse_gold_row(const json& obj, std::size_t line) {
    if (!obj.is_object()) throw Error(ErrorCode::Schema, "line is not a JSON object", line);
    GoldRow row;
    row.gold.utterance_id = require_string(obj, "id", line);
    row.text = require_string(obj, "text", line);
    const auto& labels = obj.at("labels");
    if (!labels.is_object()) throw Error(ErrorCode::Schema, "'labels' must be an object", line);
    for (auto c : kAllCharacteristics) {
        auto it = labels.find(std::string(wire_name(c)));
        if (it == labels.end() || it->is_null()) continue;
        if (!it->is_boolean()) throw Error(ErrorCode::Schema, "labels must be booleans", line);
        row.gold.labels[c] = it->get<bool>();
    }
    if (auto ag = obj.find("agreement"); ag != obj.end() && ag->is_object()) {
        for (auto c : kAllCharacteristics) {
            auto it = ag->find(std::string(wire_name(c)));
            if (it == ag->end() || it->is_null()) continue;
            const auto s = it->get<std::string>();
            if (s == "perfect") {
                row.gold.agreement[c] = Agreement::Perfect;
            } else if (s == "majority") {
                row.gold.agreement[c] = Agreement::Majority;
            } else {
                throw Error(ErrorCode::Schema, "unknown agreement '" + s + "'", line);
            }
        }
    }
    if (auto d = obj.find("difficulty"); d != obj.end() && d->is_string()) {
        auto parsed = parse_difficulty(d->get<std::string>());
        if (!parsed) throw Error(ErrorCode::Schema, "unknown difficulty", line);
        row.gold.difficulty = *parsed;
    }
    if (auto p = obj.find("partition"); p != obj.end() && p->is_string()) {
        row.partition = parse_partition(p->get<std::string>());
        if (!row.partition) throw Error(ErrorCode::Schema, "unknown partition", line);
    }
    return row;
}

}  // namespace

std::vector<GoldRow> parse_gold_jsonl(std::string_view content) {
    std::vector<GoldRow> rows;
    std::istringstream in{std::string(content)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::parse_error& e) {
            throw Error(ErrorCode::Parse, std::string("malformed JSON: ") + e.what(), line_no);
        }
        try {
            rows.push_back(parse_gold_row(obj, line_no));
        } catch (const json::exception& e) {
            throw Error(ErrorCode::Schema, e.what(), line_no);
        }
    }
    return rows;
}

std::vector<LabeledText> labeled_for(std::span<const GoldRow> rows, Characteristic c) {
    std::vector<LabeledText> out;
    for (const auto& row : rows) {
        if (!row.gold.labels[c]) continue;
        out.push_back(LabeledText{row.gold.utterance_id, row.text, *row.gold.labels[c],
                                  row.gold.difficulty});
    }
    return out;
}

std::vector<GoldRow> load_rows(const std::filesystem::path& path) {
    const std::string content = read_file(path);
    auto first = content.find('{');
    auto first_line_end = content.find('\n', first == std::string::npos ? 0 : first);
    std::string_view head(content.data(), std::min(content.size(), first_line_end));
    if (head.find("\"votes\"") != std::string_view::npos) {
        auto corpus = parse_jsonl(content);
        auto gold = derive_gold(corpus, GoldPolicy::PerfectOnly);
        return join_text(corpus, gold);
    }
    return parse_gold_jsonl(content);
}

std::vector<bool> labels_of(std::span<const LabeledText> items) {
    std::vector<bool> out;
    out.reserve(items.size());
    for (const auto& it : items) out.push_back(it.label);
    return out;
}

std::pair<std::vector<LabeledText>, std::vector<LabeledText>> stratified_split(
    std::span<const LabeledText> items, std::size_t test_size, std::uint64_t seed) {
    auto idx = stratified_split_indices(labels_of(items), test_size, seed);
    std::pair<std::vector<LabeledText>, std::vector<LabeledText>> out;
    for (auto i : idx.train) out.first.push_back(items[i]);
    for (auto i : idx.test) out.second.push_back(items[i]);
    return out;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

}  // namespace styleprof::corpus
