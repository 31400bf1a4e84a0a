#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "styleprof/characteristic.hpp"

namespace styleprof::corpus {

/// One user post, the atomic classification unit.
struct Utterance {
    std::string id;
    std::string text;
    std::optional<std::string> author_id;
    std::optional<std::string> source;
    std::string language = "en";

    friend bool operator==(const Utterance&, const Utterance&) = default;
};

/// Per-annotator yes/no votes. Annotator order is the same for every
/// characteristic (and for difficulty votes when present).
struct AnnotationRecord {
    std::string utterance_id;
    PerCharacteristic<std::vector<bool>> votes;
    std::optional<std::vector<bool>> difficulty_votes;

    std::size_t annotator_count() const { return votes[Characteristic::Emotionality].size(); }

    friend bool operator==(const AnnotationRecord&, const AnnotationRecord&) = default;
};

/// One line of the corpus wire schema.
struct Record {
    Utterance utterance;
    AnnotationRecord annotation;

    const std::string& id() const { return utterance.id; }

    friend bool operator==(const Record&, const Record&) = default;
};

struct ParseOptions {
    /// Accept records with zero votes (annotation queues).
    bool allow_unannotated = false;
};

/// Immutable collection of records with unique ids, in load order.
class Corpus {
public:
    Corpus() = default;

    /// Validates ids (unique, non-empty), text and vote shapes.
    static Corpus from_records(std::vector<Record> records, ParseOptions options = {});

    const std::vector<Record>& records() const { return records_; }
    std::size_t size() const { return records_.size(); }
    bool empty() const { return records_.empty(); }
    const Record* find(std::string_view id) const;

    /// Content hash over the canonical export.
    std::string fingerprint() const;

private:
    std::vector<Record> records_;
    std::unordered_map<std::string, std::size_t> index_;
};

Corpus parse_jsonl(std::string_view content, ParseOptions options = {});
Corpus import_jsonl(const std::filesystem::path& path, ParseOptions options = {});

/// Canonical wire-schema export (one JSON object per line, fixed key order).
std::string export_jsonl(const Corpus& corpus);
std::string record_to_json_line(const Record& record);

/// Keeps at most one utterance per author: the lexicographically-first id.
/// Records without author_id are untouched; relative order is preserved.
Corpus dedupe_by_author(const Corpus& corpus);

// --- gold labels ------------------------------------------------------------

enum class Agreement { Perfect, Majority };
enum class Difficulty { Easy, Difficult, Unknown };
enum class GoldPolicy { PerfectOnly, MajorityAll };

std::string_view to_string(Agreement a);
std::string_view to_string(Difficulty d);
std::optional<Difficulty> parse_difficulty(std::string_view s);
std::optional<GoldPolicy> parse_gold_policy(std::string_view s);

/// Resolved labels for one utterance. A characteristic with no label was
/// dropped for that characteristic (PerfectOnly with split votes).
struct GoldInstance {
    std::string utterance_id;
    PerCharacteristic<std::optional<bool>> labels;
    PerCharacteristic<std::optional<Agreement>> agreement;
    Difficulty difficulty = Difficulty::Unknown;

    friend bool operator==(const GoldInstance&, const GoldInstance&) = default;
};

/// PerfectOnly keeps unanimous characteristics per instance; MajorityAll
/// labels everything by majority and throws Resolution on an even-count tie.
/// Instances with no surviving label are omitted. Records without votes are
/// skipped.
std::vector<GoldInstance> derive_gold(const Corpus& corpus, GoldPolicy policy);

/// Instances that carry a label for `c`.
std::vector<GoldInstance> instances_for(std::span<const GoldInstance> gold, Characteristic c);

// --- partitions ---------------------------------------------------------------

enum class PartitionName { Train, Dev, Test, AdditionalTest };
std::string_view to_string(PartitionName p);
std::optional<PartitionName> parse_partition(std::string_view s);

struct ClassCount {
    std::size_t no = 0;
    std::size_t yes = 0;
    std::size_t total() const { return no + yes; }
    friend bool operator==(const ClassCount&, const ClassCount&) = default;
};

using ClassCounts = PerCharacteristic<ClassCount>;

struct DatasetPartition {
    PartitionName name = PartitionName::Train;
    std::vector<std::string> instances;
    ClassCounts class_counts;
};

struct StatsResult {
    ClassCounts counts;
    /// Characteristics with no labels at all in the partition.
    std::vector<Characteristic> empty_characteristics;
};

StatsResult dataset_stats(std::span<const GoldInstance> partition);

DatasetPartition make_partition(PartitionName name, std::span<const GoldInstance> instances);

/// Indices into the input, each list in ascending order.
struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

/// Per-class shuffle with Rng(seed) (yes class first, then no class); the test
/// takes round(test_size * yes/n) yes instances and the rest from no.
SplitIndices stratified_split_indices(const std::vector<bool>& labels, std::size_t test_size,
                                      std::uint64_t seed);

/// Splits the instances labeled for `c`.
std::pair<std::vector<GoldInstance>, std::vector<GoldInstance>> stratified_split(
    std::span<const GoldInstance> instances, Characteristic c, std::size_t test_size,
    std::uint64_t seed);

// --- labeled rows (gold/partition export) ------------------------------------

/// One line of the gold/partition export: the gold instance plus its text.
struct GoldRow {
    GoldInstance gold;
    std::string text;
    std::optional<PartitionName> partition;
};

/// Flattened single-characteristic example, the input of every trainer.
struct LabeledText {
    std::string id;
    std::string text;
    bool label = false;
    Difficulty difficulty = Difficulty::Unknown;
};

std::vector<GoldRow> join_text(const Corpus& corpus, std::span<const GoldInstance> gold,
                               std::optional<PartitionName> partition = std::nullopt);
std::string export_gold_jsonl(std::span<const GoldRow> rows);
std::vector<GoldRow> parse_gold_jsonl(std::string_view content);

std::vector<LabeledText> labeled_for(std::span<const GoldRow> rows, Characteristic c);

/// Reads either format: gold/partition rows (have "labels") or corpus records
/// (have "votes", resolved with PerfectOnly).
std::vector<GoldRow> load_rows(const std::filesystem::path& path);

std::vector<bool> labels_of(std::span<const LabeledText> items);

/// Stratified split over flattened examples (same algorithm as above).
std::pair<std::vector<LabeledText>, std::vector<LabeledText>> stratified_split(
    std::span<const LabeledText> items, std::size_t test_size, std::uint64_t seed);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace styleprof::corpus
