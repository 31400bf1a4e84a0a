#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace styleprof::features {

/// Lowercased tokens. Splits on Unicode whitespace; every punctuation scalar
/// becomes its own token except an apostrophe between two alphanumerics
/// ("here's" stays whole).
std::vector<std::string> tokenize(std::string_view text, bool lowercase = true);

/// Unigrams then bigrams (space-joined), each in reading order.
std::vector<std::string> word_ngrams(std::span<const std::string> tokens, int min_order = 1,
                                     int max_order = 2);

/// Word-boundary sentinel wrapped around every word before char n-grams.
inline constexpr char32_t kBoundary = U'\u0002';

/// Character n-grams of each whitespace-delimited word wrapped in `boundary`
/// on both sides, over Unicode scalars. C0 control characters in the input
/// are treated as whitespace so the sentinel cannot occur inside a word.
std::vector<std::string> char_ngrams(std::string_view text, int min_order = 3, int max_order = 5,
                                     char32_t boundary = kBoundary, bool lowercase = false);

enum class FeatureKind : std::uint8_t { WordNgram, CharNgram };

struct VocabEntry {
    std::string feature;
    FeatureKind kind = FeatureKind::WordNgram;
    std::size_t document_frequency = 0;
    double idf = 0.0;
};

struct VocabConfig {
    std::size_t top_k_word = 20000;
    std::size_t top_k_char = 20000;
    std::size_t min_df = 2;
    bool lowercase_chars = false;
};

/// Identifier of the weighting variant, stored with every vocabulary.
inline constexpr std::string_view kTfidfFormula = "raw_tf*(ln((1+N)/(1+df))+1),l2";
inline constexpr int kVocabFormatVersion = 1;

/// Ordered feature table: the word n-grams (by df desc, then lexicographic)
/// followed by the char n-grams (same order). Immutable after build.
class Vocabulary {
public:
    Vocabulary() = default;
    Vocabulary(std::vector<VocabEntry> entries, VocabConfig config, std::size_t n_documents,
               std::string built_from);

    const std::vector<VocabEntry>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }
    const VocabConfig& config() const { return config_; }
    std::size_t n_documents() const { return n_documents_; }
    const std::string& built_from() const { return built_from_; }

    /// Index of a feature, or -1.
    long lookup(FeatureKind kind, std::string_view feature) const;

    /// Hash over formula, config and entries.
    std::string fingerprint() const;

    std::string to_json() const;
    static Vocabulary from_json(std::string_view text);

private:
    std::vector<VocabEntry> entries_;
    VocabConfig config_;
    std::size_t n_documents_ = 0;
    std::string built_from_;
    std::unordered_map<std::string, std::size_t> index_;
};

/// Throws InvalidArgument on fewer than two documents.
Vocabulary build_vocab(std::span<const std::string> documents, const VocabConfig& config = {});

double smoothed_idf(std::size_t n_documents, std::size_t df);

struct SparseVector {
    std::vector<std::uint32_t> indices;  // strictly increasing
    std::vector<double> values;
    std::size_t dimension = 0;

    std::size_t nnz() const { return indices.size(); }
    double norm() const;
    friend bool operator==(const SparseVector&, const SparseVector&) = default;
};

/// Raw term count x idf, then L2-normalised. Out-of-vocabulary features are
/// dropped; a text without in-vocabulary features gives the zero vector.
SparseVector vectorize(std::string_view text, const Vocabulary& vocab);

/// Word then char features of one text, with multiplicity (kind-tagged keys).
std::vector<std::pair<FeatureKind, std::string>> extract_features(std::string_view text,
                                                                  const VocabConfig& config);

}  // namespace styleprof::features
