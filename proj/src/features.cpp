#include "styleprof/features.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <nlohmann/json.hpp>
#include <unordered_set>

#include "styleprof/error.hpp"
#include "styleprof/hash.hpp"
#include "styleprof/utf8.hpp"

namespace styleprof::features {

std::vector<std::string> tokenize(std::string_view text, bool lowercase) {
    const auto cps = utf8::decode(text);
    std::vector<std::string> tokens;
    std::u32string current;
    auto flush = [&] {
        if (!current.empty()) {
            tokens.push_back(utf8::encode(current));
            current.clear();
        }
    };
    for (std::size_t i = 0; i < cps.size(); ++i) {
        char32_t cp = cps[i];
        if (utf8::is_space(cp) || (cp < 0x20) || cp == 0x7F) {
            flush();
        } else if (utf8::is_punct(cp)) {
            const bool inner_apostrophe = (cp == U'\'' || cp == U'’') && !current.empty() &&
                                          i + 1 < cps.size() && utf8::is_alnum(cps[i + 1]) &&
                                          utf8::is_alnum(cps[i - 1]);
            if (inner_apostrophe) {
                current.push_back(cp);
            } else {
                flush();
                tokens.push_back(utf8::encode(std::u32string(1, cp)));
            }
        } else {
            current.push_back(lowercase ? utf8::to_lower(cp) : cp);
        }
    }
    flush();
    return tokens;
}

std::vector<std::string> word_ngrams(std::span<const std::string> tokens, int min_order,
                                     int max_order) {
    std::vector<std::string> out;
    for (int order = min_order; order <= max_order; ++order) {
        const auto n = static_cast<std::size_t>(order);
        if (order <= 0 || tokens.size() < n) continue;
        for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
            std::string gram = tokens[i];
            for (std::size_t k = 1; k < n; ++k) {
                gram += ' ';
                gram += tokens[i + k];
            }
            out.push_back(std::move(gram));
        }
    }
    return out;
}

std::vector<std::string> char_ngrams(std::string_view text, int min_order, int max_order,
                                     char32_t boundary, bool lowercase) {
    const auto cps = utf8::decode(text);
    std::vector<std::string> out;
    std::u32string word;
    auto emit = [&] {
        if (word.empty()) return;
        std::u32string wrapped;
        wrapped.reserve(word.size() + 2);
        wrapped.push_back(boundary);
        wrapped += word;
        wrapped.push_back(boundary);
        for (int order = min_order; order <= max_order; ++order) {
            const auto n = static_cast<std::size_t>(order);
            if (order <= 0 || wrapped.size() < n) continue;
            for (std::size_t i = 0; i + n <= wrapped.size(); ++i) {
                out.push_back(utf8::encode(std::u32string_view(wrapped).substr(i, n)));
            }
        }
        word.clear();
    };
    for (char32_t cp : cps) {
        if (utf8::is_space(cp) || cp < 0x20 || cp == 0x7F || cp == boundary) {
            emit();
        } else {
            word.push_back(lowercase ? utf8::to_lower(cp) : cp);
        }
    }
    emit();
    return out;
}

std::vector<std::pair<FeatureKind, std::string>> extract_features(std::string_view text,
                                                                  const VocabConfig& config) {
    std::vector<std::pair<FeatureKind, std::string>> out;
    const auto tokens = tokenize(text, true);
    for (auto& g : word_ngrams(tokens, 1, 2)) out.emplace_back(FeatureKind::WordNgram, std::move(g));
    for (auto& g : char_ngrams(text, 3, 5, kBoundary, config.lowercase_chars)) {
        out.emplace_back(FeatureKind::CharNgram, std::move(g));
    }
    return out;
}

namespace {

std::string key_of(FeatureKind kind, std::string_view feature) {
    std::string key;
    key.reserve(feature.size() + 2);
    key += kind == FeatureKind::WordNgram ? "w:" : "c:";
    key += feature;
    return key;
}

std::string_view kind_name(FeatureKind k) { return k == FeatureKind::WordNgram ? "word" : "char"; }

}  // namespace

double smoothed_idf(std::size_t n_documents, std::size_t df) {
    return std::log((1.0 + static_cast<double>(n_documents)) / (1.0 + static_cast<double>(df))) +
           1.0;
}

Vocabulary::Vocabulary(std::vector<VocabEntry> entries, VocabConfig config,
                       std::size_t n_documents, std::string built_from)
    : entries_(std::move(entries)),
      config_(config),
      n_documents_(n_documents),
      built_from_(std::move(built_from)) {
    index_.reserve(entries_.size());
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        index_.emplace(key_of(entries_[i].kind, entries_[i].feature), i);
    }
}

long Vocabulary::lookup(FeatureKind kind, std::string_view feature) const {
    auto it = index_.find(key_of(kind, feature));
    return it == index_.end() ? -1 : static_cast<long>(it->second);
}

std::string Vocabulary::fingerprint() const {
    Fnv1a h;
    h.update(kTfidfFormula);
    h.update_u64(config_.top_k_word).update_u64(config_.top_k_char).update_u64(config_.min_df);
    h.update_u64(config_.lowercase_chars ? 1 : 0).update_u64(n_documents_);
    for (const auto& e : entries_) {
        h.update(key_of(e.kind, e.feature)).update_u64(e.document_frequency);
    }
    return h.hex();
}

std::string Vocabulary::to_json() const {
    nlohmann::ordered_json j;
    j["format"] = "styleprof-vocabulary";
    j["version"] = kVocabFormatVersion;
    j["formula"] = kTfidfFormula;
    j["built_from"] = built_from_;
    j["fingerprint"] = fingerprint();
    j["n_documents"] = n_documents_;
    j["config"] = {{"top_k_word", config_.top_k_word},
                   {"top_k_char", config_.top_k_char},
                   {"min_df", config_.min_df},
                   {"lowercase_chars", config_.lowercase_chars}};
    auto arr = nlohmann::ordered_json::array();
    for (const auto& e : entries_) {
        arr.push_back(nlohmann::ordered_json::array(
            {e.feature, kind_name(e.kind), e.document_frequency, e.idf}));
    }
    j["entries"] = std::move(arr);
    return j.dump();
}

Vocabulary Vocabulary::from_json(std::string_view text) {
    try {
        auto j = nlohmann::json::parse(text);
        if (j.at("version").get<int>() != kVocabFormatVersion) {
            throw Error(ErrorCode::Format, "unsupported vocabulary version");
        }
        if (j.at("formula").get<std::string>() != kTfidfFormula) {
            throw Error(ErrorCode::Format, "unsupported weighting formula");
        }
        VocabConfig cfg;
        const auto& c = j.at("config");
        cfg.top_k_word = c.at("top_k_word").get<std::size_t>();
        cfg.top_k_char = c.at("top_k_char").get<std::size_t>();
        cfg.min_df = c.at("min_df").get<std::size_t>();
        cfg.lowercase_chars = c.at("lowercase_chars").get<bool>();
        std::vector<VocabEntry> entries;
        for (const auto& e : j.at("entries")) {
            VocabEntry v;
            v.feature = e.at(0).get<std::string>();
            v.kind = e.at(1).get<std::string>() == "word" ? FeatureKind::WordNgram
                                                           : FeatureKind::CharNgram;
            v.document_frequency = e.at(2).get<std::size_t>();
            v.idf = e.at(3).get<double>();
            entries.push_back(std::move(v));
        }
        Vocabulary vocab(std::move(entries), cfg, j.at("n_documents").get<std::size_t>(),
                         j.at("built_from").get<std::string>());
        if (vocab.fingerprint() != j.at("fingerprint").get<std::string>()) {
            throw Error(ErrorCode::Format, "vocabulary fingerprint mismatch");
        }
        return vocab;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::Format, std::string("bad vocabulary file: ") + e.what());
    }
}

Vocabulary build_vocab(std::span<const std::string> documents, const VocabConfig& config) {
    if (documents.size() < 2) {
        throw Error(ErrorCode::InvalidArgument, "vocabulary needs at least two documents");
    }
    std::unordered_map<std::string, std::size_t> df;
    Fnv1a corpus_hash;
    for (const auto& doc : documents) {
        std::unordered_set<std::string> seen;
        for (auto& [kind, feature] : extract_features(doc, config)) {
            seen.insert(key_of(kind, feature));
        }
        for (const auto& key : seen) ++df[key];
    }
    // order-independent corpus fingerprint: sum of per-document hashes
    std::uint64_t acc = 0;
    for (const auto& doc : documents) acc += Fnv1a{}.update(doc).value();
    corpus_hash.update_u64(acc).update_u64(documents.size());

    std::vector<std::pair<std::string, std::size_t>> words, chars;
    for (auto& [key, count] : df) {
        if (count < config.min_df) continue;
        (key[0] == 'w' ? words : chars).emplace_back(key.substr(2), count);
    }
    auto rank = [](auto& list, std::size_t k) {
        std::sort(list.begin(), list.end(), [](const auto& a, const auto& b) {
            return a.second != b.second ? a.second > b.second : a.first < b.first;
        });
        if (list.size() > k) list.resize(k);
    };
    rank(words, config.top_k_word);
    rank(chars, config.top_k_char);

    std::vector<VocabEntry> entries;
    entries.reserve(words.size() + chars.size());
    const auto n = documents.size();
    for (auto& [f, count] : words) {
        entries.push_back({std::move(f), FeatureKind::WordNgram, count, smoothed_idf(n, count)});
    }
    for (auto& [f, count] : chars) {
        entries.push_back({std::move(f), FeatureKind::CharNgram, count, smoothed_idf(n, count)});
    }
    return Vocabulary(std::move(entries), config, n, corpus_hash.hex());
}

double SparseVector::norm() const {
    double s = 0.0;
    for (double v : values) s += v * v;
    return std::sqrt(s);
}

SparseVector vectorize(std::string_view text, const Vocabulary& vocab) {
    std::map<std::uint32_t, double> counts;
    for (const auto& [kind, feature] : extract_features(text, vocab.config())) {
        const long idx = vocab.lookup(kind, feature);
        if (idx >= 0) counts[static_cast<std::uint32_t>(idx)] += 1.0;
    }
    SparseVector v;
    v.dimension = vocab.size();
    v.indices.reserve(counts.size());
    v.values.reserve(counts.size());
    double sq = 0.0;
    for (const auto& [idx, count] : counts) {
        const double w = count * vocab.entries()[idx].idf;
        v.indices.push_back(idx);
        v.values.push_back(w);
        sq += w * w;
    }
    if (sq > 0.0) {
        const double inv = 1.0 / std::sqrt(sq);
        for (double& x : v.values) x *= inv;
    }
    return v;
}

}  // namespace styleprof::features
