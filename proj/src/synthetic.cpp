#include "styleprof/synthetic.hpp"

#include <cstdio>
#include <nlohmann/json.hpp>
#include <regex>

#include "styleprof/embedded_data.hpp"
#include "styleprof/error.hpp"
#include "styleprof/random.hpp"

namespace styleprof::synthetic {

MarkerPools parse_marker_pools(std::string_view json_text) {
    MarkerPools pools;
    try {
        auto j = nlohmann::json::parse(json_text);
        pools.version = j.at("version").get<int>();
        pools.number_slot = j.value("number_slot", std::string("{n}"));
        if (auto r = j.find("number_range"); r != j.end()) {
            pools.number_min = r->at(0).get<int>();
            pools.number_max = r->at(1).get<int>();
        }
        const auto& markers = j.at("markers");
        for (auto c : kAllCharacteristics) {
            pools.markers[c] = markers.at(std::string(wire_name(c))).get<std::vector<std::string>>();
            if (pools.markers[c].empty()) {
                throw Error(ErrorCode::Format,
                            "empty marker pool for " + std::string(wire_name(c)));
            }
        }
        pools.filler = j.at("filler").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::Format, std::string("bad marker file: ") + e.what());
    }
    if (pools.filler.empty()) throw Error(ErrorCode::Format, "empty filler pool");
    return pools;
}

const MarkerPools& default_marker_pools() {
    static const MarkerPools pools = parse_marker_pools(embedded::markers_json());
    return pools;
}

namespace {

std::string fill_template(const std::string& tpl, const MarkerPools& pools, Rng& rng) {
    std::string out = tpl;
    for (auto pos = out.find(pools.number_slot); pos != std::string::npos;
         pos = out.find(pools.number_slot, pos)) {
        const auto span = static_cast<std::uint64_t>(pools.number_max - pools.number_min + 1);
        const auto value = pools.number_min + static_cast<int>(rng.uniform_index(span));
        const auto digits = std::to_string(value);
        out.replace(pos, pools.number_slot.size(), digits);
        pos += digits.size();
    }
    return out;
}

std::string pick(const std::vector<std::string>& pool, Rng& rng) {
    return pool[rng.uniform_index(pool.size())];
}

std::string make_id(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "syn-%06zu", i);
    return buf;
}

}  // namespace

corpus::Corpus generate_synthetic(const SyntheticOptions& options, const MarkerPools& pools) {
    if (options.n < 10) {
        throw Error(ErrorCode::InvalidArgument, "synthetic corpus needs n >= 10");
    }
    if (options.marker_strength < 0.0 || options.marker_strength > 1.0) {
        throw Error(ErrorCode::InvalidArgument, "marker_strength must be in [0, 1]");
    }
    if (options.annotators == 0) throw Error(ErrorCode::InvalidArgument, "annotators must be > 0");
    Rng rng(options.seed);
    const double stray = (1.0 - options.marker_strength) / 2.0;
    std::vector<corpus::Record> records;
    records.reserve(options.n);
    for (std::size_t i = 0; i < options.n; ++i) {
        corpus::Record r;
        r.utterance.id = make_id(i + 1);
        r.utterance.author_id = "syn-author-" + std::to_string(i + 1);
        r.utterance.source = "synthetic";
        r.utterance.language = "en";

        std::vector<std::string> segments;
        bool emotion_impure = false;
        for (auto c : kAllCharacteristics) {
            const bool label = rng.bernoulli(0.5);
            const bool marked = label ? rng.bernoulli(options.marker_strength) : rng.bernoulli(stray);
            if (marked) segments.push_back(fill_template(pick(pools.markers[c], rng), pools, rng));
            if (c == Characteristic::Emotionality) emotion_impure = (label != marked);
            r.annotation.votes[c].assign(options.annotators, label);
        }
        const auto fillers = 1 + rng.uniform_index(3);
        for (std::uint64_t k = 0; k < fillers; ++k) segments.push_back(pick(pools.filler, rng));
        rng.shuffle(std::span<std::string>(segments));

        std::string text;
        for (const auto& s : segments) {
            if (!text.empty()) text += ' ';
            text += s;
        }
        r.utterance.text = std::move(text);
        std::vector<bool> difficulty(options.annotators, false);
        if (emotion_impure) {
            for (std::size_t k = 0; k < std::min<std::size_t>(2, options.annotators); ++k) {
                difficulty[k] = true;
            }
        }
        r.annotation.difficulty_votes = std::move(difficulty);
        records.push_back(std::move(r));
    }
    return corpus::Corpus::from_records(std::move(records));
}

bool contains_marker(std::string_view text, Characteristic c, const MarkerPools& pools) {
    const std::string haystack(text);
    for (const auto& tpl : pools.markers[c]) {
        const auto slot = tpl.find(pools.number_slot);
        if (slot == std::string::npos) {
            if (haystack.find(tpl) != std::string::npos) return true;
            continue;
        }
        // escape the template, then turn the slot into a digit run
        static const std::regex special(R"([.^$|()\[\]{}*+?\\])");
        std::string pattern;
        std::size_t pos = 0;
        for (auto s = tpl.find(pools.number_slot); s != std::string::npos;
             s = tpl.find(pools.number_slot, pos)) {
            pattern += std::regex_replace(tpl.substr(pos, s - pos), special, R"(\$&)");
            pattern += "[0-9]+";
            pos = s + pools.number_slot.size();
        }
        pattern += std::regex_replace(tpl.substr(pos), special, R"(\$&)");
        if (std::regex_search(haystack, std::regex(pattern))) return true;
    }
    return false;
}

}  // namespace styleprof::synthetic
