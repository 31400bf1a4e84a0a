#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "styleprof/characteristic.hpp"
#include "styleprof/corpus.hpp"

namespace styleprof::synthetic {

/// Lexical marker templates per characteristic plus neutral filler, loaded
/// from the versioned markers file. "{n}" in a template is a number slot.
struct MarkerPools {
    int version = 0;
    std::string number_slot = "{n}";
    int number_min = 2;
    int number_max = 99;
    PerCharacteristic<std::vector<std::string>> markers;
    std::vector<std::string> filler;
};

MarkerPools parse_marker_pools(std::string_view json_text);

/// Pools compiled in from data/markers_v1.json.
const MarkerPools& default_marker_pools();

struct SyntheticOptions {
    std::uint64_t seed = 1;
    std::size_t n = 100;
    /// Probability a yes-labeled text carries its marker; a no-labeled text
    /// carries a stray marker with probability (1 - strength) / 2.
    double marker_strength = 1.0;
    std::size_t annotators = 3;
};

/// Generates n labeled utterances. Every label is a fair coin per
/// characteristic; votes are unanimous. Difficulty votes mark an instance
/// difficult when its emotionality signal was impure (yes without marker, or
/// no with a stray marker). Deterministic per seed.
corpus::Corpus generate_synthetic(const SyntheticOptions& options,
                                  const MarkerPools& pools = default_marker_pools());

/// True if `text` contains an instance of any marker template for `c`.
bool contains_marker(std::string_view text, Characteristic c,
                     const MarkerPools& pools = default_marker_pools());

}  // namespace styleprof::synthetic
