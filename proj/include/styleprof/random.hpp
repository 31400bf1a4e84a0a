#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace styleprof {

/// Seeded PRNG with fully specified output.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. Derived draws do not use <random> distributions (their output is
/// implementation-defined); they are computed here:
///  - uniform_index(n): rejection sampling on the raw 64-bit output,
///  - uniform01(): top 53 bits scaled by 2^-53,
///  - normal(): Box-Muller on two uniform01() draws,
///  - shuffle(): Fisher-Yates from the back, swapping i with uniform_index(i + 1).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Seed mixed from a base seed and a stream id, for independent substreams.
    static Rng derive(std::uint64_t seed, std::uint64_t stream);

    std::uint64_t next_u64() { return engine_(); }
    std::uint64_t uniform_index(std::uint64_t n);
    double uniform01();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
    double normal();
    bool bernoulli(double p) { return uniform01() < p; }

    template <typename T>
    void shuffle(std::span<T> items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(uniform_index(i));
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace styleprof
