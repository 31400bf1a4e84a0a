#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace styleprof {

/// Incremental 64-bit FNV-1a, used for content fingerprints.
class Fnv1a {
public:
    Fnv1a& update(std::string_view bytes);
    Fnv1a& update(std::span<const unsigned char> bytes);
    Fnv1a& update_u64(std::uint64_t v);
    std::uint64_t value() const { return state_; }
    /// 16 lowercase hex digits.
    std::string hex() const;

private:
    std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

std::string fingerprint_of(std::string_view bytes);
std::string fingerprint_file(const std::string& path);

}  // namespace styleprof
