#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string_view>

namespace styleprof {

/// The five psycholinguistic characteristics. Every profile, vote set and
/// statistics table is keyed by all five, in this order.
enum class Characteristic : std::size_t {
    Emotionality = 0,
    FactOriented = 1,
    SelfRevealing = 2,
    ActionSeeking = 3,
    InformationSeeking = 4,
};

inline constexpr std::size_t kNumCharacteristics = 5;

inline constexpr std::array<Characteristic, kNumCharacteristics> kAllCharacteristics = {
    Characteristic::Emotionality, Characteristic::FactOriented, Characteristic::SelfRevealing,
    Characteristic::ActionSeeking, Characteristic::InformationSeeking};

/// Fixed-size table indexed by Characteristic.
template <typename T>
struct PerCharacteristic {
    std::array<T, kNumCharacteristics> values{};

    T& operator[](Characteristic c) { return values[static_cast<std::size_t>(c)]; }
    const T& operator[](Characteristic c) const { return values[static_cast<std::size_t>(c)]; }

    friend bool operator==(const PerCharacteristic&, const PerCharacteristic&) = default;
};

constexpr std::size_t index_of(Characteristic c) { return static_cast<std::size_t>(c); }

/// snake_case name used on the wire ("fact_oriented", ...).
std::string_view wire_name(Characteristic c);

/// Human-readable name used in tables ("Fact-oriented", ...).
std::string_view display_name(Characteristic c);

std::optional<Characteristic> parse_characteristic(std::string_view name);

}  // namespace styleprof
