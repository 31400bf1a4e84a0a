#pragma once

#include <string_view>

// Versioned data files compiled into the library (see data/).
namespace styleprof::embedded {

std::string_view markers_json();
std::string_view lexicon_second_person();
std::string_view lexicon_assurance();
std::string_view lexicon_gratitude();
std::string_view lexicon_anger();

}  // namespace styleprof::embedded
