#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace styleprof::utf8 {

/// Decodes UTF-8 into scalar values. Malformed sequences become U+FFFD.
std::u32string decode(std::string_view text);

std::string encode(std::u32string_view cps);
void append(std::string& out, char32_t cp);

bool is_space(char32_t cp);
bool is_punct(char32_t cp);
bool is_alnum(char32_t cp);

/// ASCII lowercasing; other scalars pass through.
char32_t to_lower(char32_t cp);

std::string trim(std::string_view text);

/// Number of whitespace-delimited words.
std::size_t word_count(std::string_view text);

}  // namespace styleprof::utf8
