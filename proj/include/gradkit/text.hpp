#pragma once

#include <string>
#include <string_view>

namespace gradkit {

// Words are handled as sequences of code points so that ä/ö/å count as one
// position each.  Files and CLI output stay UTF-8; conversion happens at the
// boundary.
using word = std::u32string;

std::string utf8_encode(std::u32string_view s);
std::u32string utf8_decode(std::string_view bytes);  // throws std::invalid_argument on bad input

bool is_vowel(char32_t c);
bool is_stop(char32_t c);         // p, t, k
bool is_finnish_letter(char32_t c);
inline bool is_consonant(char32_t c) { return is_finnish_letter(c) && !is_vowel(c); }

}  // namespace gradkit
