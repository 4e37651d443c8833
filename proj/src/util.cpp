#include "gradkit/rng.hpp"
#include "gradkit/text.hpp"

#include <stdexcept>

namespace gradkit {

std::string utf8_encode(std::u32string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char32_t c : s) {
    if (c < 0x80) {
      out.push_back(static_cast<char>(c));
    } else if (c < 0x800) {
      out.push_back(static_cast<char>(0xC0 | (c >> 6)));
      out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
    } else if (c < 0x10000) {
      out.push_back(static_cast<char>(0xE0 | (c >> 12)));
      out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
    } else {
      out.push_back(static_cast<char>(0xF0 | (c >> 18)));
      out.push_back(static_cast<char>(0x80 | ((c >> 12) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
    }
  }
  return out;
}

std::u32string utf8_decode(std::string_view bytes) {
  std::u32string out;
  out.reserve(bytes.size());
  std::size_t i = 0;
  auto cont = [&](std::size_t k) -> char32_t {
    unsigned char b = static_cast<unsigned char>(bytes[k]);
    if ((b & 0xC0) != 0x80) throw std::invalid_argument("utf8: bad continuation byte");
    return b & 0x3F;
  };
  while (i < bytes.size()) {
    unsigned char b0 = static_cast<unsigned char>(bytes[i]);
    if (b0 < 0x80) {
      out.push_back(b0);
      i += 1;
    } else if ((b0 & 0xE0) == 0xC0) {
      if (i + 1 >= bytes.size()) throw std::invalid_argument("utf8: truncated sequence");
      char32_t c = (static_cast<char32_t>(b0 & 0x1F) << 6) | cont(i + 1);
      if (c < 0x80) throw std::invalid_argument("utf8: overlong encoding");
      out.push_back(c);
      i += 2;
    } else if ((b0 & 0xF0) == 0xE0) {
      if (i + 2 >= bytes.size()) throw std::invalid_argument("utf8: truncated sequence");
      char32_t c = (static_cast<char32_t>(b0 & 0x0F) << 12) | (cont(i + 1) << 6) | cont(i + 2);
      if (c < 0x800) throw std::invalid_argument("utf8: overlong encoding");
      out.push_back(c);
      i += 3;
    } else if ((b0 & 0xF8) == 0xF0) {
      if (i + 3 >= bytes.size()) throw std::invalid_argument("utf8: truncated sequence");
      char32_t c = (static_cast<char32_t>(b0 & 0x07) << 18) | (cont(i + 1) << 12) |
                   (cont(i + 2) << 6) | cont(i + 3);
      if (c < 0x10000 || c > 0x10FFFF) throw std::invalid_argument("utf8: bad code point");
      out.push_back(c);
      i += 4;
    } else {
      throw std::invalid_argument("utf8: bad lead byte");
    }
  }
  return out;
}

bool is_vowel(char32_t c) {
  switch (c) {
    case U'a': case U'e': case U'i': case U'o': case U'u': case U'y':
    case U'ä': case U'ö': case U'å':  // ä ö å
      return true;
    default:
      return false;
  }
}

bool is_stop(char32_t c) { return c == U'p' || c == U't' || c == U'k'; }

bool is_finnish_letter(char32_t c) {
  if (c >= U'a' && c <= U'z') return true;
  return c == U'ä' || c == U'ö' || c == U'å';
}

std::uint64_t rng::next_below(std::uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("rng: zero bound");
  // rejection sampling on the top of the range
  std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % bound;
}

double rng::next_double() {
  // 53 random bits into [0, 1)
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double rng::next_double(double lo, double hi) { return lo + (hi - lo) * next_double(); }

std::uint64_t mix_seed(std::uint64_t root, std::uint64_t stream) {
  std::uint64_t z = root + 0x9E3779B97F4A7C15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace gradkit
