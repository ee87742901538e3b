#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "charmt/error.hpp"

namespace charmt {

// Decodes UTF-8 into Unicode scalar values. Words are treated as sequences
// of scalar values, not grapheme clusters.
inline std::vector<std::uint32_t> utf8_decode(const std::string& s) {
  std::vector<std::uint32_t> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const unsigned char b0 = static_cast<unsigned char>(s[i]);
    std::uint32_t cp = 0;
    int extra = 0;
    if (b0 < 0x80) {
      cp = b0;
    } else if ((b0 & 0xE0) == 0xC0) {
      cp = b0 & 0x1F;
      extra = 1;
    } else if ((b0 & 0xF0) == 0xE0) {
      cp = b0 & 0x0F;
      extra = 2;
    } else if ((b0 & 0xF8) == 0xF0) {
      cp = b0 & 0x07;
      extra = 3;
    } else {
      fail("invalid UTF-8 byte");
    }
    require(i + extra < s.size(), "truncated UTF-8 sequence");
    for (int k = 1; k <= extra; ++k) {
      const unsigned char b = static_cast<unsigned char>(s[i + k]);
      require((b & 0xC0) == 0x80, "invalid UTF-8 continuation byte");
      cp = (cp << 6) | (b & 0x3F);
    }
    // Reject overlong encodings and surrogates.
    static const std::uint32_t kMin[4] = {0, 0x80, 0x800, 0x10000};
    require(cp >= kMin[extra], "overlong UTF-8 encoding");
    require(cp < 0xD800 || cp > 0xDFFF, "UTF-8 encodes a surrogate");
    require(cp <= 0x10FFFF, "code point out of range");
    out.push_back(cp);
    i += extra + 1;
  }
  return out;
}

inline void utf8_append(std::string& out, std::uint32_t cp) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

inline std::string utf8_encode(const std::vector<std::uint32_t>& cps) {
  std::string out;
  for (const std::uint32_t cp : cps) utf8_append(out, cp);
  return out;
}

// Simple (single code point) lowercasing for ASCII, Latin-1 Supplement and
// Latin Extended-A, which covers the European languages this model targets.
// Characters outside those ranges pass through unchanged.
inline std::uint32_t lowercase_scalar(std::uint32_t cp) {
  if (cp >= 'A' && cp <= 'Z') return cp + 0x20;
  if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 0x20;
  if (cp >= 0x100 && cp <= 0x137) return (cp % 2 == 0) ? cp + 1 : cp;
  if (cp >= 0x139 && cp <= 0x148) return (cp % 2 == 1) ? cp + 1 : cp;
  if (cp >= 0x14A && cp <= 0x177) return (cp % 2 == 0) ? cp + 1 : cp;
  if (cp == 0x178) return 0xFF;
  if (cp == 0x179 || cp == 0x17B || cp == 0x17D) return cp + 1;
  return cp;
}

}  // namespace charmt
