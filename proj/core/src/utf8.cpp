// Copyright 2026 The Forge Authors
// SPDX-License-Identifier: Apache-2.0

#include "forge/utf8.hpp"

#include <charconv>
#include <cstdio>

namespace forge::utf8 {

std::optional<std::u32string> decode(std::string_view bytes) {
  std::u32string out;
  out.reserve(bytes.size());
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const auto* end = p + bytes.size();
  while (p < end) {
    const unsigned char b0 = *p;
    if (b0 < 0x80) {
      out.push_back(b0);
      ++p;
      continue;
    }
    int len;
    char32_t cp;
    char32_t min;
    if ((b0 & 0xE0) == 0xC0) {
      len = 2, cp = b0 & 0x1F, min = 0x80;
    } else if ((b0 & 0xF0) == 0xE0) {
      len = 3, cp = b0 & 0x0F, min = 0x800;
    } else if ((b0 & 0xF8) == 0xF0) {
      len = 4, cp = b0 & 0x07, min = 0x10000;
    } else {
      return std::nullopt;
    }
    if (end - p < len) return std::nullopt;
    for (int i = 1; i < len; ++i) {
      const unsigned char b = p[i];
      if ((b & 0xC0) != 0x80) return std::nullopt;
      cp = (cp << 6) | (b & 0x3F);
    }
    if (cp < min || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return std::nullopt;
    out.push_back(cp);
    p += len;
  }
  return out;
}

bool is_valid(std::string_view bytes) { return decode(bytes).has_value(); }

void append(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

std::string encode(std::u32string_view text) {
  std::string out;
  out.reserve(text.size() * 2);
  for (char32_t cp : text) append(out, cp);
  return out;
}

bool is_line_break(char32_t cp) {
  return cp == U'\n' || cp == 0x0B || cp == 0x0C || cp == U'\r' || cp == 0x85 || cp == 0x2028 ||
         cp == 0x2029;
}

bool is_horizontal_space(char32_t cp) {
  return cp == U' ' || cp == U'\t' || cp == 0xA0 || cp == 0x1680 || (cp >= 0x2000 && cp <= 0x200A) ||
         cp == 0x202F || cp == 0x205F || cp == 0x3000;
}

template <typename Char>
static std::vector<std::basic_string_view<Char>> split_words_impl(std::basic_string_view<Char> text,
                                                                  auto&& space) {
  std::vector<std::basic_string_view<Char>> words;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && space(text[i])) ++i;
    const std::size_t start = i;
    while (i < text.size() && !space(text[i])) ++i;
    if (i > start) words.push_back(text.substr(start, i - start));
  }
  return words;
}

std::vector<std::u32string_view> split_words(std::u32string_view text) {
  return split_words_impl(text, [](char32_t c) { return is_space(c); });
}

std::vector<std::string_view> split_words(std::string_view text) {
  // Non-ASCII whitespace needs decoding; go through the code point path and
  // map offsets back.
  std::vector<std::string_view> words;
  const auto* p = text.data();
  std::size_t i = 0;
  auto cp_at = [&](std::size_t pos, std::size_t& len) -> char32_t {
    const unsigned char b0 = static_cast<unsigned char>(p[pos]);
    if (b0 < 0x80) {
      len = 1;
      return b0;
    }
    len = (b0 & 0xE0) == 0xC0 ? 2 : (b0 & 0xF0) == 0xE0 ? 3 : (b0 & 0xF8) == 0xF0 ? 4 : 1;
    if (pos + len > text.size()) {
      len = 1;
      return 0xFFFD;
    }
    char32_t cp = len == 2 ? (b0 & 0x1F) : len == 3 ? (b0 & 0x0F) : (b0 & 0x07);
    for (std::size_t k = 1; k < len; ++k) cp = (cp << 6) | (static_cast<unsigned char>(p[pos + k]) & 0x3F);
    return cp;
  };
  while (i < text.size()) {
    std::size_t len = 1;
    while (i < text.size() && is_space(cp_at(i, len))) i += len;
    const std::size_t start = i;
    while (i < text.size() && !is_space(cp_at(i, len))) i += len;
    if (i > start) words.push_back(text.substr(start, i - start));
  }
  return words;
}

std::vector<std::u32string_view> split_lines(std::u32string_view text) {
  std::vector<std::u32string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    const auto nl = text.find(U'\n', start);
    if (nl == std::u32string_view::npos) {
      lines.push_back(text.substr(start));
      break;
    }
    lines.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  return lines;
}

bool is_blank(std::u32string_view text) {
  for (char32_t c : text)
    if (!is_space(c)) return false;
  return true;
}

bool is_arabic_script(char32_t cp) {
  return (cp >= 0x0600 && cp <= 0x06FF) || (cp >= 0x0750 && cp <= 0x077F) ||
         (cp >= 0xFB50 && cp <= 0xFDFF) || (cp >= 0xFE70 && cp <= 0xFEFC);
}

std::u32string ascii_lower(std::u32string_view text) {
  std::u32string out(text);
  for (auto& c : out)
    if (c >= U'A' && c <= U'Z') c = c - U'A' + U'a';
  return out;
}

std::optional<char32_t> parse_codepoint(std::string_view token) {
  if (token.starts_with("U+") || token.starts_with("u+") || token.starts_with("0x") ||
      token.starts_with("0X"))
    token.remove_prefix(2);
  if (token.empty() || token.size() > 6) return std::nullopt;
  std::uint32_t value = 0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value, 16);
  if (ec != std::errc{} || ptr != token.data() + token.size()) return std::nullopt;
  if (value > 0x10FFFF || (value >= 0xD800 && value <= 0xDFFF)) return std::nullopt;
  return static_cast<char32_t>(value);
}

std::string format_codepoint(char32_t cp) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "U+%04X", static_cast<unsigned>(cp));
  return buf;
}

}  // namespace forge::utf8
