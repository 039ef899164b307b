// Copyright 2026 The Forge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace forge::utf8 {

// Strict decoding: rejects overlongs, surrogates and code points past U+10FFFF.
std::optional<std::u32string> decode(std::string_view bytes);
bool is_valid(std::string_view bytes);

std::string encode(std::u32string_view text);
void append(std::string& out, char32_t cp);

// Unicode White_Space, split into line breaks and everything else.
bool is_line_break(char32_t cp);
bool is_horizontal_space(char32_t cp);
inline bool is_space(char32_t cp) { return is_line_break(cp) || is_horizontal_space(cp); }

// Maximal runs of non-whitespace. Views point into `text`.
std::vector<std::u32string_view> split_words(std::u32string_view text);
std::vector<std::string_view> split_words(std::string_view text);

// Lines split on '\n'; a trailing newline does not produce an extra empty line.
std::vector<std::u32string_view> split_lines(std::u32string_view text);

bool is_blank(std::u32string_view text);

// Arabic-script block plus presentation forms.
bool is_arabic_script(char32_t cp);

// Lowercases ASCII letters only; other code points are left untouched.
std::u32string ascii_lower(std::u32string_view text);

// Parses "U+064A", "064A" or "0x64A".
std::optional<char32_t> parse_codepoint(std::string_view token);
std::string format_codepoint(char32_t cp);

}  // namespace forge::utf8
