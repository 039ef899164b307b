// Copyright 2026 The Forge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "forge/document.hpp"

namespace forge {

struct ReplacementRule {
  std::u32string source;
  std::u32string target;
};

// Data-driven normalization rules. Build through parse_profile() or
// persian_default() so that the one-pass fixpoint guarantee is validated.
//
// Application order per document: strip control characters, unify
// characters, remove diacritics, apply replacement rules in declared order,
// collapse horizontal whitespace. Newlines are preserved.
struct NormalizationProfile {
  std::string name = "custom";
  int version = 1;
  bool remove_diacritics = true;
  bool unify_characters = true;
  bool collapse_whitespace = true;
  std::set<char32_t> diacritics;
  std::map<char32_t, char32_t> unification;
  std::vector<ReplacementRule> replacements;
  std::set<char32_t> strip_control_chars;

  // Throws ConfigError if any rule could re-trigger another rule (including
  // itself) or undo a character-level step; such profiles are not idempotent.
  void validate() const;
};

// Plain-text profile format:
//
//   # comment
//   [options]        key = value   (name, version, remove_diacritics, ...)
//   [strip]          U+200E  or a range  U+202A..U+202E
//   [diacritics]     same syntax as [strip]
//   [unify]          source<TAB>target        (single code points)
//   [replace]        source<TAB>target        (code point sequences)
//
// A sequence field is either space-separated U+XXXX tokens or literal UTF-8.
// An empty target in [replace] deletes the source.
NormalizationProfile parse_profile(std::string_view text);
NormalizationProfile load_profile(const std::filesystem::path& path);
std::string format_profile(const NormalizationProfile& profile);

// The shipped Persian rule table (core/data/persian.profile).
const NormalizationProfile& persian_default();

std::u32string normalize_text(std::u32string_view raw, const NormalizationProfile& profile);
std::string normalize_text(std::string_view raw_utf8, const NormalizationProfile& profile);

// Section headings are lines of the form `== Title ==`; the number of marker
// characters is the nesting level.
struct WikiSectionPolicy {
  std::vector<std::string> drop_sections = {"Gallery", "References", "External links",
                                            "نگارخانه", "منابع", "پیوند به بیرون"};
  char32_t heading_marker = U'=';
  int min_marker_run = 2;
};

struct Heading {
  int level = 0;
  std::string title;
};

// Recognizes a heading line; returns nothing for body lines.
std::optional<Heading> parse_heading(std::string_view line, const WikiSectionPolicy& policy);

// Removes every dropped section from its heading up to the next heading of
// the same or higher level. Bytes outside dropped sections are untouched.
// Annotates meta["stripped_sections"] and, when nothing is left,
// meta["emptied"] = true for downstream length filtering.
Document strip_wiki_sections(const Document& doc, const WikiSectionPolicy& policy);

}  // namespace forge
