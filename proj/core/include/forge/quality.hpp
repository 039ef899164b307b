// Copyright 2026 The Forge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "forge/document.hpp"

namespace forge {

// Bounds for the eight document heuristics (rule codes q1..q8).
struct QualityThresholds {
  std::size_t min_words = 50;             // q1, inclusive
  std::size_t max_words = 20000;          // q1, inclusive
  double min_avg_word_len = 3.0;          // q2, inclusive
  double max_avg_word_len = 7.0;          // q2, inclusive
  double max_symbol_ratio = 0.1;          // q3, drop when strictly above
  double min_persian_word_fraction = 0.8; // q4, drop when below
  double max_bullet_line_fraction = 0.9;  // q5, drop when strictly above
  double max_ellipsis_line_fraction = 0.3;// q6, drop when strictly above
  std::size_t min_necessary_words = 2;    // q7, drop when below
  double max_line_word_ratio = 0.1;       // q8, drop when strictly above

  void validate() const;
};

// All values are computed on normalized text. Words are maximal runs of
// non-whitespace; line fractions are over non-blank lines.
struct QualityStats {
  std::size_t word_count = 0;
  double avg_word_len = 0.0;
  double symbol_to_word_ratio = 0.0;
  double persian_word_fraction = 0.0;
  double bullet_line_fraction = 0.0;
  double ellipsis_line_fraction = 0.0;
  std::size_t necessary_word_count = 0;
  double line_to_word_ratio = 0.0;
  std::size_t line_count = 0;

  json to_json() const;
};

struct Lexicons {
  std::set<std::string> profanity;
  std::set<std::string> necessary_words;
  std::vector<std::string> bullet_markers;
  std::vector<std::string> ellipsis_markers;
  std::vector<std::string> special_symbols;
};

struct RepetitionParams {
  double drop_threshold = 0.30;  // duplicate-line character fraction
  std::map<int, double> ngram_caps = {{2, 0.20}, {3, 0.18}, {4, 0.16}};
  std::size_t min_words_for_ngram_check = 50;

  void validate() const;
};

struct QualityConfig {
  QualityThresholds thresholds;
  RepetitionParams repetition;
  Lexicons lexicons;
  bool profanity_enabled = true;
};

QualityConfig quality_config_from_json(const json& j);
QualityConfig load_quality_config(const std::filesystem::path& path);
json to_json(const QualityConfig& config);
// The shipped defaults (core/data/quality.json).
const QualityConfig& default_quality_config();

// Strips leading/trailing punctuation (ASCII and Arabic-script) from a token.
std::u32string_view strip_token_edges(std::u32string_view token);

// Drops iff some whitespace-delimited token run (edge punctuation removed)
// equals a lexicon term; multi-word terms match consecutive tokens. The first
// match in document order is recorded as detail["term"]. Throws ConfigError
// on an empty lexicon.
StageDecision profanity_gate(const Document& doc, const std::set<std::string>& lexicon);

QualityStats compute_quality_stats(const Document& doc, const Lexicons& lexicons);

// Drops iff any rule is violated; every violated code is listed in order.
StageDecision apply_quality_rules(const QualityStats& stats, const QualityThresholds& thresholds);

struct RepetitionResult {
  Document doc;
  StageDecision decision;
  std::size_t lines_removed = 0;
  double duplicate_char_fraction = 0.0;
  int top_ngram_order = 0;
  double top_ngram_fraction = 0.0;
};

// Removes repeated lines beyond their first occurrence. Drops the document
// ("duplicate_line_fraction") when the removed lines hold more than
// drop_threshold of the characters, or ("top_ngram_fraction") when the most
// frequent word n-gram covers more than its cap of the remaining words.
RepetitionResult remove_repetition(const Document& doc, const RepetitionParams& params);

}  // namespace forge
