// Copyright 2026 The Forge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "forge/document.hpp"

namespace forge {

// Multinomial character n-gram language model (orders 1..3).
//
// Probabilities are additively smoothed relative frequencies:
//   p(g | label, n) = (count(g) / total_n + smoothing) / (1 + smoothing * V_n)
// where V_n counts every n-gram seen under any label plus one slot for unseen
// n-grams. Working on relative frequencies makes the model invariant to
// repeating the whole training corpus.
struct CharNgramModel {
  static constexpr std::uint32_t kFormatVersion = 1;

  struct OrderTable {
    int order = 1;
    std::unordered_map<std::uint64_t, double> log_prob;  // observed n-grams
    double log_unseen = 0.0;
    std::uint64_t vocabulary_size = 1;  // V_n, including the unseen slot
  };

  struct LabelModel {
    double log_prior = 0.0;
    std::vector<OrderTable> orders;
  };

  std::vector<std::string> labels;  // sorted
  std::vector<int> ngram_orders = {1, 2, 3};
  double smoothing = 1e-5;
  std::uint32_t window = 2000;  // classify() reads this many leading code points
  std::vector<LabelModel> per_label;

  std::size_t label_index(std::string_view label) const;  // npos if absent

  // Σ observed p + (V_n - |observed|) * p_unseen; 1 up to rounding.
  double probability_mass(std::size_t label, std::size_t order_slot) const;
};

struct LangDecision {
  std::string label;
  double confidence = 0.0;  // posterior of `label`
  bool kept = false;
  std::vector<std::pair<std::string, double>> posteriors;  // model label order

  double posterior(std::string_view label) const;
};

struct LabeledText {
  std::string text;
  std::string label;
};

inline constexpr std::size_t kMinTrainingChars = 1000;

// Throws ConfigError for fewer than two labels or a non-positive smoothing
// constant, DataError naming the label when a label has < 1,000 characters.
CharNgramModel train_langid(const std::vector<LabeledText>& corpus, double smoothing = 1e-5);

// Posterior over labels from the length-normalized log-likelihood (mean log
// probability per n-gram) plus the log prior. Throws UnclassifiableError on
// empty or whitespace-only text.
LangDecision classify(std::string_view text, const CharNgramModel& model);

// Keeps iff the top label is `target` and its posterior >= threshold.
// Reasons: "empty_text", "wrong_language", "low_confidence".
StageDecision filter_language(const Document& doc, const CharNgramModel& model, std::string_view target,
                              double threshold);

// Same gate for an externally produced (label, confidence) annotation.
StageDecision decide_language(const LangDecision& decision, std::string_view target, double threshold);

void save_langid(const CharNgramModel& model, const std::filesystem::path& path);
CharNgramModel load_langid(const std::filesystem::path& path);
void write_langid(const CharNgramModel& model, std::ostream& out);
CharNgramModel read_langid(std::istream& in);

// Feature extraction shared by training and classification: ASCII-lowercased,
// whitespace runs folded to one space, padded with a space at both ends.
// Keys pack up to three code points (offset by one) into 21-bit lanes.
std::vector<std::uint64_t> char_ngrams(std::u32string_view text, int order);
std::u32string langid_canonical(std::u32string_view text);

}  // namespace forge
