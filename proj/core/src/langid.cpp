// Copyright 2026 The Forge Authors
// SPDX-License-Identifier: Apache-2.0

#include "forge/langid.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <unordered_set>

#include "forge/binary_io.hpp"
#include "forge/error.hpp"
#include "forge/utf8.hpp"

namespace forge {

namespace {

constexpr std::string_view kMagic = "FGLANGID";

std::uint64_t pack(std::u32string_view gram) {
  std::uint64_t key = 0;
  for (char32_t c : gram) key = (key << 21) | (static_cast<std::uint64_t>(c) + 1);
  return key;
}

double log_sum_exp(const std::vector<double>& xs) {
  const double m = *std::max_element(xs.begin(), xs.end());
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace

std::u32string langid_canonical(std::u32string_view text) {
  std::u32string out;
  out.reserve(text.size() + 2);
  out.push_back(U' ');
  for (char32_t c : text) {
    if (utf8::is_space(c)) {
      if (out.back() != U' ') out.push_back(U' ');
      continue;
    }
    if (c >= U'A' && c <= U'Z') c = c - U'A' + U'a';
    out.push_back(c);
  }
  if (out.back() != U' ') out.push_back(U' ');
  return out;
}

std::vector<std::uint64_t> char_ngrams(std::u32string_view text, int order) {
  std::vector<std::uint64_t> grams;
  if (order < 1 || text.size() < static_cast<std::size_t>(order)) return grams;
  grams.reserve(text.size() - order + 1);
  for (std::size_t i = 0; i + order <= text.size(); ++i) {
    auto g = text.substr(i, static_cast<std::size_t>(order));
    // A lone padding space carries no signal.
    if (order == 1 && g[0] == U' ') continue;
    grams.push_back(pack(g));
  }
  return grams;
}

std::size_t CharNgramModel::label_index(std::string_view label) const {
  auto it = std::find(labels.begin(), labels.end(), label);
  return it == labels.end() ? static_cast<std::size_t>(-1) : static_cast<std::size_t>(it - labels.begin());
}

double CharNgramModel::probability_mass(std::size_t label, std::size_t order_slot) const {
  const auto& table = per_label.at(label).orders.at(order_slot);
  double mass = 0.0;
  for (const auto& [key, lp] : table.log_prob) mass += std::exp(lp);
  mass += static_cast<double>(table.vocabulary_size - table.log_prob.size()) * std::exp(table.log_unseen);
  return mass;
}

double LangDecision::posterior(std::string_view name) const {
  for (const auto& [l, p] : posteriors)
    if (l == name) return p;
  return 0.0;
}

CharNgramModel train_langid(const std::vector<LabeledText>& corpus, double smoothing) {
  if (!(smoothing > 0.0) || !std::isfinite(smoothing)) throw ConfigError("langid smoothing must be positive");
  std::map<std::string, std::vector<const LabeledText*>> by_label;
  for (const auto& item : corpus) by_label[item.label].push_back(&item);
  if (by_label.size() < 2)
    throw ConfigError("langid training needs at least 2 labels, got " + std::to_string(by_label.size()));

  CharNgramModel model;
  model.smoothing = smoothing;
  const auto n_orders = model.ngram_orders.size();

  // counts[label][order] : key -> count
  std::vector<std::vector<std::unordered_map<std::uint64_t, std::uint64_t>>> counts;
  std::vector<std::vector<std::uint64_t>> totals;
  std::vector<std::unordered_set<std::uint64_t>> union_vocab(n_orders);

  for (const auto& [label, items] : by_label) {
    model.labels.push_back(label);
    auto& label_counts = counts.emplace_back(n_orders);
    auto& label_totals = totals.emplace_back(n_orders, 0);
    std::size_t chars = 0;
    for (const auto* item : items) {
      auto decoded = utf8::decode(item->text);
      if (!decoded) throw DataError("langid training text for label '" + label + "' is not valid UTF-8");
      const auto canon = langid_canonical(*decoded);
      for (char32_t c : *decoded) chars += utf8::is_space(c) ? 0 : 1;
      for (std::size_t o = 0; o < n_orders; ++o) {
        for (auto key : char_ngrams(canon, model.ngram_orders[o])) {
          ++label_counts[o][key];
          ++label_totals[o];
        }
      }
    }
    if (chars < kMinTrainingChars)
      throw DataError("langid label '" + label + "' has only " + std::to_string(chars) +
                      " characters of training text (need " + std::to_string(kMinTrainingChars) + ")");
    for (std::size_t o = 0; o < n_orders; ++o)
      for (const auto& [key, c] : label_counts[o]) union_vocab[o].insert(key);
  }

  const double log_prior = -std::log(static_cast<double>(model.labels.size()));
  for (std::size_t l = 0; l < model.labels.size(); ++l) {
    auto& lm = model.per_label.emplace_back();
    lm.log_prior = log_prior;
    for (std::size_t o = 0; o < n_orders; ++o) {
      auto& table = lm.orders.emplace_back();
      table.order = model.ngram_orders[o];
      table.vocabulary_size = union_vocab[o].size() + 1;
      const double denom = 1.0 + smoothing * static_cast<double>(table.vocabulary_size);
      const double total = static_cast<double>(totals[l][o]);
      table.log_unseen = std::log(smoothing / denom);
      table.log_prob.reserve(counts[l][o].size());
      for (const auto& [key, c] : counts[l][o]) {
        table.log_prob.emplace(key, std::log((static_cast<double>(c) / total + smoothing) / denom));
      }
    }
  }
  return model;
}

LangDecision classify(std::string_view text, const CharNgramModel& model) {
  auto decoded = utf8::decode(text);
  if (!decoded) throw DataError("classify: text is not valid UTF-8");
  if (utf8::is_blank(*decoded)) throw UnclassifiableError("empty or whitespace-only text");
  if (model.labels.empty()) throw ConfigError("classify: model has no labels");

  std::u32string_view window(*decoded);
  if (window.size() > model.window) window = window.substr(0, model.window);
  const auto canon = langid_canonical(window);

  std::vector<std::vector<std::uint64_t>> grams;
  std::size_t n_grams = 0;
  for (int order : model.ngram_orders) {
    grams.push_back(char_ngrams(canon, order));
    n_grams += grams.back().size();
  }
  if (n_grams == 0) throw UnclassifiableError("no character n-grams in text");

  std::vector<double> scores;
  scores.reserve(model.labels.size());
  for (const auto& lm : model.per_label) {
    double ll = 0.0;
    for (std::size_t o = 0; o < grams.size(); ++o) {
      const auto& table = lm.orders[o];
      for (auto key : grams[o]) {
        auto it = table.log_prob.find(key);
        ll += it == table.log_prob.end() ? table.log_unseen : it->second;
      }
    }
    scores.push_back(lm.log_prior + ll / static_cast<double>(n_grams));
  }
  const double norm = log_sum_exp(scores);

  LangDecision decision;
  std::size_t best = 0;
  for (std::size_t l = 0; l < scores.size(); ++l) {
    const double p = std::exp(scores[l] - norm);
    decision.posteriors.emplace_back(model.labels[l], p);
    if (scores[l] > scores[best]) best = l;
  }
  decision.label = model.labels[best];
  decision.confidence = decision.posteriors[best].second;
  return decision;
}

StageDecision decide_language(const LangDecision& decision, std::string_view target, double threshold) {
  json detail{{"label", decision.label},
              {"confidence", decision.confidence},
              {"target", target},
              {"target_posterior", decision.posterior(target)}};
  if (decision.label != target) return StageDecision::drop("langid", {"wrong_language"}, std::move(detail));
  if (decision.confidence < threshold) return StageDecision::drop("langid", {"low_confidence"}, std::move(detail));
  auto keep = StageDecision::keep("langid");
  keep.detail = std::move(detail);
  return keep;
}

StageDecision filter_language(const Document& doc, const CharNgramModel& model, std::string_view target,
                              double threshold) {
  if (threshold < 0.0 || threshold > 1.0) throw ConfigError("langid threshold must lie in [0, 1]");
  try {
    return decide_language(classify(doc.text, model), target, threshold);
  } catch (const UnclassifiableError&) {
    return StageDecision::drop("langid", {"empty_text"});
  }
}

// ---------------------------------------------------------------------------
// Binary model file: magic, version, smoothing, window, orders, then per label
// its name, prior and per-order tables sorted by key.

void write_langid(const CharNgramModel& model, std::ostream& out) {
  out.write(kMagic.data(), kMagic.size());
  binio::put<std::uint32_t>(out, CharNgramModel::kFormatVersion);
  binio::put<double>(out, model.smoothing);
  binio::put<std::uint32_t>(out, model.window);
  binio::put<std::uint32_t>(out, static_cast<std::uint32_t>(model.ngram_orders.size()));
  for (int o : model.ngram_orders) binio::put<std::uint32_t>(out, static_cast<std::uint32_t>(o));
  binio::put<std::uint32_t>(out, static_cast<std::uint32_t>(model.labels.size()));
  for (std::size_t l = 0; l < model.labels.size(); ++l) {
    binio::put_string(out, model.labels[l]);
    const auto& lm = model.per_label[l];
    binio::put<double>(out, lm.log_prior);
    for (const auto& table : lm.orders) {
      binio::put<std::uint64_t>(out, table.vocabulary_size);
      binio::put<double>(out, table.log_unseen);
      std::vector<std::pair<std::uint64_t, double>> entries(table.log_prob.begin(), table.log_prob.end());
      std::sort(entries.begin(), entries.end());
      binio::put<std::uint64_t>(out, entries.size());
      for (const auto& [key, lp] : entries) {
        binio::put<std::uint64_t>(out, key);
        binio::put<double>(out, lp);
      }
    }
  }
}

CharNgramModel read_langid(std::istream& in) {
  binio::expect_magic(in, kMagic, "langid model");
  const auto version = binio::get<std::uint32_t>(in);
  if (version != CharNgramModel::kFormatVersion)
    throw DataError("unsupported langid model version " + std::to_string(version));
  CharNgramModel model;
  model.smoothing = binio::get<double>(in);
  model.window = binio::get<std::uint32_t>(in);
  const auto n_orders = binio::get<std::uint32_t>(in);
  if (n_orders == 0 || n_orders > 8) throw DataError("corrupt langid model: order count");
  model.ngram_orders.clear();
  for (std::uint32_t i = 0; i < n_orders; ++i) model.ngram_orders.push_back(static_cast<int>(binio::get<std::uint32_t>(in)));
  const auto n_labels = binio::get<std::uint32_t>(in);
  for (std::uint32_t l = 0; l < n_labels; ++l) {
    model.labels.push_back(binio::get_string(in, 256));
    auto& lm = model.per_label.emplace_back();
    lm.log_prior = binio::get<double>(in);
    for (std::uint32_t o = 0; o < n_orders; ++o) {
      auto& table = lm.orders.emplace_back();
      table.order = model.ngram_orders[o];
      table.vocabulary_size = binio::get<std::uint64_t>(in);
      table.log_unseen = binio::get<double>(in);
      const auto n = binio::get<std::uint64_t>(in);
      table.log_prob.reserve(std::min<std::uint64_t>(n, 1u << 20));
      for (std::uint64_t i = 0; i < n; ++i) {
        const auto key = binio::get<std::uint64_t>(in);
        table.log_prob.emplace(key, binio::get<double>(in));
      }
    }
  }
  return model;
}

void save_langid(const CharNgramModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  write_langid(model, out);
}

CharNgramModel load_langid(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return read_langid(in);
}

}  // namespace forge
