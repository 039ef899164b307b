// Copyright 2026 The Forge Authors
// SPDX-License-Identifier: Apache-2.0

#include "forge/quality.hpp"

#include <algorithm>
#include <unordered_map>

#include "forge/error.hpp"
#include "forge/hash.hpp"
#include "forge/utf8.hpp"

namespace forge {

namespace embedded {
extern const std::string_view kQualityConfig;
}

namespace {

bool is_punct(char32_t c) {
  if (c < 0x80) return (c >= 0x21 && c <= 0x2F) || (c >= 0x3A && c <= 0x40) || (c >= 0x5B && c <= 0x60) ||
                       (c >= 0x7B && c <= 0x7E);
  switch (c) {
    case 0x060C:  // arabic comma
    case 0x061B:  // arabic semicolon
    case 0x061F:  // arabic question mark
    case 0x066A:  // arabic percent
    case 0x066B:
    case 0x066C:
    case 0x06D4:  // arabic full stop
    case 0x00AB:  // «
    case 0x00BB:  // »
    case 0x2026:  // …
    case 0x2013:
    case 0x2014:
    case 0x2018:
    case 0x2019:
    case 0x201C:
    case 0x201D:
      return true;
    default:
      return false;
  }
}

std::vector<std::u32string> decode_all(const std::vector<std::string>& items) {
  std::vector<std::u32string> out;
  for (const auto& s : items) {
    auto d = utf8::decode(s);
    if (!d) throw ConfigError("lexicon entry is not valid UTF-8");
    if (!d->empty()) out.push_back(std::move(*d));
  }
  // Longest first so "..." wins over a shorter marker sharing its prefix.
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.size() != b.size() ? a.size() > b.size() : a < b;
  });
  return out;
}

std::u32string_view trim_space(std::u32string_view s) {
  while (!s.empty() && utf8::is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && utf8::is_space(s.back())) s.remove_suffix(1);
  return s;
}

double get_number(const json& obj, const char* key, double fallback) {
  auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  if (!it->is_number()) throw ConfigError(std::string("quality config: ") + key + " must be a number");
  return it->get<double>();
}

std::size_t get_count(const json& obj, const char* key, std::size_t fallback) {
  auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  if (!it->is_number_unsigned() && !(it->is_number_integer() && it->get<long long>() >= 0))
    throw ConfigError(std::string("quality config: ") + key + " must be a non-negative integer");
  return it->get<std::size_t>();
}

std::vector<std::string> get_strings(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) return {};
  if (!it->is_array()) throw ConfigError(std::string("quality config: ") + key + " must be an array of strings");
  std::vector<std::string> out;
  for (const auto& v : *it) {
    if (!v.is_string()) throw ConfigError(std::string("quality config: ") + key + " must be an array of strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

bool in_unit(double x) { return x >= 0.0 && x <= 1.0; }

}  // namespace

void QualityThresholds::validate() const {
  if (min_words >= max_words) throw ConfigError("quality thresholds: min_words must be < max_words");
  if (!(min_avg_word_len < max_avg_word_len))
    throw ConfigError("quality thresholds: min_avg_word_len must be < max_avg_word_len");
  for (double f : {max_symbol_ratio, min_persian_word_fraction, max_bullet_line_fraction, max_ellipsis_line_fraction,
                   max_line_word_ratio}) {
    if (!in_unit(f)) throw ConfigError("quality thresholds: fractions must lie in [0, 1]");
  }
}

void RepetitionParams::validate() const {
  if (!in_unit(drop_threshold)) throw ConfigError("repetition: drop_threshold must lie in [0, 1]");
  for (const auto& [n, cap] : ngram_caps) {
    if (n < 1) throw ConfigError("repetition: n-gram order must be >= 1");
    if (!in_unit(cap)) throw ConfigError("repetition: n-gram caps must lie in [0, 1]");
  }
}

json QualityStats::to_json() const {
  return json{{"word_count", word_count},
              {"avg_word_len", avg_word_len},
              {"symbol_to_word_ratio", symbol_to_word_ratio},
              {"persian_word_fraction", persian_word_fraction},
              {"bullet_line_fraction", bullet_line_fraction},
              {"ellipsis_line_fraction", ellipsis_line_fraction},
              {"necessary_word_count", necessary_word_count},
              {"line_to_word_ratio", line_to_word_ratio},
              {"line_count", line_count}};
}

QualityConfig quality_config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("quality config must be a JSON object");
  if (auto s = j.find("schema"); s != j.end() && *s != "forge.quality/1")
    throw ConfigError("quality config: unsupported schema " + s->dump());
  QualityConfig c;
  if (auto t = j.find("thresholds"); t != j.end()) {
    auto& q = c.thresholds;
    q.min_words = get_count(*t, "min_words", q.min_words);
    q.max_words = get_count(*t, "max_words", q.max_words);
    q.min_avg_word_len = get_number(*t, "min_avg_word_len", q.min_avg_word_len);
    q.max_avg_word_len = get_number(*t, "max_avg_word_len", q.max_avg_word_len);
    q.max_symbol_ratio = get_number(*t, "max_symbol_ratio", q.max_symbol_ratio);
    q.min_persian_word_fraction = get_number(*t, "min_persian_word_fraction", q.min_persian_word_fraction);
    q.max_bullet_line_fraction = get_number(*t, "max_bullet_line_fraction", q.max_bullet_line_fraction);
    q.max_ellipsis_line_fraction = get_number(*t, "max_ellipsis_line_fraction", q.max_ellipsis_line_fraction);
    q.min_necessary_words = get_count(*t, "min_necessary_words", q.min_necessary_words);
    q.max_line_word_ratio = get_number(*t, "max_line_word_ratio", q.max_line_word_ratio);
  }
  if (auto r = j.find("repetition"); r != j.end()) {
    auto& p = c.repetition;
    p.drop_threshold = get_number(*r, "drop_threshold", p.drop_threshold);
    p.min_words_for_ngram_check = get_count(*r, "min_words_for_ngram_check", p.min_words_for_ngram_check);
    if (auto caps = r->find("ngram_caps"); caps != r->end()) {
      if (!caps->is_object()) throw ConfigError("repetition.ngram_caps must be an object");
      p.ngram_caps.clear();
      for (const auto& [k, v] : caps->items()) {
        if (!v.is_number()) throw ConfigError("repetition.ngram_caps values must be numbers");
        p.ngram_caps[std::stoi(k)] = v.get<double>();
      }
    }
  }
  if (auto l = j.find("lexicons"); l != j.end()) {
    auto profanity = get_strings(*l, "profanity");
    auto necessary = get_strings(*l, "necessary_words");
    c.lexicons.profanity = {profanity.begin(), profanity.end()};
    c.lexicons.necessary_words = {necessary.begin(), necessary.end()};
    c.lexicons.bullet_markers = get_strings(*l, "bullet_markers");
    c.lexicons.ellipsis_markers = get_strings(*l, "ellipsis_markers");
    c.lexicons.special_symbols = get_strings(*l, "special_symbols");
  }
  if (auto e = j.find("profanity_enabled"); e != j.end()) c.profanity_enabled = e->get<bool>();
  c.thresholds.validate();
  c.repetition.validate();
  if (c.profanity_enabled && c.lexicons.profanity.empty())
    throw ConfigError("quality config: profanity rule enabled with an empty lexicon");
  if (c.thresholds.min_necessary_words > 0 && c.lexicons.necessary_words.empty())
    throw ConfigError("quality config: necessary-word rule enabled with an empty lexicon");
  return c;
}

QualityConfig load_quality_config(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
  return quality_config_from_json(j);
}

json to_json(const QualityConfig& c) {
  const auto& t = c.thresholds;
  json caps = json::object();
  for (const auto& [n, cap] : c.repetition.ngram_caps) caps[std::to_string(n)] = cap;
  return json{{"schema", "forge.quality/1"},
              {"thresholds",
               {{"min_words", t.min_words},
                {"max_words", t.max_words},
                {"min_avg_word_len", t.min_avg_word_len},
                {"max_avg_word_len", t.max_avg_word_len},
                {"max_symbol_ratio", t.max_symbol_ratio},
                {"min_persian_word_fraction", t.min_persian_word_fraction},
                {"max_bullet_line_fraction", t.max_bullet_line_fraction},
                {"max_ellipsis_line_fraction", t.max_ellipsis_line_fraction},
                {"min_necessary_words", t.min_necessary_words},
                {"max_line_word_ratio", t.max_line_word_ratio}}},
              {"repetition",
               {{"drop_threshold", c.repetition.drop_threshold},
                {"ngram_caps", caps},
                {"min_words_for_ngram_check", c.repetition.min_words_for_ngram_check}}},
              {"lexicons",
               {{"profanity", c.lexicons.profanity},
                {"necessary_words", c.lexicons.necessary_words},
                {"bullet_markers", c.lexicons.bullet_markers},
                {"ellipsis_markers", c.lexicons.ellipsis_markers},
                {"special_symbols", c.lexicons.special_symbols}}},
              {"profanity_enabled", c.profanity_enabled}};
}

const QualityConfig& default_quality_config() {
  static const QualityConfig config = quality_config_from_json(json::parse(embedded::kQualityConfig));
  return config;
}

std::u32string_view strip_token_edges(std::u32string_view token) {
  while (!token.empty() && is_punct(token.front())) token.remove_prefix(1);
  while (!token.empty() && is_punct(token.back())) token.remove_suffix(1);
  return token;
}

StageDecision profanity_gate(const Document& doc, const std::set<std::string>& lexicon) {
  if (lexicon.empty()) throw ConfigError("profanity gate enabled with an empty lexicon");
  // term tokens keyed by their first token
  std::unordered_map<std::u32string, std::vector<std::pair<std::vector<std::u32string>, const std::string*>>> terms;
  for (const auto& term : lexicon) {
    auto decoded = utf8::decode(term);
    if (!decoded) throw ConfigError("profanity lexicon entry is not valid UTF-8");
    std::vector<std::u32string> parts;
    for (auto w : utf8::split_words(std::u32string_view(*decoded))) {
      auto s = strip_token_edges(w);
      if (!s.empty()) parts.emplace_back(s);
    }
    if (parts.empty()) continue;
    auto first = parts.front();
    terms[first].emplace_back(std::move(parts), &term);
  }

  auto decoded = utf8::decode(doc.text);
  if (!decoded) throw DataError("profanity_gate: text is not valid UTF-8");
  std::vector<std::u32string_view> tokens;
  for (auto w : utf8::split_words(std::u32string_view(*decoded))) tokens.push_back(strip_token_edges(w));

  for (std::size_t i = 0; i < tokens.size(); ++i) {
    auto it = terms.find(std::u32string(tokens[i]));
    if (it == terms.end()) continue;
    for (const auto& [parts, original] : it->second) {
      if (i + parts.size() > tokens.size()) continue;
      bool match = true;
      for (std::size_t k = 1; k < parts.size() && match; ++k) match = tokens[i + k] == parts[k];
      if (match) return StageDecision::drop("profanity", {"profanity"}, json{{"term", *original}, {"token_index", i}});
    }
  }
  return StageDecision::keep("profanity");
}

QualityStats compute_quality_stats(const Document& doc, const Lexicons& lexicons) {
  auto decoded = utf8::decode(doc.text);
  if (!decoded) throw DataError("compute_quality_stats: text is not valid UTF-8");
  const std::u32string_view text(*decoded);
  QualityStats s;

  const auto words = utf8::split_words(text);
  s.word_count = words.size();

  std::set<std::u32string> necessary;
  for (const auto& w : lexicons.necessary_words)
    if (auto d = utf8::decode(w)) necessary.insert(*d);

  std::size_t total_len = 0;
  std::size_t persian_words = 0;
  for (auto w : words) {
    total_len += w.size();
    if (std::any_of(w.begin(), w.end(), utf8::is_arabic_script)) ++persian_words;
    if (necessary.contains(std::u32string(strip_token_edges(w)))) ++s.necessary_word_count;
  }

  const auto symbols = decode_all(lexicons.special_symbols);
  std::size_t symbol_count = 0;
  for (std::size_t i = 0; i < text.size();) {
    std::size_t step = 1;
    for (const auto& sym : symbols) {
      if (text.substr(i, sym.size()) == sym) {
        ++symbol_count;
        step = sym.size();
        break;
      }
    }
    i += step;
  }

  const auto bullets = decode_all(lexicons.bullet_markers);
  const auto ellipses = decode_all(lexicons.ellipsis_markers);
  std::size_t bullet_lines = 0;
  std::size_t ellipsis_lines = 0;
  for (auto line : utf8::split_lines(text)) {
    auto body = trim_space(line);
    if (body.empty()) continue;
    ++s.line_count;
    if (std::any_of(bullets.begin(), bullets.end(), [&](const auto& b) { return body.starts_with(b); }))
      ++bullet_lines;
    if (std::any_of(ellipses.begin(), ellipses.end(), [&](const auto& e) { return body.ends_with(e); }))
      ++ellipsis_lines;
  }

  if (s.word_count == 0) return s;  // ratios stay 0
  const auto wc = static_cast<double>(s.word_count);
  s.avg_word_len = static_cast<double>(total_len) / wc;
  s.symbol_to_word_ratio = static_cast<double>(symbol_count) / wc;
  s.persian_word_fraction = static_cast<double>(persian_words) / wc;
  s.line_to_word_ratio = static_cast<double>(s.line_count) / wc;
  if (s.line_count > 0) {
    s.bullet_line_fraction = static_cast<double>(bullet_lines) / static_cast<double>(s.line_count);
    s.ellipsis_line_fraction = static_cast<double>(ellipsis_lines) / static_cast<double>(s.line_count);
  }
  return s;
}

StageDecision apply_quality_rules(const QualityStats& s, const QualityThresholds& t) {
  std::vector<std::string> codes;
  if (s.word_count < t.min_words || s.word_count > t.max_words) codes.emplace_back("q1");
  if (s.avg_word_len < t.min_avg_word_len || s.avg_word_len > t.max_avg_word_len) codes.emplace_back("q2");
  if (s.symbol_to_word_ratio > t.max_symbol_ratio) codes.emplace_back("q3");
  if (s.persian_word_fraction < t.min_persian_word_fraction) codes.emplace_back("q4");
  if (s.bullet_line_fraction > t.max_bullet_line_fraction) codes.emplace_back("q5");
  if (s.ellipsis_line_fraction > t.max_ellipsis_line_fraction) codes.emplace_back("q6");
  if (s.necessary_word_count < t.min_necessary_words) codes.emplace_back("q7");
  if (s.line_to_word_ratio > t.max_line_word_ratio) codes.emplace_back("q8");
  if (codes.empty()) {
    auto keep = StageDecision::keep("quality");
    keep.detail = s.to_json();
    return keep;
  }
  return StageDecision::drop("quality", std::move(codes), s.to_json());
}

RepetitionResult remove_repetition(const Document& doc, const RepetitionParams& params) {
  auto decoded = utf8::decode(doc.text);
  if (!decoded) throw DataError("remove_repetition: text is not valid UTF-8");

  RepetitionResult result{doc, StageDecision::keep("repetition")};

  // Pass 1: exact duplicate lines. Work on byte offsets so kept text is
  // byte-identical to the input.
  std::string_view text = doc.text;
  std::unordered_map<std::string_view, int> seen;
  std::string cleaned;
  cleaned.reserve(text.size());
  std::size_t total_chars = 0;
  std::size_t dup_chars = 0;
  auto cp_len = [](std::string_view s) {
    std::size_t n = 0;
    for (unsigned char c : s) n += (c & 0xC0) != 0x80;
    return n;
  };
  for (std::size_t start = 0; start < text.size();) {
    const auto nl = text.find('\n', start);
    const std::size_t end = nl == std::string_view::npos ? text.size() : nl + 1;
    auto with_nl = text.substr(start, end - start);
    auto line = with_nl;
    if (!line.empty() && line.back() == '\n') line.remove_suffix(1);
    start = end;
    const bool blank = line.find_first_not_of(" \t\r") == std::string_view::npos;
    if (blank) {
      cleaned.append(with_nl);
      continue;
    }
    const auto n = cp_len(line);
    total_chars += n;
    if (seen[line]++ > 0) {
      dup_chars += n;
      ++result.lines_removed;
      continue;
    }
    cleaned.append(with_nl);
  }
  result.duplicate_char_fraction = total_chars == 0 ? 0.0 : static_cast<double>(dup_chars) / static_cast<double>(total_chars);
  json detail{{"lines_removed", result.lines_removed}, {"duplicate_char_fraction", result.duplicate_char_fraction}};
  if (result.duplicate_char_fraction > params.drop_threshold) {
    result.decision = StageDecision::drop("repetition", {"duplicate_line_fraction"}, std::move(detail));
    return result;
  }
  if (result.lines_removed > 0) result.doc.text = std::move(cleaned);

  // Pass 2: most frequent word n-gram on the cleaned text.
  auto clean_decoded = utf8::decode(result.doc.text);
  const auto words = utf8::split_words(std::u32string_view(*clean_decoded));
  if (words.size() >= params.min_words_for_ngram_check) {
    std::vector<std::uint64_t> word_ids;
    word_ids.reserve(words.size());
    for (auto w : words) word_ids.push_back(xxh64_bytes(w.data(), w.size() * sizeof(char32_t)));
    for (const auto& [n, cap] : params.ngram_caps) {
      if (words.size() < static_cast<std::size_t>(n)) continue;
      const std::size_t count = words.size() - n + 1;
      std::unordered_map<std::uint64_t, std::vector<std::size_t>> positions;
      for (std::size_t i = 0; i < count; ++i) {
        std::uint64_t h = static_cast<std::uint64_t>(n);
        for (int k = 0; k < n; ++k) h = xxh64_bytes(&word_ids[i + k], sizeof(std::uint64_t), h);
        positions[h].push_back(i);
      }
      std::size_t best_count = 0;
      for (const auto& [h, pos] : positions) best_count = std::max(best_count, pos.size());
      // Among n-grams tied for most frequent, take the widest coverage.
      std::size_t best_covered = 0;
      for (const auto& [h, pos] : positions) {
        if (pos.size() != best_count) continue;
        std::size_t covered = 0;
        std::size_t reach = 0;
        for (auto p : pos) {
          const std::size_t from = std::max(p, reach);
          const std::size_t to = p + n;
          if (to > from) covered += to - from;
          reach = std::max(reach, to);
        }
        best_covered = std::max(best_covered, covered);
      }
      const double fraction = static_cast<double>(best_covered) / static_cast<double>(words.size());
      if (fraction > result.top_ngram_fraction) {
        result.top_ngram_fraction = fraction;
        result.top_ngram_order = n;
      }
      if (fraction > cap) {
        detail["ngram_order"] = n;
        detail["top_ngram_fraction"] = fraction;
        result.decision = StageDecision::drop("repetition", {"top_ngram_fraction"}, std::move(detail));
        result.doc = doc;
        return result;
      }
    }
  }
  detail["top_ngram_fraction"] = result.top_ngram_fraction;
  if (result.lines_removed > 0) {
    result.decision = StageDecision{"repetition", Verdict::transform, {"duplicate_lines_removed"}, std::move(detail)};
  } else {
    result.decision.detail = std::move(detail);
  }
  return result;
}

}  // namespace forge
