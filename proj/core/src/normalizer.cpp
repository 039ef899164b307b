// Copyright 2026 The Forge Authors
// SPDX-License-Identifier: Apache-2.0

#include "forge/normalizer.hpp"

#include <algorithm>
#include <sstream>

#include "forge/error.hpp"
#include "forge/utf8.hpp"

namespace forge {

namespace embedded {
extern const std::string_view kPersianProfile;
}

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      parts.push_back(s.substr(start));
      return parts;
    }
    parts.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

std::u32string parse_sequence(std::string_view field, std::size_t line_no) {
  field = trim(field);
  if (field.empty()) return {};
  std::u32string out;
  bool all_codepoints = true;
  for (auto tok : split(field, ' ')) {
    if (tok.empty()) continue;
    if (!(tok.starts_with("U+") || tok.starts_with("u+"))) {
      all_codepoints = false;
      break;
    }
    auto cp = utf8::parse_codepoint(tok);
    if (!cp) throw ConfigError("profile line " + std::to_string(line_no) + ": bad code point " + std::string(tok));
    out.push_back(*cp);
  }
  if (all_codepoints) return out;
  auto decoded = utf8::decode(field);
  if (!decoded) throw ConfigError("profile line " + std::to_string(line_no) + ": invalid UTF-8");
  return *decoded;
}

void parse_range_line(std::string_view line, std::size_t line_no, std::set<char32_t>& into) {
  // Anything after the first whitespace is a comment.
  const auto ws = line.find_first_of(" \t");
  auto spec = line.substr(0, ws);
  char32_t lo, hi;
  if (auto dots = spec.find(".."); dots != std::string_view::npos) {
    auto a = utf8::parse_codepoint(spec.substr(0, dots));
    auto b = utf8::parse_codepoint(spec.substr(dots + 2));
    if (!a || !b || *a > *b)
      throw ConfigError("profile line " + std::to_string(line_no) + ": bad range " + std::string(spec));
    lo = *a, hi = *b;
  } else {
    auto a = utf8::parse_codepoint(spec);
    if (!a) throw ConfigError("profile line " + std::to_string(line_no) + ": bad code point " + std::string(spec));
    lo = hi = *a;
  }
  for (char32_t c = lo; c <= hi; ++c) into.insert(c);
}

bool parse_bool(std::string_view v, std::size_t line_no) {
  if (v == "true" || v == "on" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "off" || v == "no" || v == "0") return false;
  throw ConfigError("profile line " + std::to_string(line_no) + ": expected a boolean, got " + std::string(v));
}

// Character-level steps only (strip, unify, diacritics).
void apply_char_steps(std::u32string_view in, const NormalizationProfile& p, std::u32string& out) {
  out.clear();
  out.reserve(in.size());
  for (char32_t c : in) {
    if (p.strip_control_chars.contains(c)) continue;
    if (p.unify_characters) {
      if (auto it = p.unification.find(c); it != p.unification.end()) c = it->second;
    }
    if (p.remove_diacritics && p.diacritics.contains(c)) continue;
    out.push_back(c);
  }
}

void replace_all(std::u32string& text, const ReplacementRule& rule) {
  if (rule.source.empty() || text.size() < rule.source.size()) return;
  std::size_t pos = text.find(rule.source);
  if (pos == std::u32string::npos) return;
  std::u32string out;
  out.reserve(text.size());
  std::size_t last = 0;
  while (pos != std::u32string::npos) {
    out.append(text, last, pos - last);
    out += rule.target;
    last = pos + rule.source.size();
    pos = text.find(rule.source, last);
  }
  out.append(text, last, std::u32string::npos);
  text = std::move(out);
}

void collapse_spaces(std::u32string& text) {
  std::size_t w = 0;
  bool in_run = false;
  for (std::size_t r = 0; r < text.size(); ++r) {
    const char32_t c = text[r];
    if (utf8::is_horizontal_space(c)) {
      if (!in_run) text[w++] = U' ';
      in_run = true;
    } else {
      text[w++] = c;
      in_run = false;
    }
  }
  text.resize(w);
}

// True if `target` placed at some offset against `source` agrees on every
// overlapping position, i.e. emitting target next to or inside existing text
// could complete a fresh occurrence of source.
bool may_form(std::u32string_view target, std::u32string_view source) {
  if (target.empty()) return source.size() >= 2;
  const auto t = static_cast<long>(target.size());
  const auto s = static_cast<long>(source.size());
  for (long d = -(t - 1); d <= s - 1; ++d) {
    // target[k] aligns with source[k + d]
    bool match = true;
    for (long k = std::max(0L, -d); k < t && k + d < s; ++k) {
      if (target[static_cast<std::size_t>(k)] != source[static_cast<std::size_t>(k + d)]) {
        match = false;
        break;
      }
    }
    if (match) return true;
  }
  return false;
}

std::string describe(std::u32string_view seq) {
  std::string out;
  for (char32_t c : seq) {
    if (!out.empty()) out += ' ';
    out += utf8::format_codepoint(c);
  }
  return out.empty() ? "<empty>" : out;
}

}  // namespace

void NormalizationProfile::validate() const {
  for (const auto& [src, dst] : unification) {
    if (src == dst) throw ConfigError("unification maps " + utf8::format_codepoint(src) + " to itself");
    if (unification.contains(dst))
      throw ConfigError("unification chains through " + utf8::format_codepoint(dst) + "; map sources directly to final targets");
    if (strip_control_chars.contains(dst) || diacritics.contains(dst))
      throw ConfigError("unification target " + utf8::format_codepoint(dst) + " is stripped by another rule");
  }
  std::u32string scratch;
  for (const auto& rule : replacements) {
    if (rule.source.empty()) throw ConfigError("replacement with empty source");
    for (char32_t c : rule.source) {
      if (utf8::is_horizontal_space(c))
        throw ConfigError("replacement source " + describe(rule.source) + " contains horizontal whitespace");
    }
    apply_char_steps(rule.source, *this, scratch);
    if (scratch != rule.source)
      throw ConfigError("replacement source " + describe(rule.source) + " is altered by character rules and can never match");
    apply_char_steps(rule.target, *this, scratch);
    if (scratch != rule.target)
      throw ConfigError("replacement target " + describe(rule.target) + " is altered by character rules");
  }
  for (const auto& producer : replacements) {
    for (const auto& consumer : replacements) {
      if (may_form(producer.target, consumer.source))
        throw ConfigError("replacement " + describe(producer.source) + " -> " + describe(producer.target) +
                          " can re-trigger rule for " + describe(consumer.source));
    }
  }
}

NormalizationProfile parse_profile(std::string_view text) {
  NormalizationProfile p;
  p.diacritics.clear();
  p.strip_control_chars.clear();
  enum class Section { none, options, strip, diacritics, unify, replace } section = Section::none;
  std::size_t line_no = 0;
  for (auto raw : split(text, '\n')) {
    ++line_no;
    if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);
    const auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    if (line.front() == '[') {
      if (line == "[options]") section = Section::options;
      else if (line == "[strip]") section = Section::strip;
      else if (line == "[diacritics]") section = Section::diacritics;
      else if (line == "[unify]") section = Section::unify;
      else if (line == "[replace]") section = Section::replace;
      else throw ConfigError("profile line " + std::to_string(line_no) + ": unknown section " + std::string(line));
      continue;
    }
    switch (section) {
      case Section::none:
        throw ConfigError("profile line " + std::to_string(line_no) + ": entry outside a section");
      case Section::options: {
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
          throw ConfigError("profile line " + std::to_string(line_no) + ": expected key = value");
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        if (key == "name") p.name = std::string(value);
        else if (key == "version") p.version = std::stoi(std::string(value));
        else if (key == "remove_diacritics") p.remove_diacritics = parse_bool(value, line_no);
        else if (key == "unify_characters") p.unify_characters = parse_bool(value, line_no);
        else if (key == "collapse_whitespace") p.collapse_whitespace = parse_bool(value, line_no);
        else throw ConfigError("profile line " + std::to_string(line_no) + ": unknown option " + std::string(key));
        break;
      }
      case Section::strip:
        parse_range_line(line, line_no, p.strip_control_chars);
        break;
      case Section::diacritics:
        parse_range_line(line, line_no, p.diacritics);
        break;
      case Section::unify:
      case Section::replace: {
        // Use the untrimmed line: an empty target is meaningful.
        auto body = raw;
        while (!body.empty() && body.front() == ' ') body.remove_prefix(1);
        while (!body.empty() && (body.back() == ' ' || body.back() == '\r')) body.remove_suffix(1);
        auto fields = split(body, '\t');
        if (fields.size() < 2)
          throw ConfigError("profile line " + std::to_string(line_no) + ": expected source<TAB>target");
        if (fields.size() > 2 && !trim(fields[2]).starts_with("#"))
          throw ConfigError("profile line " + std::to_string(line_no) + ": unexpected third field");
        auto src = parse_sequence(fields[0], line_no);
        auto dst = parse_sequence(fields[1], line_no);
        if (section == Section::unify) {
          if (src.size() != 1 || dst.size() != 1)
            throw ConfigError("profile line " + std::to_string(line_no) + ": [unify] maps one code point to one code point");
          if (!p.unification.emplace(src[0], dst[0]).second)
            throw ConfigError("profile line " + std::to_string(line_no) + ": " + utf8::format_codepoint(src[0]) +
                              " is unified twice");
        } else {
          p.replacements.push_back({std::move(src), std::move(dst)});
        }
        break;
      }
    }
  }
  p.validate();
  return p;
}

NormalizationProfile load_profile(const std::filesystem::path& path) {
  try {
    return parse_profile(read_file(path));
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
}

std::string format_profile(const NormalizationProfile& p) {
  std::ostringstream out;
  auto seq = [](std::u32string_view s) {
    std::string r;
    for (char32_t c : s) {
      if (!r.empty()) r += ' ';
      r += utf8::format_codepoint(c);
    }
    return r;
  };
  out << "[options]\nname = " << p.name << "\nversion = " << p.version
      << "\nremove_diacritics = " << (p.remove_diacritics ? "true" : "false")
      << "\nunify_characters = " << (p.unify_characters ? "true" : "false")
      << "\ncollapse_whitespace = " << (p.collapse_whitespace ? "true" : "false") << "\n\n[strip]\n";
  for (char32_t c : p.strip_control_chars) out << utf8::format_codepoint(c) << '\n';
  out << "\n[diacritics]\n";
  for (char32_t c : p.diacritics) out << utf8::format_codepoint(c) << '\n';
  out << "\n[unify]\n";
  for (const auto& [s, t] : p.unification) out << utf8::format_codepoint(s) << '\t' << utf8::format_codepoint(t) << '\n';
  out << "\n[replace]\n";
  for (const auto& r : p.replacements) out << seq(r.source) << '\t' << seq(r.target) << '\n';
  return out.str();
}

const NormalizationProfile& persian_default() {
  static const NormalizationProfile profile = parse_profile(embedded::kPersianProfile);
  return profile;
}

std::u32string normalize_text(std::u32string_view raw, const NormalizationProfile& profile) {
  std::u32string text;
  apply_char_steps(raw, profile, text);
  for (const auto& rule : profile.replacements) replace_all(text, rule);
  if (profile.collapse_whitespace) collapse_spaces(text);
  return text;
}

std::string normalize_text(std::string_view raw_utf8, const NormalizationProfile& profile) {
  auto decoded = utf8::decode(raw_utf8);
  if (!decoded) throw DataError("normalize_text: input is not valid UTF-8");
  return utf8::encode(normalize_text(*decoded, profile));
}

// ---------------------------------------------------------------------------
// Wikipedia sections

namespace {

std::u32string title_key(std::string_view title) {
  auto decoded = utf8::decode(title);
  if (!decoded) return {};
  auto norm = normalize_text(*decoded, persian_default());
  auto words = utf8::split_words(std::u32string_view(norm));
  std::u32string key;
  for (auto w : words) {
    if (!key.empty()) key += U' ';
    key += w;
  }
  return utf8::ascii_lower(key);
}

}  // namespace

std::optional<Heading> parse_heading(std::string_view line, const WikiSectionPolicy& policy) {
  auto decoded = utf8::decode(line);
  if (!decoded) return std::nullopt;
  std::u32string_view s(*decoded);
  while (!s.empty() && utf8::is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && utf8::is_space(s.back())) s.remove_suffix(1);
  std::size_t lead = 0;
  while (lead < s.size() && s[lead] == policy.heading_marker) ++lead;
  std::size_t trail = 0;
  while (trail < s.size() - lead && s[s.size() - 1 - trail] == policy.heading_marker) ++trail;
  if (lead < static_cast<std::size_t>(policy.min_marker_run) || lead != trail || lead * 2 >= s.size())
    return std::nullopt;
  auto inner = s.substr(lead, s.size() - 2 * lead);
  while (!inner.empty() && utf8::is_space(inner.front())) inner.remove_prefix(1);
  while (!inner.empty() && utf8::is_space(inner.back())) inner.remove_suffix(1);
  if (inner.empty()) return std::nullopt;
  return Heading{static_cast<int>(lead), utf8::encode(inner)};
}

Document strip_wiki_sections(const Document& doc, const WikiSectionPolicy& policy) {
  std::set<std::u32string> dropped;
  for (const auto& t : policy.drop_sections) dropped.insert(title_key(t));

  Document out = doc;
  std::string kept;
  kept.reserve(doc.text.size());
  json removed = json::array();
  int skipping_level = 0;  // 0 = not inside a dropped section
  std::string_view text = doc.text;
  std::size_t start = 0;
  while (start < text.size()) {
    auto nl = text.find('\n', start);
    const std::size_t end = nl == std::string_view::npos ? text.size() : nl + 1;
    const auto line_with_nl = text.substr(start, end - start);
    auto line = line_with_nl;
    if (!line.empty() && line.back() == '\n') line.remove_suffix(1);
    start = end;

    if (auto heading = parse_heading(line, policy)) {
      if (skipping_level != 0 && heading->level <= skipping_level) skipping_level = 0;
      if (skipping_level == 0 && dropped.contains(title_key(heading->title))) {
        skipping_level = heading->level;
        removed.push_back(heading->title);
      }
    }
    if (skipping_level == 0) kept.append(line_with_nl);
  }
  if (removed.empty()) return out;
  out.text = std::move(kept);
  out.meta["stripped_sections"] = std::move(removed);
  if (utf8::is_blank(utf8::decode(out.text).value_or(U""))) {
    out.text.clear();
    out.meta["emptied"] = true;
  }
  return out;
}

}  // namespace forge
