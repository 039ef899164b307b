// Copyright 2026 The Forge Authors
// SPDX-License-Identifier: Apache-2.0

#include <fstream>
#include <map>
#include <istream>
#include <ostream>
#include <string>

#include "forge/bpe.hpp"
#include "forge/error.hpp"
#include "forge/utf8.hpp"

namespace forge {

namespace {

constexpr std::string_view kHeader = "forge-bpe 1";

std::string escape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char ch : s) {
    const auto c = static_cast<unsigned char>(ch);
    switch (ch) {
      case '\\': out += "\\\\"; break;
      case '\t': out += "\\t"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      default:
        if (c < 0x20 || c == 0x7F) {
          static constexpr char kHex[] = "0123456789ABCDEF";
          out += "\\x";
          out.push_back(kHex[c >> 4]);
          out.push_back(kHex[c & 15]);
        } else {
          out.push_back(ch);
        }
    }
  }
  return out;
}

std::string unescape(std::string_view s, std::size_t line) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '\\') {
      out.push_back(s[i]);
      continue;
    }
    if (++i >= s.size()) throw DataError("tokenizer file line " + std::to_string(line) + ": dangling escape");
    switch (s[i]) {
      case '\\': out.push_back('\\'); break;
      case 't': out.push_back('\t'); break;
      case 'n': out.push_back('\n'); break;
      case 'r': out.push_back('\r'); break;
      case 'x':
        if (i + 2 >= s.size())
          throw DataError("tokenizer file line " + std::to_string(line) + ": short \\x escape");
        out.push_back(static_cast<char>(std::stoi(std::string(s.substr(i + 1, 2)), nullptr, 16)));
        i += 2;
        break;
      default:
        throw DataError("tokenizer file line " + std::to_string(line) + ": unknown escape");
    }
  }
  return out;
}

std::vector<std::string_view> split_tabs(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto tab = s.find('\t', start);
    out.push_back(s.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return out;
}

void write_common(std::ostream& out, const std::vector<char32_t>& alphabet,
                  const std::vector<std::pair<int, const Merge*>>& merges, const std::vector<const Token*>& vocab) {
  out << "[alphabet]\n";
  for (char32_t cp : alphabet) out << utf8::format_codepoint(cp) << '\n';
  out << "[merges]\n";
  for (const auto& [phase, m] : merges) out << phase << '\t' << escape(m->left) << '\t' << escape(m->right) << '\n';
  out << "[vocab]\n";
  for (std::size_t id = 0; id < vocab.size(); ++id)
    out << id << '\t' << static_cast<char>(vocab[id]->kind) << '\t' << escape(vocab[id]->text) << '\n';
  if (!out) throw DataError("tokenizer file: write failed");
}

std::size_t to_count(std::string_view s, std::size_t line) {
  try {
    std::size_t used = 0;
    const auto v = std::stoull(std::string(s), &used);
    if (used != s.size()) throw std::invalid_argument("trailing");
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw DataError("tokenizer file line " + std::to_string(line) + ": expected a number");
  }
}

}  // namespace

void write_model(std::ostream& out, const BpeModel& model) {
  out << kHeader << "\n[meta]\ntype\tmodel\n";
  std::vector<std::pair<int, const Merge*>> merges;
  for (const auto& m : model.merges) merges.emplace_back(0, &m);
  std::vector<const Token*> vocab;
  for (const auto& t : model.vocab) vocab.push_back(&t);
  write_common(out, model.alphabet, merges, vocab);
}

void write_extended(std::ostream& out, const ExtendedVocab& ext) {
  out << kHeader << "\n[meta]\ntype\textended\n"
      << "base_size\t" << ext.base.size() << '\n'
      << "net_new\t" << ext.net_new_count << '\n'
      << "overlap\t" << ext.overlap_count << '\n'
      << "fallback_added\t" << ext.fallback_tokens_added << '\n';
  std::vector<std::pair<int, const Merge*>> merges;
  for (const auto& m : ext.base.merges) merges.emplace_back(0, &m);
  for (const auto& m : ext.new_merges) merges.emplace_back(1, &m);
  std::vector<const Token*> vocab;
  for (const auto& t : ext.base.vocab) vocab.push_back(&t);
  for (const auto& t : ext.new_tokens) vocab.push_back(&t);
  write_common(out, ext.base.alphabet, merges, vocab);
}

void save_model(const std::filesystem::path& path, const BpeModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  write_model(out, model);
}

void save_extended(const std::filesystem::path& path, const ExtendedVocab& ext) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  write_extended(out, ext);
}

TokenizerFile read_tokenizer_file(std::istream& in) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line) || line != kHeader) throw DataError("not a forge tokenizer file");
  std::string section;
  std::map<std::string, std::string> meta;
  std::vector<char32_t> alphabet;
  std::vector<std::pair<int, Merge>> merges;
  std::vector<Token> vocab;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line.front() == '[') {
      section = line;
      continue;
    }
    const auto fields = split_tabs(line);
    auto bad = [&] { return DataError("tokenizer file line " + std::to_string(line_no) + ": malformed entry"); };
    if (section == "[meta]") {
      if (fields.size() != 2) throw bad();
      meta[std::string(fields[0])] = std::string(fields[1]);
    } else if (section == "[alphabet]") {
      auto cp = utf8::parse_codepoint(line);
      if (!cp) throw bad();
      alphabet.push_back(*cp);
    } else if (section == "[merges]") {
      if (fields.size() != 3 || (fields[0] != "0" && fields[0] != "1")) throw bad();
      merges.emplace_back(fields[0] == "1", Merge{unescape(fields[1], line_no), unescape(fields[2], line_no)});
    } else if (section == "[vocab]") {
      if (fields.size() != 3 || fields[1].size() != 1) throw bad();
      if (to_count(fields[0], line_no) != vocab.size()) throw DataError("tokenizer file: vocab ids are not contiguous");
      const char k = fields[1][0];
      if (k != 'n' && k != 'b' && k != 's') throw bad();
      vocab.push_back({unescape(fields[2], line_no), static_cast<TokenKind>(k)});
    } else {
      throw DataError("tokenizer file line " + std::to_string(line_no) + ": entry outside a known section");
    }
  }

  TokenizerFile file;
  const auto type = meta["type"];
  if (type == "model") {
    file.model.alphabet = std::move(alphabet);
    for (auto& [phase, m] : merges) {
      if (phase != 0) throw DataError("tokenizer file: model has a second merge phase");
      file.model.merges.push_back(std::move(m));
    }
    file.model.vocab = std::move(vocab);
  } else if (type == "extended") {
    file.extended = true;
    auto& ext = file.ext;
    const auto base_size = to_count(meta["base_size"], 0);
    if (base_size > vocab.size()) throw DataError("tokenizer file: base_size exceeds vocab size");
    ext.net_new_count = to_count(meta["net_new"], 0);
    ext.overlap_count = to_count(meta["overlap"], 0);
    ext.fallback_tokens_added = to_count(meta["fallback_added"], 0);
    ext.base.alphabet = std::move(alphabet);
    ext.base.vocab.assign(vocab.begin(), vocab.begin() + static_cast<std::ptrdiff_t>(base_size));
    ext.new_tokens.assign(vocab.begin() + static_cast<std::ptrdiff_t>(base_size), vocab.end());
    for (auto& [phase, m] : merges) (phase == 0 ? ext.base.merges : ext.new_merges).push_back(std::move(m));
  } else {
    throw DataError("tokenizer file: unknown type '" + type + "'");
  }
  return file;
}

TokenizerFile load_tokenizer_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return read_tokenizer_file(in);
}

BpeModel load_model(const std::filesystem::path& path) {
  auto f = load_tokenizer_file(path);
  if (f.extended) throw ConfigError(path.string() + " holds an extended vocabulary, not a base model");
  return std::move(f.model);
}

ExtendedVocab load_extended(const std::filesystem::path& path) {
  auto f = load_tokenizer_file(path);
  if (!f.extended) throw ConfigError(path.string() + " holds a base model, not an extended vocabulary");
  return std::move(f.ext);
}

Tokenizer load_tokenizer(const std::filesystem::path& path) {
  auto f = load_tokenizer_file(path);
  return f.extended ? Tokenizer(f.ext) : Tokenizer(f.model);
}

}  // namespace forge
