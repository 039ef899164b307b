// Copyright 2026 The Forge Authors
// SPDX-License-Identifier: Apache-2.0

#include "forge/bpe.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <mutex>
#include <queue>
#include <set>
#include <unordered_set>

#include "forge/error.hpp"
#include "forge/parallel.hpp"
#include "forge/utf8.hpp"

namespace forge {

namespace {

constexpr char32_t kMarkerCp = 0x2581;

std::string rank_key(std::string_view left, std::string_view right) {
  std::string key;
  key.reserve(left.size() + right.size() + 1);
  key.append(left);
  key.push_back('\xFF');  // never part of valid UTF-8
  key.append(right);
  return key;
}

std::unordered_map<std::string, std::uint32_t> rank_table(const std::vector<Merge>& merges) {
  std::unordered_map<std::string, std::uint32_t> ranks;
  ranks.reserve(merges.size());
  for (std::uint32_t r = 0; r < merges.size(); ++r) ranks.emplace(rank_key(merges[r].left, merges[r].right), r);
  return ranks;
}

std::vector<std::string> split_codepoints(std::string_view s) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < s.size();) {
    const auto c = static_cast<unsigned char>(s[i]);
    const std::size_t n = c < 0x80 ? 1 : c < 0xE0 ? 2 : c < 0xF0 ? 3 : 4;
    out.emplace_back(s.substr(i, n));
    i += n;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Training state.

struct Word {
  std::vector<std::uint32_t> syms;
  std::uint64_t freq = 0;
};

std::uint64_t pair_of(std::uint32_t a, std::uint32_t b) { return (std::uint64_t{a} << 32) | b; }
std::uint32_t left_of(std::uint64_t p) { return static_cast<std::uint32_t>(p >> 32); }
std::uint32_t right_of(std::uint64_t p) { return static_cast<std::uint32_t>(p); }

struct HeapEntry {
  std::uint64_t count;
  std::uint64_t pair;
};

}  // namespace

std::string byte_token_text(std::uint8_t b) {
  char buf[8];
  std::snprintf(buf, sizeof(buf), "<0x%02X>", b);
  return buf;
}

std::vector<Piece> pretokenize(std::string_view text) {
  std::vector<Piece> pieces;
  Piece cur;
  auto flush = [&] {
    if (!cur.text.empty()) pieces.push_back(std::move(cur));
    cur = Piece{};
  };
  for (std::size_t i = 0; i < text.size();) {
    const auto c = static_cast<unsigned char>(text[i]);
    const std::size_t n = c < 0x80 ? 1 : c < 0xE0 ? 2 : c < 0xF0 ? 3 : 4;
    const auto bytes = text.substr(i, n);
    i += n;
    if (bytes == " ") {
      flush();
      cur.text.assign(kWordMarker);
      continue;
    }
    char32_t cp = n == 1 ? c : c & (0xFF >> (n + 1));
    for (std::size_t k = 1; k < bytes.size(); ++k) cp = (cp << 6) | (static_cast<unsigned char>(bytes[k]) & 0x3F);
    if (cp == kMarkerCp) {
      flush();
      pieces.push_back(Piece{std::string(bytes), true});
      continue;
    }
    if (utf8::is_space(cp)) {
      flush();
      pieces.push_back(Piece{std::string(bytes), false});
      continue;
    }
    cur.text.append(bytes);
  }
  flush();
  return pieces;
}

BpeModel train_bpe(const std::vector<std::string>& corpus, const BpeTrainOptions& options) {
  // Piece frequencies, counted per block and merged in block order.
  const std::size_t block = 256;
  const std::size_t n_blocks = (corpus.size() + block - 1) / block;
  std::vector<std::unordered_map<std::string, std::uint64_t>> partial(n_blocks);
  parallel_for(
      n_blocks, options.workers,
      [&](std::size_t b) {
        const std::size_t end = std::min(corpus.size(), (b + 1) * block);
        for (std::size_t d = b * block; d < end; ++d) {
          if (!utf8::is_valid(corpus[d])) throw DataError("train_bpe: document is not valid UTF-8");
          for (auto& piece : pretokenize(corpus[d]))
            if (!piece.raw) ++partial[b][std::move(piece.text)];
        }
      },
      1);
  std::map<std::string, std::uint64_t> counts;
  for (auto& m : partial)
    for (auto& [w, c] : m) counts[w] += c;
  partial.clear();

  BpeModel model;
  std::set<char32_t> alphabet;
  for (const auto& [w, c] : counts) {
    const auto cps = utf8::decode(w);
    for (char32_t cp : *cps) alphabet.insert(cp);
  }
  model.alphabet.assign(alphabet.begin(), alphabet.end());

  std::unordered_set<std::string> seen_special;
  for (const auto& s : options.special_tokens) {
    if (s.empty() || !seen_special.insert(s).second) throw ConfigError("train_bpe: empty or repeated special token");
    model.vocab.push_back({s, TokenKind::special});
  }
  if (options.byte_fallback)
    for (int b = 0; b < 256; ++b) model.vocab.push_back({byte_token_text(static_cast<std::uint8_t>(b)), TokenKind::byte});

  std::vector<std::string> sym_text;
  std::unordered_map<std::string, std::uint32_t> sym_id;
  for (char32_t cp : model.alphabet) {
    std::string s;
    utf8::append(s, cp);
    sym_id.emplace(s, static_cast<std::uint32_t>(sym_text.size()));
    sym_text.push_back(s);
    model.vocab.push_back({std::move(s), TokenKind::normal});
  }
  if (options.vocab_size < model.vocab.size())
    throw ConfigError("train_bpe: vocab_size " + std::to_string(options.vocab_size) + " is below the initial size " +
                      std::to_string(model.vocab.size()));
  std::unordered_set<std::string> normal_tokens(sym_text.begin(), sym_text.end());

  std::vector<Word> words;
  words.reserve(counts.size());
  for (const auto& [w, c] : counts) {
    Word word{{}, c};
    for (const auto& s : split_codepoints(w)) word.syms.push_back(sym_id.at(s));
    words.push_back(std::move(word));
  }
  counts.clear();

  std::unordered_map<std::uint64_t, std::uint64_t> pair_count;
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> where;
  for (std::uint32_t w = 0; w < words.size(); ++w) {
    const auto& syms = words[w].syms;
    for (std::size_t i = 0; i + 1 < syms.size(); ++i) {
      const auto p = pair_of(syms[i], syms[i + 1]);
      pair_count[p] += words[w].freq;
      auto& list = where[p];
      if (list.empty() || list.back() != w) list.push_back(w);
    }
  }

  auto worse = [&](const HeapEntry& a, const HeapEntry& b) {
    if (a.count != b.count) return a.count < b.count;
    const auto& al = sym_text[left_of(a.pair)];
    const auto& bl = sym_text[left_of(b.pair)];
    if (al != bl) return al > bl;
    return sym_text[right_of(a.pair)] > sym_text[right_of(b.pair)];
  };
  std::priority_queue<HeapEntry, std::vector<HeapEntry>, decltype(worse)> heap(worse);
  for (const auto& [p, c] : pair_count) heap.push({c, p});

  std::vector<std::uint64_t> last_visit(words.size(), UINT64_MAX);
  std::map<std::uint64_t, std::int64_t> delta;
  for (std::uint64_t step = 0; model.vocab.size() < options.vocab_size; ++step) {
    HeapEntry top{0, 0};
    bool found = false;
    while (!heap.empty()) {
      top = heap.top();
      heap.pop();
      auto it = pair_count.find(top.pair);
      if (it != pair_count.end() && it->second == top.count) {
        found = true;
        break;
      }
    }
    if (!found || top.count < options.min_pair_count)
      throw VocabUnreachableError(options.vocab_size, model.vocab.size());

    const auto a = left_of(top.pair);
    const auto b = right_of(top.pair);
    std::string merged = sym_text[a] + sym_text[b];
    std::uint32_t c;
    if (auto it = sym_id.find(merged); it != sym_id.end()) {
      c = it->second;
    } else {
      c = static_cast<std::uint32_t>(sym_text.size());
      sym_id.emplace(merged, c);
      sym_text.push_back(merged);
    }
    model.merges.push_back({sym_text[a], sym_text[b]});
    if (normal_tokens.insert(merged).second) model.vocab.push_back({merged, TokenKind::normal});

    const auto affected = std::move(where[top.pair]);
    where.erase(top.pair);
    delta.clear();
    for (auto w : affected) {
      if (last_visit[w] == step) continue;
      last_visit[w] = step;
      auto& word = words[w];
      auto& syms = word.syms;
      const auto f = static_cast<std::int64_t>(word.freq);
      bool hit = false;
      for (std::size_t i = 0; i + 1 < syms.size(); ++i) hit |= syms[i] == a && syms[i + 1] == b;
      if (!hit) continue;
      for (std::size_t i = 0; i + 1 < syms.size(); ++i) delta[pair_of(syms[i], syms[i + 1])] -= f;
      std::vector<std::uint32_t> next;
      next.reserve(syms.size());
      for (std::size_t i = 0; i < syms.size();) {
        if (i + 1 < syms.size() && syms[i] == a && syms[i + 1] == b) {
          next.push_back(c);
          i += 2;
        } else {
          next.push_back(syms[i++]);
        }
      }
      syms = std::move(next);
      for (std::size_t i = 0; i + 1 < syms.size(); ++i) {
        const auto p = pair_of(syms[i], syms[i + 1]);
        delta[p] += f;
        auto& list = where[p];
        if (list.empty() || list.back() != w) list.push_back(w);
      }
    }
    for (const auto& [p, d] : delta) {
      if (d == 0) continue;
      auto& cnt = pair_count[p];
      cnt = static_cast<std::uint64_t>(static_cast<std::int64_t>(cnt) + d);
      if (cnt == 0) {
        pair_count.erase(p);
        where.erase(p);
      } else {
        heap.push({cnt, p});
      }
    }
    pair_count.erase(top.pair);
  }
  return model;
}

ExtendedVocab extend_vocab(const BpeModel& base, const BpeModel& trained) {
  ExtendedVocab ext;
  ext.base = base;
  std::set<std::pair<TokenKind, std::string>> base_tokens;
  for (const auto& t : base.vocab) base_tokens.emplace(t.kind, t.text);
  std::set<std::pair<TokenKind, std::string>> added;
  for (const auto& t : trained.vocab) {
    if (base_tokens.contains({t.kind, t.text})) {
      ++ext.overlap_count;
    } else if (added.emplace(t.kind, t.text).second) {
      ext.new_tokens.push_back(t);
    }
  }
  ext.net_new_count = trained.vocab.size() - ext.overlap_count;
  // Byte fallback keeps encoding total even when the base has no byte tokens.
  for (int b = 0; b < 256; ++b) {
    Token t{byte_token_text(static_cast<std::uint8_t>(b)), TokenKind::byte};
    if (!base_tokens.contains({t.kind, t.text}) && added.emplace(t.kind, t.text).second) {
      ext.new_tokens.push_back(std::move(t));
      ++ext.fallback_tokens_added;
    }
  }
  std::unordered_set<std::string> base_merges;
  for (const auto& m : base.merges) base_merges.insert(rank_key(m.left, m.right));
  std::unordered_set<std::string> new_merges;
  for (const auto& m : trained.merges) {
    const auto key = rank_key(m.left, m.right);
    if (!base_merges.contains(key) && new_merges.insert(key).second) ext.new_merges.push_back(m);
  }
  return ext;
}

// ---------------------------------------------------------------------------
// Tokenizer

struct Tokenizer::Cache {
  static constexpr std::size_t kShards = 16;
  static constexpr std::size_t kMaxPerShard = 1 << 16;
  struct Shard {
    std::mutex mu;
    std::unordered_map<std::string, std::vector<std::uint32_t>> map;
  };
  std::array<Shard, kShards> shards;
};

Tokenizer::Tokenizer(const BpeModel& model) : vocab_(model.vocab) {
  phases_.push_back(rank_table(model.merges));
  index();
}

Tokenizer::Tokenizer(const ExtendedVocab& ext) : vocab_(ext.base.vocab) {
  vocab_.insert(vocab_.end(), ext.new_tokens.begin(), ext.new_tokens.end());
  phases_.push_back(rank_table(ext.base.merges));
  phases_.push_back(rank_table(ext.new_merges));
  index();
}

void Tokenizer::index() {
  std::array<bool, 256> have{};
  for (std::uint32_t id = 0; id < vocab_.size(); ++id) {
    const auto& t = vocab_[id];
    switch (t.kind) {
      case TokenKind::normal:
        normal_ids_.emplace(t.text, id);
        break;
      case TokenKind::special:
        special_ids_.emplace(t.text, id);
        break;
      case TokenKind::byte: {
        unsigned v = 0;
        if (t.text.size() != 6 || std::sscanf(t.text.c_str(), "<0x%2X>", &v) != 1 || v > 255)
          throw DataError("malformed byte token '" + t.text + "'");
        if (!have[v]) byte_ids_[v] = id;
        have[v] = true;
        break;
      }
    }
  }
  has_bytes_ = std::all_of(have.begin(), have.end(), [](bool b) { return b; });
  cache_ = std::make_shared<Cache>();
}

std::optional<std::uint32_t> Tokenizer::id_of(std::string_view text, TokenKind kind) const {
  const auto& table = kind == TokenKind::special ? special_ids_ : normal_ids_;
  if (kind == TokenKind::byte) {
    for (std::uint32_t b = 0; b < 256; ++b)
      if (has_bytes_ && byte_token_text(static_cast<std::uint8_t>(b)) == text) return byte_ids_[b];
    return std::nullopt;
  }
  auto it = table.find(std::string(text));
  if (it == table.end()) return std::nullopt;
  return it->second;
}

void Tokenizer::encode_piece(const Piece& piece, std::vector<std::uint32_t>& out) const {
  auto emit_bytes = [&](std::string_view s) {
    if (!has_bytes_) throw DataError("tokenizer has no byte fallback for an unknown symbol");
    for (unsigned char ch : s) out.push_back(byte_ids_[ch]);
  };
  if (piece.raw) {
    emit_bytes(piece.text);
    return;
  }

  auto& shard = cache_->shards[std::hash<std::string>{}(piece.text) % Cache::kShards];
  {
    std::lock_guard lock(shard.mu);
    if (auto it = shard.map.find(piece.text); it != shard.map.end()) {
      out.insert(out.end(), it->second.begin(), it->second.end());
      return;
    }
  }

  auto syms = split_codepoints(piece.text);
  std::string key;
  for (const auto& ranks : phases_) {
    if (ranks.empty()) continue;
    while (syms.size() > 1) {
      std::uint32_t best = UINT32_MAX;
      std::size_t at = 0;
      for (std::size_t i = 0; i + 1 < syms.size(); ++i) {
        key.assign(syms[i]);
        key.push_back('\xFF');
        key.append(syms[i + 1]);
        if (auto it = ranks.find(key); it != ranks.end() && it->second < best) {
          best = it->second;
          at = i;
        }
      }
      if (best == UINT32_MAX) break;
      const std::string left = syms[at];
      const std::string right = syms[at + 1];
      std::vector<std::string> next;
      next.reserve(syms.size());
      for (std::size_t i = 0; i < syms.size();) {
        if (i + 1 < syms.size() && syms[i] == left && syms[i + 1] == right) {
          next.push_back(left + right);
          i += 2;
        } else {
          next.push_back(std::move(syms[i++]));
        }
      }
      syms = std::move(next);
    }
  }

  std::vector<std::uint32_t> ids;
  for (std::string_view s : syms) {
    if (auto it = normal_ids_.find(std::string(s)); it != normal_ids_.end()) {
      ids.push_back(it->second);
      continue;
    }
    if (!has_bytes_) throw DataError("tokenizer has no byte fallback for an unknown symbol");
    // a word marker stands for a space; its own bytes would decode to U+2581
    if (s.starts_with(kWordMarker)) {
      ids.push_back(byte_ids_[' ']);
      s.remove_prefix(kWordMarker.size());
    }
    for (unsigned char ch : s) ids.push_back(byte_ids_[ch]);
  }
  out.insert(out.end(), ids.begin(), ids.end());
  std::lock_guard lock(shard.mu);
  if (shard.map.size() < Cache::kMaxPerShard) shard.map.emplace(piece.text, std::move(ids));
}

std::vector<std::uint32_t> Tokenizer::encode(std::string_view text) const {
  if (!utf8::is_valid(text)) throw DataError("encode: text is not valid UTF-8");
  std::vector<std::uint32_t> ids;
  ids.reserve(text.size() / 2);
  for (const auto& piece : pretokenize(text)) encode_piece(piece, ids);
  return ids;
}

std::string Tokenizer::decode(const std::vector<std::uint32_t>& ids) const {
  std::string out;
  for (auto id : ids) {
    if (id >= vocab_.size()) throw DataError("decode: token id " + std::to_string(id) + " out of range");
    const auto& t = vocab_[id];
    switch (t.kind) {
      case TokenKind::normal:
        for (std::size_t i = 0; i < t.text.size();) {
          if (t.text.compare(i, kWordMarker.size(), kWordMarker) == 0) {
            out.push_back(' ');
            i += kWordMarker.size();
          } else {
            out.push_back(t.text[i++]);
          }
        }
        break;
      case TokenKind::byte: {
        unsigned v = 0;
        std::sscanf(t.text.c_str(), "<0x%2X>", &v);
        out.push_back(static_cast<char>(v));
        break;
      }
      case TokenKind::special:
        out += t.text;
        break;
    }
  }
  return out;
}

std::vector<std::uint32_t> encode(std::string_view text, const ExtendedVocab& ext) {
  return Tokenizer(ext).encode(text);
}

Fertility fertility(const std::vector<std::string>& texts, const ExtendedVocab& ext, unsigned workers) {
  const Tokenizer base(ext.base);
  const Tokenizer extended(ext);
  std::vector<std::array<std::size_t, 3>> per(texts.size());
  parallel_for(
      texts.size(), workers,
      [&](std::size_t i) {
        per[i] = {utf8::split_words(std::string_view(texts[i])).size(), base.encode(texts[i]).size(),
                  extended.encode(texts[i]).size()};
      },
      8);
  Fertility f;
  for (const auto& [w, b, e] : per) {
    f.words += w;
    f.base_tokens += b;
    f.extended_tokens += e;
  }
  if (f.words == 0) throw DataError("fertility: input holds no words");
  f.tokens_per_word_base = static_cast<double>(f.base_tokens) / static_cast<double>(f.words);
  f.tokens_per_word_extended = static_cast<double>(f.extended_tokens) / static_cast<double>(f.words);
  f.reduction = 1.0 - f.tokens_per_word_extended / f.tokens_per_word_base;
  return f;
}

}  // namespace forge
