// Copyright 2026 The Forge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace forge {

// U+2581, prefixed to a piece that followed a space.
inline constexpr std::string_view kWordMarker = "\xE2\x96\x81";

enum class TokenKind : char { normal = 'n', byte = 'b', special = 's' };

struct Token {
  std::string text;  // for byte tokens "<0xNN>"
  TokenKind kind = TokenKind::normal;
  bool operator==(const Token&) const = default;
};

struct Merge {
  std::string left;
  std::string right;
  bool operator==(const Merge&) const = default;
};

std::string byte_token_text(std::uint8_t b);

// Splits text into encoding pieces. Every ' ' starts a piece and becomes the
// marker; any other whitespace codepoint is a piece of its own; a literal
// marker codepoint is also isolated and flagged raw (always byte-encoded).
struct Piece {
  std::string text;
  bool raw = false;
};
std::vector<Piece> pretokenize(std::string_view text);

struct BpeModel {
  std::vector<char32_t> alphabet;  // sorted
  std::vector<Merge> merges;       // acquisition order
  std::vector<Token> vocab;        // index is the id

  std::size_t size() const { return vocab.size(); }
};

struct BpeTrainOptions {
  std::size_t vocab_size = 5000;
  bool byte_fallback = false;  // reserve the 256 byte tokens
  std::vector<std::string> special_tokens;
  std::uint64_t min_pair_count = 2;
  unsigned workers = 1;
};

// Greedy most-frequent-pair merging over whitespace-delimited pieces; ties go
// to the lexicographically smallest (left, right). vocab_size counts special,
// byte, alphabet and merged tokens. Throws ConfigError if vocab_size is below
// the initial size, VocabUnreachableError if pairs run out first.
BpeModel train_bpe(const std::vector<std::string>& corpus, const BpeTrainOptions& options);

struct ExtendedVocab {
  BpeModel base;                  // frozen, ids [0, base.size())
  std::vector<Token> new_tokens;  // ids from base.size()
  std::vector<Merge> new_merges;  // applied after every base merge
  std::size_t net_new_count = 0;  // |trained vocab| - |overlap|
  std::size_t overlap_count = 0;
  std::size_t fallback_tokens_added = 0;  // byte tokens the base lacked

  std::size_t size() const { return base.size() + new_tokens.size(); }
};

ExtendedVocab extend_vocab(const BpeModel& base, const BpeModel& trained);

// Immutable encoder/decoder over a base model or an extended vocabulary.
// Merge phases are applied in order, each by merge rank; symbols left outside
// the vocabulary fall back to byte tokens.
class Tokenizer {
 public:
  explicit Tokenizer(const BpeModel& model);
  explicit Tokenizer(const ExtendedVocab& ext);

  std::vector<std::uint32_t> encode(std::string_view text) const;
  std::string decode(const std::vector<std::uint32_t>& ids) const;

  std::size_t vocab_size() const { return vocab_.size(); }
  const Token& token(std::uint32_t id) const { return vocab_.at(id); }
  std::optional<std::uint32_t> id_of(std::string_view text, TokenKind kind = TokenKind::normal) const;
  bool has_byte_fallback() const { return has_bytes_; }

  // Encodes one pre-tokenized piece; results are memoized per Tokenizer.
  void encode_piece(const Piece& piece, std::vector<std::uint32_t>& out) const;

 private:
  void index();

  std::vector<Token> vocab_;
  std::vector<std::unordered_map<std::string, std::uint32_t>> phases_;
  std::unordered_map<std::string, std::uint32_t> normal_ids_;
  std::unordered_map<std::string, std::uint32_t> special_ids_;
  std::array<std::uint32_t, 256> byte_ids_{};
  bool has_bytes_ = false;

  struct Cache;
  std::shared_ptr<Cache> cache_;
};

std::vector<std::uint32_t> encode(std::string_view text, const ExtendedVocab& ext);

struct Fertility {
  std::size_t words = 0;
  std::size_t base_tokens = 0;
  std::size_t extended_tokens = 0;
  double tokens_per_word_base = 0.0;
  double tokens_per_word_extended = 0.0;
  double reduction = 0.0;  // 1 - extended / base
};

// Throws DataError when the stream holds no words.
Fertility fertility(const std::vector<std::string>& texts, const ExtendedVocab& ext, unsigned workers = 1);

// Versioned text model files. An extended vocabulary is stored with its merge
// phase per line and can be reopened as either a Tokenizer or ExtendedVocab.
void write_model(std::ostream& out, const BpeModel& model);
void write_extended(std::ostream& out, const ExtendedVocab& ext);
void save_model(const std::filesystem::path& path, const BpeModel& model);
void save_extended(const std::filesystem::path& path, const ExtendedVocab& ext);

struct TokenizerFile {
  bool extended = false;
  BpeModel model;     // when !extended
  ExtendedVocab ext;  // when extended
};
TokenizerFile read_tokenizer_file(std::istream& in);
TokenizerFile load_tokenizer_file(const std::filesystem::path& path);
BpeModel load_model(const std::filesystem::path& path);
ExtendedVocab load_extended(const std::filesystem::path& path);
Tokenizer load_tokenizer(const std::filesystem::path& path);

}  // namespace forge
