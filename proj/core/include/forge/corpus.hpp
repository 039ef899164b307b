// Copyright 2026 The Forge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "forge/bpe.hpp"
#include "forge/document.hpp"

namespace forge {

// ---------------------------------------------------------------------------
// Chunking

struct TokenChunk {
  std::vector<std::uint32_t> token_ids;
  std::string source;
  std::uint64_t chunk_index = 0;
};

struct ChunkStats {
  std::uint64_t documents = 0;        // non-empty documents packed
  std::uint64_t empty_documents = 0;  // skipped, no separator emitted
  std::uint64_t stream_tokens = 0;    // including separators
  std::uint64_t chunks = 0;
  std::uint64_t dropped_tokens = 0;   // final partial window
};

// Packs documents into one stream, a separator between consecutive non-empty
// documents, and emits exact chunk_len windows. finish() drops and reports
// the partial tail.
class ChunkPacker {
 public:
  using Sink = std::function<void(TokenChunk&&)>;
  ChunkPacker(std::string source, std::size_t chunk_len, std::uint32_t separator_id, Sink sink);

  void add(std::span<const std::uint32_t> doc);
  ChunkStats finish();

 private:
  std::string source_;
  std::size_t chunk_len_;
  std::uint32_t separator_;
  Sink sink_;
  std::vector<std::uint32_t> buf_;
  ChunkStats stats_;
  bool finished_ = false;
};

std::pair<std::vector<TokenChunk>, ChunkStats> chunk_stream(const std::vector<std::vector<std::uint32_t>>& docs,
                                                            std::size_t chunk_len, std::uint32_t separator_id,
                                                            const std::string& source = "custom");

// Chunk payload files hold chunk_len little-endian u32 ids per record.
struct ChunkRecord {
  std::string source;
  std::string file;
  std::uint64_t offset = 0;  // bytes
  std::uint64_t chunk_index = 0;
};
json to_json(const ChunkRecord& r);
ChunkRecord chunk_record_from_json(const json& j);

std::vector<std::uint32_t> read_chunk(const std::filesystem::path& file, std::uint64_t offset, std::size_t chunk_len);

// ---------------------------------------------------------------------------
// Mixing. Manifests are held as compact references into string tables.

struct ChunkRef {
  std::uint32_t source = 0;
  std::uint32_t file = 0;
  std::uint64_t offset = 0;
  std::uint64_t chunk_index = 0;
};

struct ChunkManifest {
  std::vector<std::string> sources;
  std::vector<std::string> files;
  std::vector<ChunkRef> chunks;

  std::uint32_t intern_source(const std::string& s);
  std::uint32_t intern_file(const std::string& f);
  void add(const ChunkRecord& r);
  ChunkRecord record(const ChunkRef& ref) const;
  // Appends `count` chunks of one source with consecutive indices.
  void add_synthetic(const std::string& source, std::uint64_t count);
};

ChunkManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const ChunkManifest& m);

struct MixSource {
  std::string tag;
  std::uint64_t repeat_factor = 1;
  std::optional<std::uint64_t> cap;  // chunks kept before repetition
};

struct MixSpec {
  std::vector<MixSource> sources;
  std::uint64_t shuffle_seed = 0;
  std::size_t chunk_len = 2048;

  void validate() const;
};

MixSpec mix_spec_from_json(const json& j);

struct MixSourceReport {
  std::string tag;
  std::uint64_t available = 0;
  std::uint64_t selected = 0;  // after cap
  std::uint64_t repeat_factor = 1;
  std::uint64_t chunks = 0;    // after repetition
  std::uint64_t tokens = 0;
};

struct MixReport {
  std::vector<MixSourceReport> sources;
  std::uint64_t total_chunks = 0;
  std::uint64_t total_tokens = 0;
  json to_json() const;
};

// Caps each source by a seeded sample, repeats it, then shuffles the union.
// Sources in the manifest but absent from the spec are excluded. Throws
// ConfigError when a cap exceeds availability.
std::pair<ChunkManifest, MixReport> mix_datasets(const ChunkManifest& input, const MixSpec& spec);

// ---------------------------------------------------------------------------
// Warm-up documents

struct ParallelDoc {
  std::string story_id;
  std::vector<std::pair<std::string, std::string>> pairs;  // (english, persian)
  bool operator==(const ParallelDoc&) const = default;
};

enum class WarmupDirection { fa_first, en_first };

ParallelDoc parallel_doc_from_json(const json& j);
std::string format_warmup(const ParallelDoc& doc, WarmupDirection direction);
// Inverse of format_warmup; the story id is not part of the text.
std::pair<ParallelDoc, WarmupDirection> parse_warmup(std::string_view text);

// ---------------------------------------------------------------------------
// SFT samples

enum class Role { system, user, assistant };
std::string_view to_string(Role r);
Role role_from_string(std::string_view s);

struct Turn {
  Role role;
  std::string text;
};
using Conversation = std::vector<Turn>;

struct ChatTemplate {
  std::string system = "<|system|>\n";
  std::string user = "<|user|>\n";
  std::string assistant = "<|assistant|>\n";
  std::string end = "<|end|>";
  std::string separator = "\n";

  const std::string& marker(Role r) const;
  static ChatTemplate from_json(const json& j);
};

struct RoleSpan {
  Role role;
  std::size_t begin = 0;  // token positions, end exclusive
  std::size_t end = 0;
};

struct SftSample {
  std::vector<std::uint32_t> token_ids;
  std::vector<std::uint8_t> loss_mask;
  std::vector<RoleSpan> spans;
  std::size_t truncated_tokens = 0;
  json to_json() const;
};

// Renders each turn as marker, text, end marker and (except after the last
// turn) the separator. The mask covers assistant text and its end marker.
// Over max_len, the oldest tokens are dropped first; the final assistant
// turn is kept whole when it fits and otherwise loses the tail of its text.
// Throws UntrainableSampleError when no assistant text survives.
SftSample format_sft(const Conversation& conversation, const ChatTemplate& tmpl, const Tokenizer& tok,
                     std::size_t max_len = 512);

// Accepted record shapes: {instruction, input?, output}, {inputs, targets},
// {en, fa} (rendered as a translation request) and {messages: [{role, content}]}.
Conversation conversation_from_record(const json& record);

struct SftSource {
  std::string tag;
  std::vector<json> records;
  std::uint64_t cap = 0;
};

struct SftManifestEntry {
  std::string source;
  std::uint64_t index = 0;  // record position within its source
  Conversation conversation;
};

struct SftMix {
  std::vector<SftManifestEntry> entries;
  std::vector<std::pair<std::string, std::uint64_t>> counts;
};

SftMix build_sft_mix(const std::vector<SftSource>& sources, std::uint64_t seed);

// Indices of a seeded sample of `k` out of `n`, ascending.
std::vector<std::uint64_t> seeded_sample(std::uint64_t n, std::uint64_t k, std::uint64_t seed);

}  // namespace forge
