// Copyright 2026 The Forge Authors
// SPDX-License-Identifier: Apache-2.0

#include "forge/corpus.hpp"

#include <algorithm>
#include <bit>
#include <fstream>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include "forge/error.hpp"
#include "forge/hash.hpp"
#include "forge/random.hpp"

namespace forge {

// Chunk payloads are written and read as native u32 arrays.
static_assert(std::endian::native == std::endian::little, "chunk payloads assume a little-endian host");

// ---------------------------------------------------------------------------
// Chunking

ChunkPacker::ChunkPacker(std::string source, std::size_t chunk_len, std::uint32_t separator_id, Sink sink)
    : source_(std::move(source)), chunk_len_(chunk_len), separator_(separator_id), sink_(std::move(sink)) {
  if (chunk_len_ <= 1) throw ConfigError("chunk_len must be greater than 1");
  buf_.reserve(chunk_len_);
}

void ChunkPacker::add(std::span<const std::uint32_t> doc) {
  if (finished_) throw std::logic_error("ChunkPacker::add after finish");
  if (doc.empty()) {
    ++stats_.empty_documents;
    return;
  }
  auto push = [&](std::uint32_t id) {
    buf_.push_back(id);
    ++stats_.stream_tokens;
    if (buf_.size() == chunk_len_) {
      sink_(TokenChunk{std::move(buf_), source_, stats_.chunks++});
      buf_.clear();
      buf_.reserve(chunk_len_);
    }
  };
  if (stats_.documents > 0) push(separator_);
  ++stats_.documents;
  for (auto id : doc) push(id);
}

ChunkStats ChunkPacker::finish() {
  if (!finished_) {
    stats_.dropped_tokens = buf_.size();
    buf_.clear();
    finished_ = true;
  }
  return stats_;
}

std::pair<std::vector<TokenChunk>, ChunkStats> chunk_stream(const std::vector<std::vector<std::uint32_t>>& docs,
                                                            std::size_t chunk_len, std::uint32_t separator_id,
                                                            const std::string& source) {
  std::vector<TokenChunk> chunks;
  ChunkPacker packer(source, chunk_len, separator_id, [&](TokenChunk&& c) { chunks.push_back(std::move(c)); });
  for (const auto& d : docs) packer.add(d);
  auto stats = packer.finish();
  return {std::move(chunks), stats};
}

json to_json(const ChunkRecord& r) {
  return json{{"source", r.source}, {"file", r.file}, {"offset", r.offset}, {"chunk_index", r.chunk_index}};
}

ChunkRecord chunk_record_from_json(const json& j) {
  try {
    return ChunkRecord{j.at("source").get<std::string>(), j.at("file").get<std::string>(),
                       j.at("offset").get<std::uint64_t>(), j.at("chunk_index").get<std::uint64_t>()};
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed chunk manifest record: ") + e.what());
  }
}

std::vector<std::uint32_t> read_chunk(const std::filesystem::path& file, std::uint64_t offset, std::size_t chunk_len) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw DataError("cannot open " + file.string());
  in.seekg(static_cast<std::streamoff>(offset));
  std::vector<std::uint32_t> ids(chunk_len);
  if (!in.read(reinterpret_cast<char*>(ids.data()), static_cast<std::streamsize>(chunk_len * sizeof(std::uint32_t))))
    throw DataError("truncated chunk file " + file.string());
  return ids;
}

// ---------------------------------------------------------------------------
// Manifests and mixing

namespace {

std::uint32_t intern(std::vector<std::string>& table, const std::string& s) {
  // Tables stay small (a handful of sources and files), so a scan is fine.
  for (std::uint32_t i = 0; i < table.size(); ++i)
    if (table[i] == s) return i;
  table.push_back(s);
  return static_cast<std::uint32_t>(table.size() - 1);
}

std::uint64_t source_seed(std::uint64_t seed, std::string_view tag) { return xxh64(tag, seed); }

}  // namespace

std::uint32_t ChunkManifest::intern_source(const std::string& s) { return intern(sources, s); }
std::uint32_t ChunkManifest::intern_file(const std::string& f) { return intern(files, f); }

void ChunkManifest::add(const ChunkRecord& r) {
  chunks.push_back({intern_source(r.source), intern_file(r.file), r.offset, r.chunk_index});
}

ChunkRecord ChunkManifest::record(const ChunkRef& ref) const {
  return {sources.at(ref.source), files.at(ref.file), ref.offset, ref.chunk_index};
}

void ChunkManifest::add_synthetic(const std::string& source, std::uint64_t count) {
  const auto s = intern_source(source);
  const auto f = intern_file(source + ".bin");
  chunks.reserve(chunks.size() + count);
  for (std::uint64_t i = 0; i < count; ++i) chunks.push_back({s, f, 0, i});
}

ChunkManifest read_manifest(const std::filesystem::path& path) {
  ChunkManifest m;
  JsonlReader reader(path);
  while (auto line = reader.next_line()) {
    json j;
    try {
      j = json::parse(*line);
    } catch (const json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(reader.line_number()) + ": " + e.what());
    }
    m.add(chunk_record_from_json(j));
  }
  return m;
}

void write_manifest(const std::filesystem::path& path, const ChunkManifest& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& ref : m.chunks) out << to_json(m.record(ref)).dump() << '\n';
  if (!out) throw DataError("write failed: " + path.string());
}

void MixSpec::validate() const {
  if (sources.empty()) throw ConfigError("mix: no sources");
  if (chunk_len <= 1) throw ConfigError("mix: chunk_len must be greater than 1");
  std::unordered_set<std::string> seen;
  for (const auto& s : sources) {
    if (!seen.insert(s.tag).second) throw ConfigError("mix: source '" + s.tag + "' listed twice");
    if (s.repeat_factor < 1) throw ConfigError("mix: repeat_factor of '" + s.tag + "' must be >= 1");
  }
}

MixSpec mix_spec_from_json(const json& j) {
  MixSpec spec;
  try {
    spec.shuffle_seed = j.value("shuffle_seed", std::uint64_t{0});
    spec.chunk_len = j.value("chunk_len", std::size_t{2048});
    for (const auto& s : j.at("sources")) {
      MixSource src;
      src.tag = s.at("tag").get<std::string>();
      src.repeat_factor = s.value("repeat_factor", std::uint64_t{1});
      if (s.contains("cap") && !s["cap"].is_null()) src.cap = s["cap"].get<std::uint64_t>();
      spec.sources.push_back(std::move(src));
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("mix spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

json MixReport::to_json() const {
  json out{{"total_chunks", total_chunks}, {"total_tokens", total_tokens}, {"sources", json::array()}};
  for (const auto& s : sources) {
    out["sources"].push_back({{"tag", s.tag},
                              {"available", s.available},
                              {"selected", s.selected},
                              {"repeat_factor", s.repeat_factor},
                              {"chunks", s.chunks},
                              {"tokens", s.tokens}});
  }
  return out;
}

std::vector<std::uint64_t> seeded_sample(std::uint64_t n, std::uint64_t k, std::uint64_t seed) {
  if (k > n) throw ConfigError("sample of " + std::to_string(k) + " from " + std::to_string(n));
  std::vector<std::uint64_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  for (std::uint64_t i = 0; i < k; ++i) {
    const auto j = i + bounded(rng, n - i);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::pair<ChunkManifest, MixReport> mix_datasets(const ChunkManifest& input, const MixSpec& spec) {
  spec.validate();
  std::vector<std::vector<std::size_t>> by_source(input.sources.size());
  for (std::size_t i = 0; i < input.chunks.size(); ++i) by_source[input.chunks[i].source].push_back(i);

  ChunkManifest out;
  out.sources = input.sources;
  out.files = input.files;
  MixReport report;
  for (const auto& src : spec.sources) {
    auto it = std::find(input.sources.begin(), input.sources.end(), src.tag);
    std::vector<std::size_t> none;
    auto& members = it == input.sources.end() ? none : by_source[static_cast<std::size_t>(it - input.sources.begin())];
    // Deterministic regardless of manifest order.
    std::sort(members.begin(), members.end(), [&](auto a, auto b) {
      const auto& x = input.chunks[a];
      const auto& y = input.chunks[b];
      return std::tie(x.chunk_index, x.file, x.offset) < std::tie(y.chunk_index, y.file, y.offset);
    });
    MixSourceReport r{src.tag, members.size(), members.size(), src.repeat_factor};
    std::vector<std::size_t> chosen;
    if (src.cap) {
      if (*src.cap > members.size())
        throw ConfigError("mix: cap " + std::to_string(*src.cap) + " for source '" + src.tag + "' exceeds the " +
                          std::to_string(members.size()) + " available chunks");
      for (auto i : seeded_sample(members.size(), *src.cap, source_seed(spec.shuffle_seed, src.tag)))
        chosen.push_back(members[i]);
      r.selected = chosen.size();
    } else {
      chosen = members;
    }
    for (std::uint64_t rep = 0; rep < src.repeat_factor; ++rep)
      for (auto i : chosen) out.chunks.push_back(input.chunks[i]);
    r.chunks = r.selected * r.repeat_factor;
    r.tokens = r.chunks * spec.chunk_len;
    report.total_chunks += r.chunks;
    report.total_tokens += r.tokens;
    report.sources.push_back(std::move(r));
  }
  seeded_shuffle(std::span<ChunkRef>(out.chunks), spec.shuffle_seed);
  return {std::move(out), std::move(report)};
}

// ---------------------------------------------------------------------------
// Warm-up

namespace {

constexpr std::string_view kFa = "<FA> ";
constexpr std::string_view kEn = "<EN> ";

void check_paragraph(const std::string& p, const std::string& story) {
  if (p.empty()) throw DataError("parallel doc '" + story + "': empty paragraph");
  if (p.find('\n') != std::string::npos)
    throw DataError("parallel doc '" + story + "': paragraph contains a line break");
}

}  // namespace

ParallelDoc parallel_doc_from_json(const json& j) {
  ParallelDoc doc;
  try {
    if (j.contains("story_id")) doc.story_id = j["story_id"].get<std::string>();
    else if (j.contains("id")) doc.story_id = j["id"].get<std::string>();
    if (j.contains("pairs")) {
      for (const auto& p : j.at("pairs")) doc.pairs.emplace_back(p.at("en").get<std::string>(), p.at("fa").get<std::string>());
    } else {
      const auto& en = j.at("en");
      const auto& fa = j.at("fa");
      if (!en.is_array() || !fa.is_array() || en.size() != fa.size())
        throw DataError("parallel doc: 'en' and 'fa' must be arrays of equal length");
      for (std::size_t i = 0; i < en.size(); ++i) doc.pairs.emplace_back(en[i].get<std::string>(), fa[i].get<std::string>());
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed parallel doc: ") + e.what());
  }
  return doc;
}

std::string format_warmup(const ParallelDoc& doc, WarmupDirection direction) {
  if (doc.pairs.empty()) throw DataError("parallel doc '" + doc.story_id + "' has no pairs");
  std::string out;
  for (const auto& [en, fa] : doc.pairs) {
    check_paragraph(en, doc.story_id);
    check_paragraph(fa, doc.story_id);
    const bool fa_first = direction == WarmupDirection::fa_first;
    out.append(fa_first ? kFa : kEn).append(fa_first ? fa : en).push_back('\n');
    out.append(fa_first ? kEn : kFa).append(fa_first ? en : fa).push_back('\n');
  }
  return out;
}

std::pair<ParallelDoc, WarmupDirection> parse_warmup(std::string_view text) {
  if (text.empty() || text.back() != '\n') throw DataError("warm-up text must end with a newline");
  std::vector<std::string_view> lines;
  for (std::size_t start = 0; start < text.size();) {
    const auto nl = text.find('\n', start);
    lines.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  if (lines.empty() || lines.size() % 2 != 0) throw DataError("warm-up text must hold an even number of lines");
  const bool fa_first = lines[0].starts_with(kFa);
  if (!fa_first && !lines[0].starts_with(kEn)) throw DataError("warm-up line 1 lacks a language marker");
  ParallelDoc doc;
  for (std::size_t i = 0; i < lines.size(); i += 2) {
    const auto first = fa_first ? kFa : kEn;
    const auto second = fa_first ? kEn : kFa;
    if (!lines[i].starts_with(first) || !lines[i + 1].starts_with(second))
      throw DataError("warm-up line " + std::to_string(i + 1) + ": markers do not alternate");
    std::string a(lines[i].substr(first.size()));
    std::string b(lines[i + 1].substr(second.size()));
    if (fa_first) doc.pairs.emplace_back(std::move(b), std::move(a));
    else doc.pairs.emplace_back(std::move(a), std::move(b));
  }
  return {std::move(doc), fa_first ? WarmupDirection::fa_first : WarmupDirection::en_first};
}

// ---------------------------------------------------------------------------
// SFT

std::string_view to_string(Role r) {
  switch (r) {
    case Role::system: return "system";
    case Role::user: return "user";
    case Role::assistant: return "assistant";
  }
  return "?";
}

Role role_from_string(std::string_view s) {
  if (s == "system") return Role::system;
  if (s == "user") return Role::user;
  if (s == "assistant") return Role::assistant;
  throw DataError("unknown role '" + std::string(s) + "'");
}

const std::string& ChatTemplate::marker(Role r) const {
  switch (r) {
    case Role::system: return system;
    case Role::user: return user;
    case Role::assistant: break;
  }
  return assistant;
}

ChatTemplate ChatTemplate::from_json(const json& j) {
  ChatTemplate t;
  try {
    t.system = j.value("system", t.system);
    t.user = j.value("user", t.user);
    t.assistant = j.value("assistant", t.assistant);
    t.end = j.value("end", t.end);
    t.separator = j.value("separator", t.separator);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("chat template: ") + e.what());
  }
  if (t.assistant.empty() || t.end.empty()) throw ConfigError("chat template: assistant and end markers are required");
  return t;
}

json SftSample::to_json() const {
  json spans_json = json::array();
  for (const auto& s : spans) spans_json.push_back({{"role", forge::to_string(s.role)}, {"begin", s.begin}, {"end", s.end}});
  return json{{"ids", token_ids}, {"mask", loss_mask}, {"spans", spans_json}, {"truncated", truncated_tokens}};
}

namespace {

// A marker maps to its special token when the vocabulary has one.
std::vector<std::uint32_t> encode_marker(const std::string& marker, const Tokenizer& tok) {
  if (marker.empty()) return {};
  if (auto id = tok.id_of(marker, TokenKind::special)) return {*id};
  return tok.encode(marker);
}

}  // namespace

SftSample format_sft(const Conversation& conversation, const ChatTemplate& tmpl, const Tokenizer& tok,
                     std::size_t max_len) {
  if (conversation.empty() || conversation.back().role != Role::assistant)
    throw DataError("conversation must end with an assistant turn");
  if (max_len == 0) throw ConfigError("sft max_len must be positive");

  struct Segment {
    Role role;
    std::vector<std::uint32_t> head, body, tail, sep;
  };
  std::vector<Segment> segs;
  const auto end_ids = encode_marker(tmpl.end, tok);
  const auto sep_ids = tok.encode(tmpl.separator);
  for (std::size_t i = 0; i < conversation.size(); ++i) {
    const auto& t = conversation[i];
    segs.push_back({t.role, encode_marker(tmpl.marker(t.role), tok), tok.encode(t.text), end_ids,
                    i + 1 < conversation.size() ? sep_ids : std::vector<std::uint32_t>{}});
  }
  auto& last = segs.back();
  if (last.body.empty()) throw UntrainableSampleError("final assistant turn is empty");

  // Flatten with per-token role and mask.
  std::vector<std::uint32_t> ids;
  std::vector<std::uint8_t> mask;
  std::vector<Role> roles;
  auto emit = [&](const std::vector<std::uint32_t>& part, Role role, bool loss) {
    ids.insert(ids.end(), part.begin(), part.end());
    mask.insert(mask.end(), part.size(), loss ? 1 : 0);
    roles.insert(roles.end(), part.size(), role);
  };

  SftSample sample;
  const std::size_t last_len = last.head.size() + last.body.size() + last.tail.size();
  std::size_t prefix_len = 0;
  for (std::size_t i = 0; i + 1 < segs.size(); ++i)
    prefix_len += segs[i].head.size() + segs[i].body.size() + segs[i].tail.size() + segs[i].sep.size();

  if (last_len > max_len) {
    const std::size_t fixed = last.head.size() + last.tail.size();
    if (fixed >= max_len) throw UntrainableSampleError("max_len leaves no room for assistant text");
    const std::size_t keep = max_len - fixed;
    sample.truncated_tokens = prefix_len + (last.body.size() - keep);
    last.body.resize(keep);
    emit(last.head, Role::assistant, false);
    emit(last.body, Role::assistant, true);
    emit(last.tail, Role::assistant, true);
  } else {
    for (const auto& s : segs) {
      const bool a = s.role == Role::assistant;
      emit(s.head, s.role, false);
      emit(s.body, s.role, a);
      emit(s.tail, s.role, a);
      emit(s.sep, s.role, false);
    }
    if (ids.size() > max_len) {
      const std::size_t drop = ids.size() - max_len;
      sample.truncated_tokens = drop;
      ids.erase(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(drop));
      mask.erase(mask.begin(), mask.begin() + static_cast<std::ptrdiff_t>(drop));
      roles.erase(roles.begin(), roles.begin() + static_cast<std::ptrdiff_t>(drop));
    }
  }

  for (std::size_t i = 0; i < roles.size();) {
    std::size_t j = i;
    while (j < roles.size() && roles[j] == roles[i]) ++j;
    sample.spans.push_back({roles[i], i, j});
    i = j;
  }
  if (std::find(mask.begin(), mask.end(), 1) == mask.end())
    throw UntrainableSampleError("no assistant tokens survive truncation");
  sample.token_ids = std::move(ids);
  sample.loss_mask = std::move(mask);
  return sample;
}

Conversation conversation_from_record(const json& r) {
  auto str = [&](const char* key) -> std::string {
    const auto& v = r.at(key);
    if (!v.is_string()) throw DataError(std::string("sft record: '") + key + "' must be a string");
    return v.get<std::string>();
  };
  try {
    if (!r.is_object()) throw DataError("sft record must be a JSON object");
    if (r.contains("messages")) {
      Conversation c;
      for (const auto& m : r["messages"])
        c.push_back({role_from_string(m.at("role").get<std::string>()), m.at("content").get<std::string>()});
      return c;
    }
    if (r.contains("instruction") && r.contains("output")) {
      std::string prompt = str("instruction");
      if (r.contains("input") && r["input"].is_string() && !r["input"].get<std::string>().empty())
        prompt += "\n\n" + r["input"].get<std::string>();
      return {{Role::user, prompt}, {Role::assistant, str("output")}};
    }
    if (r.contains("inputs") && r.contains("targets")) return {{Role::user, str("inputs")}, {Role::assistant, str("targets")}};
    if (r.contains("en") && r.contains("fa"))
      return {{Role::user, "Translate the following English text into Persian:\n" + str("en")},
              {Role::assistant, str("fa")}};
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed sft record: ") + e.what());
  }
  throw DataError("sft record matches no known schema");
}

SftMix build_sft_mix(const std::vector<SftSource>& sources, std::uint64_t seed) {
  SftMix mix;
  std::unordered_set<std::string> seen;
  for (const auto& src : sources) {
    if (!seen.insert(src.tag).second) throw ConfigError("sft mix: source '" + src.tag + "' listed twice");
    if (src.cap > src.records.size())
      throw ConfigError("sft mix: cap " + std::to_string(src.cap) + " for source '" + src.tag + "' exceeds the " +
                        std::to_string(src.records.size()) + " available records");
    for (auto i : seeded_sample(src.records.size(), src.cap, source_seed(seed, src.tag)))
      mix.entries.push_back({src.tag, i, conversation_from_record(src.records[i])});
    mix.counts.emplace_back(src.tag, src.cap);
  }
  seeded_shuffle(std::span<SftManifestEntry>(mix.entries), seed);
  return mix;
}

}  // namespace forge
