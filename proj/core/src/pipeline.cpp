// Copyright 2026 The Forge Authors
// SPDX-License-Identifier: Apache-2.0

#include "forge/pipeline.hpp"

#include <fnmatch.h>
#include <glob.h>

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>

#include "forge/bpe.hpp"
#include "forge/error.hpp"
#include "forge/hash.hpp"
#include "forge/langid.hpp"
#include "forge/parallel.hpp"

namespace forge {

namespace fs = std::filesystem;

bool glob_match(std::string_view pattern, std::string_view text) {
  return fnmatch(std::string(pattern).c_str(), std::string(text).c_str(), 0) == 0;
}

std::vector<fs::path> expand_inputs(const std::string& pattern) {
  if (pattern.find_first_of("*?[") == std::string::npos) return {fs::path(pattern)};
  glob_t g{};
  std::vector<fs::path> out;
  const int rc = ::glob(pattern.c_str(), 0, nullptr, &g);
  if (rc == 0)
    for (std::size_t i = 0; i < g.gl_pathc; ++i) out.emplace_back(g.gl_pathv[i]);
  globfree(&g);
  if (rc != 0 && rc != GLOB_NOMATCH) throw DataError("cannot expand input pattern '" + pattern + "'");
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// Configuration

namespace {

std::size_t stage_rank(std::string_view name) {
  for (std::size_t i = 0; i < std::size(kStageOrder); ++i)
    if (kStageOrder[i] == name) return i;
  return static_cast<std::size_t>(-1);
}

bool has_stage(const std::vector<std::string>& stages, std::string_view name) {
  return std::find(stages.begin(), stages.end(), name) != stages.end();
}

std::vector<std::string> string_list(const json& j, const char* key, std::vector<std::string> fallback) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  if (!it->is_array()) throw ConfigError(std::string(key) + " must be an array of strings");
  std::vector<std::string> out;
  for (const auto& v : *it) {
    if (!v.is_string()) throw ConfigError(std::string(key) + " must be an array of strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

std::optional<fs::path> path_field(const json& j, const char* key, const fs::path& base) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw ConfigError(std::string(key) + " must be a path string");
  fs::path p = it->get<std::string>();
  return p.is_relative() && !base.empty() ? base / p : p;
}

const json& section(const json& j, const char* key) {
  static const json empty = json::object();
  auto it = j.find(key);
  if (it == j.end()) return empty;
  if (!it->is_object()) throw ConfigError(std::string(key) + " must be an object");
  return *it;
}

bool matches_any(const std::vector<std::string>& patterns, std::string_view text) {
  return std::any_of(patterns.begin(), patterns.end(), [&](const auto& p) { return glob_match(p, text); });
}

}  // namespace

void PipelineConfig::validate() const {
  std::size_t last = 0;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < stages.size(); ++i) {
    const auto rank = stage_rank(stages[i]);
    if (rank == static_cast<std::size_t>(-1)) throw ConfigError("unknown stage '" + stages[i] + "'");
    if (!seen.insert(stages[i]).second) throw ConfigError("stage '" + stages[i] + "' listed twice");
    if (i > 0 && rank < last) throw ConfigError("stage '" + stages[i] + "' is out of order");
    last = rank;
  }
  if (has_stage(stages, "chunk") && !has_stage(stages, "tokenize")) throw ConfigError("chunk requires tokenize");
  if (has_stage(stages, "mix") && !has_stage(stages, "chunk")) throw ConfigError("mix requires chunk");
  if (has_stage(stages, "langid") && !langid_model) throw ConfigError("langid stage needs langid.model");
  if (has_stage(stages, "tokenize") && !tokenizer_path) throw ConfigError("tokenize stage needs tokenize.tokenizer");
  if (langid_threshold < 0.0 || langid_threshold > 1.0) throw ConfigError("langid.threshold must lie in [0, 1]");
  if (chunk_len <= 1) throw ConfigError("chunk.chunk_len must be greater than 1");
  if (workers == 0) throw ConfigError("workers must be >= 1");
  if (source_allow.empty()) throw ConfigError("sources.allow must not be empty");
  dedup.validate();
  for (const auto& m : mix_sources)
    if (m.repeat_factor < 1) throw ConfigError("mix: repeat_factor must be >= 1");
}

std::string PipelineConfig::hash() const {
  json j = raw;
  j.erase("workers");
  // Referenced files count through their contents.
  json files = json::object();
  for (const auto& [k, p] : {std::pair{"profile", profile_path}, {"langid", langid_model},
                             {"quality", quality_path}, {"tokenizer", tokenizer_path}}) {
    if (p) files[k] = sha256_file(*p);
  }
  j["__files"] = files;
  return sha256_hex(j.dump());
}

PipelineConfig pipeline_config_from_json(const json& j, const fs::path& base) {
  if (!j.is_object()) throw ConfigError("pipeline config must be a JSON object");
  if (j.value("schema", std::string()) != "forge.pipeline/1")
    throw ConfigError("pipeline config: schema must be \"forge.pipeline/1\"");
  PipelineConfig c;
  c.raw = j;
  try {
    c.stages = string_list(j, "stages", std::vector<std::string>(std::begin(kStageOrder), std::end(kStageOrder)));
    c.seed = j.value("seed", std::uint64_t{0});
    c.workers = j.value("workers", 1u);

    const auto& sources = section(j, "sources");
    c.source_allow = string_list(sources, "allow", {"*"});

    const auto& norm = section(j, "normalize");
    c.profile_path = path_field(norm, "profile", base);
    c.wiki_sources = string_list(norm, "wiki_sources", {});
    c.wiki_policy.drop_sections = string_list(norm, "drop_sections", c.wiki_policy.drop_sections);

    const auto& lang = section(j, "langid");
    c.langid_model = path_field(lang, "model", base);
    c.langid_target = lang.value("target", c.langid_target);
    c.langid_threshold = lang.value("threshold", c.langid_threshold);

    c.quality_path = path_field(section(j, "quality"), "config", base);

    const auto& dd = section(j, "dedup");
    c.dedup.num_bands = dd.value("bands", c.dedup.num_bands);
    c.dedup.rows_per_band = dd.value("rows", c.dedup.rows_per_band);
    c.dedup.shingle_order = dd.value("shingle_order", c.dedup.shingle_order);
    c.dedup.seed = dd.value("seed", c.seed);
    if (dd.contains("verify_threshold") && !dd["verify_threshold"].is_null())
      c.dedup_verify_threshold = dd["verify_threshold"].get<double>();
    c.dedup_exempt = string_list(dd, "exempt_sources", {});

    const auto& tok = section(j, "tokenize");
    c.tokenizer_path = path_field(tok, "tokenizer", base);
    const auto& ch = section(j, "chunk");
    c.chunk_len = ch.value("chunk_len", c.chunk_len);
    if (ch.contains("separator_id")) c.separator_id = ch["separator_id"].get<std::uint32_t>();
    c.separator_token = ch.value("separator_token", c.separator_token);

    const auto& mix = section(j, "mix");
    if (mix.contains("sources")) c.mix_sources = mix_spec_from_json(json{{"sources", mix["sources"]}}).sources;
    if (mix.contains("shuffle_seed")) c.mix_seed = mix["shuffle_seed"].get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("pipeline config: ") + e.what());
  }
  c.validate();
  return c;
}

PipelineConfig load_pipeline_config(const fs::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
  return pipeline_config_from_json(j, path.parent_path());
}

// ---------------------------------------------------------------------------
// Execution

namespace {

using Clock = std::chrono::steady_clock;

struct StageStats {
  StageStats() = default;
  explicit StageStats(std::string n) : name(std::move(n)) {}

  std::string name;
  std::string unit = "documents";
  std::uint64_t input = 0;
  std::uint64_t kept = 0;
  std::uint64_t dropped = 0;
  std::uint64_t transformed = 0;
  std::map<std::string, std::uint64_t> reasons;
  std::map<std::string, std::uint64_t> rule_hits;
  std::map<std::string, std::string> artifacts;
  json extra = json::object();
  double seconds = 0.0;

  json to_json() const {
    return json{{"name", name},   {"unit", unit},         {"input", input},         {"kept", kept},
                {"dropped", dropped}, {"transformed", transformed}, {"reasons", reasons}, {"rule_hits", rule_hits},
                {"artifacts", artifacts}, {"extra", extra},   {"seconds", seconds},
                {"throughput", seconds > 0 ? static_cast<double>(input) / seconds : 0.0}};
  }
  static StageStats from_json(const json& j) {
    StageStats s;
    s.name = j.at("name");
    s.unit = j.at("unit");
    s.input = j.at("input");
    s.kept = j.at("kept");
    s.dropped = j.at("dropped");
    s.transformed = j.at("transformed");
    s.reasons = j.at("reasons").get<std::map<std::string, std::uint64_t>>();
    s.rule_hits = j.at("rule_hits").get<std::map<std::string, std::uint64_t>>();
    s.artifacts = j.at("artifacts").get<std::map<std::string, std::string>>();
    s.extra = j.at("extra");
    s.seconds = j.at("seconds");
    return s;
  }
};

struct TokenizedDoc {
  std::uint64_t ordinal = 0;
  std::string id;
  std::string source;
  std::vector<std::uint32_t> ids;
};

class Runner {
 public:
  Runner(const PipelineConfig& cfg, const RunOptions& opt)
      : cfg_(cfg), opt_(opt), workers_(opt.workers.value_or(cfg.workers)) {
    if (workers_ == 0) throw ConfigError("workers must be >= 1");
  }

  json run();

 private:
  void log(const std::string& msg) const {
    if (opt_.log) opt_.log(msg);
  }
  fs::path stage_dir(std::size_t index, std::string_view name) const {
    char buf[8];
    std::snprintf(buf, sizeof(buf), "%02zu_", index);
    return opt_.out_dir / "stages" / (buf + std::string(name));
  }
  bool reusable(const fs::path& dir) const {
    if (!opt_.resume) return false;
    const auto marker = dir / "_SUCCESS";
    return fs::exists(marker) && read_file(marker) == run_hash_ + "\n";
  }
  void begin_stage(const fs::path& dir) const {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  void finish_stage(const fs::path& dir, StageStats& stats) const {
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (!entry.is_regular_file()) continue;
      const auto name = entry.path().filename().string();
      if (name == "stats.json" || name == "_SUCCESS") continue;
      stats.artifacts[name] = sha256_file(entry.path());
    }
    write_file(dir / "stats.json", stats.to_json().dump(2) + "\n");
    write_file(dir / "_SUCCESS", run_hash_ + "\n");
  }

  StageStats ingest(const fs::path& dir);
  template <typename Fn>
  StageStats map_stage(const std::string& name, const fs::path& dir, Fn&& fn);
  StageStats dedup_stage(const fs::path& dir);
  StageStats tokenize_stage(const fs::path& dir);
  StageStats chunk_stage(const fs::path& dir);
  StageStats mix_stage(const fs::path& dir);

  void write_docs_and_drops(const fs::path& dir, const std::vector<json>& drops) const {
    write_documents(dir / "docs.jsonl", docs_);
    write_jsonl(dir / "drops.jsonl", drops);
  }

  const PipelineConfig& cfg_;
  const RunOptions& opt_;
  unsigned workers_;
  std::string run_hash_;

  std::vector<Document> docs_;
  std::vector<TokenizedDoc> tokens_;
  ChunkManifest chunks_;
};

StageStats Runner::ingest(const fs::path& dir) {
  StageStats stats{"ingest"};
  std::vector<json> drops;
  std::uint64_t ordinal = 0;
  for (const auto& input : opt_.inputs) {
    JsonlReader reader(input);
    while (auto line = reader.next_line()) {
      ++stats.input;
      const auto ord = ordinal++;
      Document doc;
      try {
        doc = parse_document_line(*line);
      } catch (const DataError& e) {
        drops.push_back(json{{"id", nullptr},
                             {"ordinal", ord},
                             {"stage", "ingest"},
                             {"verdict", "drop"},
                             {"reasons", {"malformed_input"}},
                             {"detail", {{"file", input.string()}, {"line", reader.line_number()}, {"error", e.what()}}}});
        ++stats.dropped;
        ++stats.reasons["malformed_input"];
        continue;
      }
      doc.ordinal = ord;
      if (!matches_any(cfg_.source_allow, doc.source)) {
        drops.push_back(audit_record(doc, StageDecision::drop("ingest", {"source_not_allowed"},
                                                              json{{"source", doc.source}})));
        ++stats.dropped;
        ++stats.reasons["source_not_allowed"];
        continue;
      }
      ++stats.kept;
      docs_.push_back(std::move(doc));
    }
  }
  write_docs_and_drops(dir, drops);
  return stats;
}

template <typename Fn>
StageStats Runner::map_stage(const std::string& name, const fs::path& dir, Fn&& fn) {
  StageStats stats{name};
  stats.input = docs_.size();
  std::vector<StageDecision> decisions(docs_.size());
  parallel_for(docs_.size(), workers_, [&](std::size_t i) { decisions[i] = fn(docs_[i]); }, 16);

  std::vector<Document> kept;
  std::vector<json> drops;
  kept.reserve(docs_.size());
  for (std::size_t i = 0; i < docs_.size(); ++i) {
    auto& d = decisions[i];
    for (const auto& r : d.reasons)
      if (name == "quality") ++stats.rule_hits[r];
    if (d.verdict == Verdict::drop) {
      ++stats.dropped;
      ++stats.reasons[d.reasons.empty() ? "unspecified" : d.reasons.front()];
      drops.push_back(audit_record(docs_[i], d));
      continue;
    }
    if (d.verdict == Verdict::transform) ++stats.transformed;
    ++stats.kept;
    kept.push_back(std::move(docs_[i]));
  }
  docs_ = std::move(kept);
  write_docs_and_drops(dir, drops);
  return stats;
}

StageStats Runner::dedup_stage(const fs::path& dir) {
  StageStats stats{"dedup"};
  stats.input = docs_.size();
  const auto& p = cfg_.dedup;

  std::vector<std::optional<MinHashSignature>> sigs(docs_.size());
  std::vector<char> exempt(docs_.size(), 0);
  parallel_for(docs_.size(), workers_, [&](std::size_t i) {
    if (matches_any(cfg_.dedup_exempt, docs_[i].source)) {
      exempt[i] = 1;
      return;
    }
    const auto sh = shingle(docs_[i].text, p.shingle_order);
    if (!sh.empty()) sigs[i] = minhash_signature(sh, p, docs_[i].ordinal);
  }, 16);

  std::vector<MinHashSignature> signed_docs;
  std::uint64_t unsignable = 0, exempted = 0;
  for (std::size_t i = 0; i < docs_.size(); ++i) {
    if (exempt[i]) {
      ++exempted;
      docs_[i].meta["dedup"] = "exempt";
    } else if (!sigs[i]) {
      ++unsignable;
      docs_[i].meta["dedup"] = "unsignable";
    } else {
      signed_docs.push_back(std::move(*sigs[i]));
    }
  }
  const auto clusters = cluster_signatures(signed_docs, p, cfg_.dedup_verify_threshold, workers_);
  save_signatures(dir / "signatures.bin", p, signed_docs);
  write_jsonl(dir / "drop_list.jsonl", drop_list_records(clusters));

  std::map<std::uint64_t, std::uint64_t> rep_of;
  for (const auto& c : clusters.clusters)
    for (std::size_t k = 1; k < c.members.size(); ++k) rep_of[c.members[k]] = c.representative;

  std::vector<Document> kept;
  std::vector<json> drops;
  for (auto& doc : docs_) {
    if (auto it = rep_of.find(doc.ordinal); it != rep_of.end()) {
      ++stats.dropped;
      ++stats.reasons["near_duplicate"];
      drops.push_back(audit_record(doc, StageDecision::drop("dedup", {"near_duplicate"},
                                                            json{{"representative", it->second}})));
      continue;
    }
    ++stats.kept;
    kept.push_back(std::move(doc));
  }
  docs_ = std::move(kept);
  stats.extra = json{{"clusters", clusters.clusters.size()}, {"exempt", exempted}, {"unsignable", unsignable},
                     {"signed", signed_docs.size()}};
  write_docs_and_drops(dir, drops);
  return stats;
}

StageStats Runner::tokenize_stage(const fs::path& dir) {
  StageStats stats{"tokenize"};
  stats.input = docs_.size();
  const Tokenizer tok = load_tokenizer(*cfg_.tokenizer_path);
  std::vector<std::vector<std::uint32_t>> ids(docs_.size());
  std::vector<std::string> errors(docs_.size());
  parallel_for(docs_.size(), workers_, [&](std::size_t i) {
    try {
      ids[i] = tok.encode(docs_[i].text);
    } catch (const DataError& e) {
      errors[i] = e.what();
    }
  }, 16);

  std::vector<json> drops;
  std::uint64_t total = 0;
  std::ofstream out(dir / "tokens.jsonl", std::ios::binary);
  for (std::size_t i = 0; i < docs_.size(); ++i) {
    const auto& d = docs_[i];
    if (!errors[i].empty()) {
      ++stats.dropped;
      ++stats.reasons["untokenizable"];
      drops.push_back(audit_record(d, StageDecision::drop("tokenize", {"untokenizable"}, json{{"error", errors[i]}})));
      continue;
    }
    ++stats.kept;
    total += ids[i].size();
    out << json{{"ordinal", d.ordinal}, {"id", d.id}, {"source", d.source}, {"ids", ids[i]}}.dump() << '\n';
    tokens_.push_back({d.ordinal, d.id, d.source, std::move(ids[i])});
  }
  out.close();
  write_jsonl(dir / "drops.jsonl", drops);
  stats.extra = json{{"tokens", total}, {"vocab_size", tok.vocab_size()}};
  docs_.clear();
  return stats;
}

StageStats Runner::chunk_stage(const fs::path& dir) {
  StageStats stats{"chunk"};
  stats.input = tokens_.size();
  std::uint32_t separator;
  if (cfg_.separator_id) {
    separator = *cfg_.separator_id;
  } else {
    const Tokenizer tok = load_tokenizer(*cfg_.tokenizer_path);
    auto id = tok.id_of(cfg_.separator_token, TokenKind::special);
    if (!id) id = tok.id_of(cfg_.separator_token, TokenKind::normal);
    if (!id) throw ConfigError("chunk separator '" + cfg_.separator_token + "' is not in the vocabulary");
    separator = *id;
  }

  std::map<std::string, std::vector<const TokenizedDoc*>> by_source;
  for (const auto& t : tokens_) by_source[t.source].push_back(&t);

  std::vector<json> drops;
  json per_source = json::object();
  std::uint64_t dropped_tokens = 0;
  for (const auto& [source, docs] : by_source) {
    std::string safe = source.empty() ? "_" : source;
    for (auto& ch : safe)
      if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '-' && ch != '_' && ch != '.') ch = '_';
    const std::string rel = (fs::path("stages") / dir.filename() / (safe + ".bin")).generic_string();
    std::ofstream payload;
    std::uint64_t offset = 0;
    ChunkPacker packer(source, cfg_.chunk_len, separator, [&](TokenChunk&& c) {
      if (!payload.is_open()) payload.open(opt_.out_dir / rel, std::ios::binary);
      payload.write(reinterpret_cast<const char*>(c.token_ids.data()),
                    static_cast<std::streamsize>(c.token_ids.size() * sizeof(std::uint32_t)));
      chunks_.add({source, rel, offset, c.chunk_index});
      offset += c.token_ids.size() * sizeof(std::uint32_t);
    });
    for (const auto* t : docs) {
      if (t->ids.empty()) {
        ++stats.dropped;
        ++stats.reasons["empty_document"];
        Document d{t->id, "", t->source};
        d.ordinal = t->ordinal;
        drops.push_back(audit_record(d, StageDecision::drop("chunk", {"empty_document"})));
      } else {
        ++stats.kept;
      }
      packer.add(t->ids);
    }
    const auto s = packer.finish();
    if (payload.is_open() && !payload.flush()) throw DataError("write failed: " + rel);
    dropped_tokens += s.dropped_tokens;
    per_source[source] = {{"documents", s.documents}, {"stream_tokens", s.stream_tokens},
                          {"chunks", s.chunks},       {"dropped_tokens", s.dropped_tokens}};
  }
  write_manifest(dir / "manifest.jsonl", chunks_);
  write_jsonl(dir / "drops.jsonl", drops);
  stats.extra = json{{"chunk_len", cfg_.chunk_len}, {"separator_id", separator}, {"chunks", chunks_.chunks.size()},
                     {"dropped_tokens", dropped_tokens}, {"sources", per_source}};
  tokens_.clear();
  return stats;
}

StageStats Runner::mix_stage(const fs::path& dir) {
  StageStats stats{"mix"};
  stats.unit = "chunks";
  stats.input = chunks_.chunks.size();
  MixSpec spec;
  spec.shuffle_seed = cfg_.mix_seed.value_or(cfg_.seed);
  spec.chunk_len = cfg_.chunk_len;
  spec.sources = cfg_.mix_sources;
  if (spec.sources.empty()) {
    auto tags = chunks_.sources;
    std::sort(tags.begin(), tags.end());
    for (const auto& t : tags) spec.sources.push_back({t, 1, std::nullopt});
  }
  ChunkManifest mixed;
  MixReport report;
  if (!spec.sources.empty()) std::tie(mixed, report) = mix_datasets(chunks_, spec);
  std::uint64_t selected = 0;
  for (const auto& s : report.sources) selected += s.selected;
  stats.kept = selected;
  stats.dropped = stats.input - selected;
  if (stats.dropped > 0) stats.reasons["not_selected"] = stats.dropped;
  write_manifest(dir / "manifest.jsonl", mixed);
  stats.extra = report.to_json();
  write_file(dir / "report.json", stats.extra.dump(2) + "\n");
  return stats;
}

json Runner::run() {
  const auto t_start = Clock::now();
  json inputs = json::array();
  std::string input_digest;
  for (const auto& p : opt_.inputs) {
    const auto digest = sha256_file(p);
    inputs.push_back({{"path", p.string()}, {"sha256", digest}});
    input_digest += digest;
  }
  run_hash_ = sha256_hex(cfg_.hash() + input_digest);

  if (!opt_.resume) fs::remove_all(opt_.out_dir / "stages");
  fs::create_directories(opt_.out_dir / "stages");

  std::vector<std::string> order = {"ingest"};
  order.insert(order.end(), cfg_.stages.begin(), cfg_.stages.end());

  // Shared read-only resources, loaded once.
  std::optional<NormalizationProfile> profile;
  std::optional<CharNgramModel> langid;
  std::optional<QualityConfig> quality;
  auto get_profile = [&]() -> const NormalizationProfile& {
    if (!profile) profile = cfg_.profile_path ? load_profile(*cfg_.profile_path) : persian_default();
    return *profile;
  };
  auto get_quality = [&]() -> const QualityConfig& {
    if (!quality) quality = cfg_.quality_path ? load_quality_config(*cfg_.quality_path) : default_quality_config();
    return *quality;
  };
  // Load every configured resource up front so bad configs fail before work.
  if (has_stage(cfg_.stages, "normalize")) get_profile();
  if (has_stage(cfg_.stages, "profanity") || has_stage(cfg_.stages, "quality") ||
      has_stage(cfg_.stages, "repetition"))
    get_quality();
  if (has_stage(cfg_.stages, "langid")) langid = load_langid(*cfg_.langid_model);
  if (cfg_.tokenizer_path) (void)load_tokenizer_file(*cfg_.tokenizer_path);

  json stages = json::array();
  bool resumed_prev = true;
  std::string stopped_after;
  for (std::size_t idx = 0; idx < order.size(); ++idx) {
    const auto& name = order[idx];
    const auto dir = stage_dir(idx, name);
    StageStats stats;
    // A stage is reused only when every earlier stage was reused as well.
    if (resumed_prev && reusable(dir)) {
      log("stage " + name + ": reusing completed output");
      stats = StageStats::from_json(json::parse(read_file(dir / "stats.json")));
      const bool next_needs_memory = idx + 1 < order.size() && !reusable(stage_dir(idx + 1, order[idx + 1]));
      if (next_needs_memory) {
        if (fs::exists(dir / "docs.jsonl")) docs_ = read_documents(dir / "docs.jsonl");
        if (name == "tokenize") {
          tokens_.clear();
          for (const auto& j : read_jsonl(dir / "tokens.jsonl"))
            tokens_.push_back({j.at("ordinal"), j.at("id"), j.at("source"), j.at("ids")});
        }
        if (name == "chunk") chunks_ = read_manifest(dir / "manifest.jsonl");
      }
      stages.push_back(stats.to_json());
      if (opt_.stop_after && *opt_.stop_after == name) {
        stopped_after = name;
        break;
      }
      continue;
    }
    resumed_prev = false;
    log("stage " + name + ": running on " + std::to_string(name == "mix" ? chunks_.chunks.size() : name == "chunk" ? tokens_.size() : docs_.size()) + " items");
    begin_stage(dir);
    const auto t0 = Clock::now();
    if (name == "ingest") {
      stats = ingest(dir);
    } else if (name == "normalize") {
      const auto& prof = get_profile();
      stats = map_stage(name, dir, [&](Document& d) {
        const auto before = d.text;
        d.text = normalize_text(d.text, prof);
        if (matches_any(cfg_.wiki_sources, d.source)) d = strip_wiki_sections(d, cfg_.wiki_policy);
        return d.text == before ? StageDecision::keep(name)
                                : StageDecision{name, Verdict::transform, {"normalized"}, json::object()};
      });
    } else if (name == "langid") {
      stats = map_stage(name, dir, [&](Document& d) {
        auto dec = filter_language(d, *langid, cfg_.langid_target, cfg_.langid_threshold);
        if (dec.kept()) d.meta["langid"] = dec.detail;
        return dec;
      });
    } else if (name == "profanity") {
      const auto& q = get_quality();
      stats = map_stage(name, dir, [&](Document& d) {
        return q.profanity_enabled ? profanity_gate(d, q.lexicons.profanity) : StageDecision::keep(name);
      });
    } else if (name == "quality") {
      const auto& q = get_quality();
      stats = map_stage(name, dir, [&](Document& d) {
        return apply_quality_rules(compute_quality_stats(d, q.lexicons), q.thresholds);
      });
    } else if (name == "repetition") {
      const auto& q = get_quality();
      stats = map_stage(name, dir, [&](Document& d) {
        auto r = remove_repetition(d, q.repetition);
        if (r.decision.verdict == Verdict::transform) d = std::move(r.doc);
        return r.decision;
      });
    } else if (name == "dedup") {
      stats = dedup_stage(dir);
    } else if (name == "tokenize") {
      stats = tokenize_stage(dir);
    } else if (name == "chunk") {
      stats = chunk_stage(dir);
    } else if (name == "mix") {
      stats = mix_stage(dir);
    }
    stats.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    finish_stage(dir, stats);
    log("stage " + name + ": kept " + std::to_string(stats.kept) + ", dropped " + std::to_string(stats.dropped));
    stages.push_back(stats.to_json());
    if (opt_.stop_after && *opt_.stop_after == name) {
      stopped_after = name;
      break;
    }
  }

  json manifest{{"schema", "forge.manifest/1"},
                {"config_hash", run_hash_},
                {"config", cfg_.raw},
                {"stage_order", order},
                {"workers", workers_},
                {"inputs", inputs},
                {"stages", stages},
                {"complete", stopped_after.empty() || stopped_after == order.back()},
                {"seconds", std::chrono::duration<double>(Clock::now() - t_start).count()}};
  validate_manifest(manifest);
  write_file(opt_.out_dir / "manifest.json", manifest.dump(2) + "\n");
  return manifest;
}

}  // namespace

json run_pipeline(const PipelineConfig& config, const RunOptions& options) {
  config.validate();
  if (options.out_dir.empty()) throw ConfigError("run_pipeline: output directory required");
  for (const auto& p : options.inputs)
    if (!fs::is_regular_file(p)) throw DataError("input not found: " + p.string());
  Runner runner(config, options);
  return runner.run();
}

}  // namespace forge
