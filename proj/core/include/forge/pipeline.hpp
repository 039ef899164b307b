// Copyright 2026 The Forge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "forge/corpus.hpp"
#include "forge/dedup.hpp"
#include "forge/document.hpp"
#include "forge/normalizer.hpp"
#include "forge/quality.hpp"

namespace forge {

// Canonical stage order. A config may omit stages but not reorder them.
inline constexpr std::string_view kStageOrder[] = {"normalize", "langid",   "profanity", "quality", "repetition",
                                                   "dedup",     "tokenize", "chunk",     "mix"};

// fnmatch-style pattern on the whole string.
bool glob_match(std::string_view pattern, std::string_view text);
// Sorted paths matching a filesystem glob; a literal path is returned as is.
std::vector<std::filesystem::path> expand_inputs(const std::string& pattern);

struct PipelineConfig {
  std::vector<std::string> stages;
  std::vector<std::string> source_allow = {"*"};
  std::uint64_t seed = 0;
  unsigned workers = 1;

  // normalize
  std::optional<std::filesystem::path> profile_path;
  std::vector<std::string> wiki_sources;  // globs; section stripping applies
  WikiSectionPolicy wiki_policy;

  // langid
  std::optional<std::filesystem::path> langid_model;
  std::string langid_target = "fa";
  double langid_threshold = 0.8;

  // profanity, quality, repetition
  std::optional<std::filesystem::path> quality_path;

  // dedup
  DedupParams dedup;
  std::optional<double> dedup_verify_threshold;
  std::vector<std::string> dedup_exempt;  // globs

  // tokenize, chunk
  std::optional<std::filesystem::path> tokenizer_path;
  std::size_t chunk_len = 2048;
  std::optional<std::uint32_t> separator_id;
  std::string separator_token = "<|endoftext|>";

  // mix; when empty every chunked source is taken once
  std::vector<MixSource> mix_sources;
  std::optional<std::uint64_t> mix_seed;

  json raw = json::object();  // as loaded, for the manifest

  void validate() const;
  // Digest of everything that affects artifacts (not the worker count).
  std::string hash() const;
};

// Relative paths resolve against `base_dir`. Throws ConfigError.
PipelineConfig pipeline_config_from_json(const json& j, const std::filesystem::path& base_dir = {});
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

struct RunOptions {
  std::vector<std::filesystem::path> inputs;
  std::filesystem::path out_dir;
  std::optional<unsigned> workers;  // overrides the config
  bool resume = false;
  std::optional<std::string> stop_after;  // stage name, for staged runs
  std::function<void(std::string_view)> log;
};

// Runs ingest and the configured stages, materializing each under
// out/stages/NN_name/, and writes out/manifest.json. Returns the manifest.
json run_pipeline(const PipelineConfig& config, const RunOptions& options);

struct StatsReport {
  std::string text;
  json summary;
};

// Throws DataError when a stage violates input == kept + dropped.
StatsReport stats_report(const json& manifest);
void validate_manifest(const json& manifest);

}  // namespace forge
