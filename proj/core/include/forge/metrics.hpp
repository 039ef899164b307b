// Copyright 2026 The Forge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "forge/document.hpp"

namespace forge {

// 1 / perplexity. Throws DomainError for perplexity < 1 or non-finite input.
double mean_token_probability(double perplexity);
double perplexity_from_mean_nll(double mean_nll);
// exp of the mean of a stream of per-token negative log-likelihoods.
double perplexity_from_nll(std::span<const double> nll);

struct TargetMatrix {
  std::string name;
  std::uint64_t d_in = 0;
  std::uint64_t d_out = 0;
  std::uint64_t layers = 1;
};

struct LoraSpec {
  std::uint64_t rank = 0;
  double alpha = 0.0;  // scaling only, no effect on counts
  std::vector<TargetMatrix> targets;

  void validate() const;
};

// Sum over targets of layers * rank * (d_in + d_out).
std::uint64_t lora_param_count(const LoraSpec& spec);

struct ModelDims {
  std::uint64_t hidden = 0;
  std::uint64_t layers = 0;
  std::uint64_t base_vocab = 0;
  std::uint64_t new_tokens = 0;
  bool head_tied = false;
  std::vector<TargetMatrix> matrices;  // per-layer shapes, layers field ignored

  void validate() const;
};

// Phi-3-mini shapes: fused qkv 3072->9216, o 3072->3072, fused gate/up
// 3072->16384, down 8192->3072, 32 layers, vocab 32064.
ModelDims phi3_mini_dims();
ModelDims model_dims_from_json(const json& j);
LoraSpec lora_spec_for(const ModelDims& dims, std::uint64_t rank, double alpha);

enum class ResizeScope { new_rows_only, full_embed_and_head };
std::uint64_t resize_param_count(const ModelDims& dims, ResizeScope scope);

enum class EmbeddingInit { mean_of_existing, gaussian, zero };
std::string_view to_string(EmbeddingInit init);

json budget_report(const ModelDims& dims, std::uint64_t rank, double alpha, EmbeddingInit init);

struct AlignmentReport {
  std::vector<std::string> rows;  // pair_i.a
  std::vector<std::string> cols;  // pair_j.b
  std::vector<std::vector<double>> cosine;
};

using EmbeddingTable = std::map<std::string, std::vector<double>>;

// cosine[i][j] = cos(vec(pairs[i].first), vec(pairs[j].second)). Throws
// DataError naming a missing token, a zero vector or a dimension mismatch.
AlignmentReport alignment_matrix(const EmbeddingTable& embeddings,
                                 const std::vector<std::pair<std::string, std::string>>& pairs);

// "token<TAB>v1 v2 ..." per line.
EmbeddingTable read_embeddings(const std::filesystem::path& path);
// "a<TAB>b" per line.
std::vector<std::pair<std::string, std::string>> read_pairs(const std::filesystem::path& path);

std::string alignment_tsv(const AlignmentReport& report);
std::string alignment_svg(const AlignmentReport& report);

}  // namespace forge
