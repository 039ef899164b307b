// Copyright 2026 The Forge Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "forge/error.hpp"
#include "forge/metrics.hpp"
#include "testkit.hpp"

namespace forge {
namespace {

TEST(Perplexity, MeanTokenProbability) {
  EXPECT_NEAR(mean_token_probability(2.45), 0.40816, 1e-4);
  EXPECT_DOUBLE_EQ(mean_token_probability(1.0), 1.0);
  EXPECT_DOUBLE_EQ(mean_token_probability(4.0), 0.25);
  EXPECT_THROW(mean_token_probability(0.99), DomainError);
  EXPECT_THROW(mean_token_probability(std::numeric_limits<double>::infinity()), DomainError);
  EXPECT_THROW(mean_token_probability(std::nan("")), DomainError);
}

TEST(Perplexity, FromNll) {
  EXPECT_DOUBLE_EQ(perplexity_from_mean_nll(0.0), 1.0);
  EXPECT_NEAR(perplexity_from_mean_nll(std::log(2.45)), 2.45, 1e-12);
  const std::vector<double> nll = {1.0, 2.0, 3.0};
  EXPECT_NEAR(perplexity_from_nll(nll), std::exp(2.0), 1e-12);
  EXPECT_THROW(perplexity_from_nll(std::span<const double>{}), DomainError);
  EXPECT_THROW(perplexity_from_mean_nll(-0.1), DomainError);
}

TEST(Lora, Phi3RankFourCount) {
  const auto dims = phi3_mini_dims();
  // per layer: (3072+9216) + (3072+3072) + (3072+16384) + (8192+3072) = 49152
  const std::uint64_t expected = 32ull * 4 * 49152;
  EXPECT_EQ(expected, 6291456u);
  EXPECT_EQ(lora_param_count(lora_spec_for(dims, 4, 32)), expected);
  EXPECT_NEAR(static_cast<double>(expected), 6e6, 0.1 * 6e6);
}

TEST(Lora, LinearInRankAndIndependentOfAlpha) {
  const auto dims = phi3_mini_dims();
  const auto c1 = lora_param_count(lora_spec_for(dims, 1, 8));
  for (std::uint64_t r : {2, 4, 8, 16, 64}) EXPECT_EQ(lora_param_count(lora_spec_for(dims, r, 8)), r * c1);
  EXPECT_EQ(lora_param_count(lora_spec_for(dims, 64, 1)), 16 * lora_param_count(lora_spec_for(dims, 4, 99)));
}

TEST(Lora, Validation) {
  EXPECT_THROW(lora_param_count(LoraSpec{0, 1, {}}), ConfigError);
  EXPECT_THROW(lora_param_count(LoraSpec{1, 1, {{"m", 0, 4, 1}}}), ConfigError);
  EXPECT_EQ(lora_param_count(LoraSpec{2, 1, {{"m", 3, 5, 7}}}), 7u * 2 * 8);
}

TEST(Resize, RowsTimesHiddenPerMatrix) {
  auto dims = phi3_mini_dims();
  dims.new_tokens = 4921;
  EXPECT_EQ(resize_param_count(dims, ResizeScope::new_rows_only), 4921ull * 3072 * 2);
  EXPECT_EQ(resize_param_count(dims, ResizeScope::full_embed_and_head), (32064ull + 4921) * 3072 * 2);
  dims.head_tied = true;
  EXPECT_EQ(resize_param_count(dims, ResizeScope::new_rows_only), 4921ull * 3072);
}

TEST(Budget, ReportFields) {
  auto dims = phi3_mini_dims();
  dims.new_tokens = 4921;
  const auto r = budget_report(dims, 4, 32, EmbeddingInit::mean_of_existing);
  EXPECT_EQ(r["lora_params"], 6291456);
  EXPECT_EQ(r["resize_new_rows_params"], 30234624);
  EXPECT_EQ(r["resize_full_params"], 227235840);
  EXPECT_EQ(r["embedding_init"], "mean_of_existing");
  std::uint64_t sum = 0;
  for (const auto& m : r["lora_per_matrix"]) sum += m["lora_params"].get<std::uint64_t>();
  EXPECT_EQ(sum, 6291456u);
}

TEST(Budget, DimsFromJson) {
  const auto d = model_dims_from_json(json::parse(R"({"hidden": 8, "layers": 2, "base_vocab": 100,
      "matrices": [{"name": "q", "d_in": 8, "d_out": 8}]})"));
  EXPECT_EQ(lora_param_count(lora_spec_for(d, 3, 1)), 2u * 3 * 16);
  EXPECT_THROW(model_dims_from_json(json::parse(R"({"hidden": 0})")), ConfigError);
  EXPECT_THROW(model_dims_from_json(json::parse(R"({"matrices": [{"name": "q"}]})")), ConfigError);
}

TEST(Alignment, CosineOracle) {
  const EmbeddingTable emb = {{"cat", {1, 0}}, {"gorbe", {2, 0}}, {"dog", {0, 3}}, {"sag", {1, 1}}};
  const auto r = alignment_matrix(emb, {{"cat", "gorbe"}, {"dog", "sag"}});
  EXPECT_NEAR(r.cosine[0][0], 1.0, 1e-12);
  EXPECT_NEAR(r.cosine[0][1], 1.0 / std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(r.cosine[1][0], 0.0, 1e-12);
  EXPECT_NEAR(r.cosine[1][1], 1.0 / std::sqrt(2.0), 1e-12);
  EXPECT_EQ(r.rows, (std::vector<std::string>{"cat", "dog"}));
  EXPECT_EQ(r.cols, (std::vector<std::string>{"gorbe", "sag"}));
}

TEST(Alignment, RandomVectorsStayInRange) {
  testkit::Rng rng(4);
  std::normal_distribution<double> g;
  EmbeddingTable emb;
  std::vector<std::pair<std::string, std::string>> pairs;
  for (int i = 0; i < 12; ++i) {
    for (auto side : {"a", "b"}) {
      std::vector<double> v(16);
      for (auto& x : v) x = g(rng);
      emb[side + std::to_string(i)] = v;
    }
    pairs.emplace_back("a" + std::to_string(i), "b" + std::to_string(i));
  }
  const auto r = alignment_matrix(emb, pairs);
  for (const auto& row : r.cosine)
    for (double v : row) {
      EXPECT_GE(v, -1.0);
      EXPECT_LE(v, 1.0);
    }
}

TEST(Alignment, Errors) {
  EXPECT_THROW(alignment_matrix({{"a", {1}}}, {{"a", "b"}}), DataError);
  EXPECT_THROW(alignment_matrix({{"a", {1}}, {"b", {1, 2}}}, {{"a", "b"}}), DataError);
  EXPECT_THROW(alignment_matrix({{"a", {0, 0}}, {"b", {1, 2}}}, {{"a", "b"}}), DataError);
}

TEST(Alignment, TsvSvgAndFiles) {
  const auto dir = testkit::scratch_dir("align");
  write_file(dir / "e.tsv", "# comment\nx\t1 0\ny\t0.5 0.5\n");
  write_file(dir / "p.tsv", "x\ty\n");
  const auto r = alignment_matrix(read_embeddings(dir / "e.tsv"), read_pairs(dir / "p.tsv"));
  EXPECT_EQ(alignment_tsv(r), "token\ty\nx\t0.707107\n");
  const auto svg = alignment_svg(r);
  EXPECT_NE(svg.find("<svg"), std::string::npos);
  EXPECT_NE(svg.find("0.71"), std::string::npos);
  EXPECT_EQ(alignment_svg(alignment_matrix({{"<a>", {1}}, {"b", {1}}}, {{"<a>", "b"}})).find("<a>"),
            std::string::npos);
  write_file(dir / "bad.tsv", "x 1 0\n");
  EXPECT_THROW(read_embeddings(dir / "bad.tsv"), DataError);
  write_file(dir / "bad2.tsv", "x\t1 zz\n");
  EXPECT_THROW(read_embeddings(dir / "bad2.tsv"), DataError);
}

}  // namespace
}  // namespace forge
