// Copyright 2026 The Forge Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "forge/dedup.hpp"
#include "forge/error.hpp"
#include "forge/hash.hpp"
#include "testkit.hpp"

namespace forge {
namespace {

TEST(Shingle, MatchesOracle) {
  const std::string text = "a b  c\nd a b";
  std::set<std::uint64_t> expect = {xxh64("a b"), xxh64("b c"), xxh64("c d"), xxh64("d a")};
  const auto got = shingle(text, 2);
  EXPECT_EQ(got, std::vector<std::uint64_t>(expect.begin(), expect.end()));
  EXPECT_EQ(shingle(text, 3).size(), 4u);
  EXPECT_TRUE(shingle("one", 2).empty());
  EXPECT_THROW(shingle("x", 0), ConfigError);
}

TEST(MinHash, MatchesOracle) {
  DedupParams p;
  p.seed = 123;
  const std::vector<std::uint64_t> shingles = {1, 5, 99, 1234567};
  const auto sig = minhash_signature(shingles, p, 7);
  std::uint64_t state = 123;
  ASSERT_EQ(sig.minima.size(), 60u);
  for (std::size_t i = 0; i < 60; ++i) {
    const auto k = splitmix64(state);
    std::uint64_t m = UINT64_MAX;
    for (auto s : shingles) m = std::min(m, fmix64(s ^ k));
    EXPECT_EQ(sig.minima[i], m);
  }
  EXPECT_EQ(sig.doc, 7u);
  EXPECT_EQ(sig.params_fingerprint, p.fingerprint());
}

TEST(MinHash, EmptySetIsUnsignable) {
  EXPECT_THROW(minhash_signature({}, DedupParams{}), UnsignableError);
}

TEST(MinHash, OrderAndMultiplicityIndependent) {
  DedupParams p;
  const std::vector<std::uint64_t> a = {3, 1, 2}, b = {1, 2, 3, 3};
  EXPECT_EQ(minhash_signature(a, p).minima, minhash_signature(b, p).minima);
}

TEST(MinHash, EstimatorTracksJaccard) {
  DedupParams p;
  p.num_bands = 64;
  p.rows_per_band = 4;  // 256 hashes for a tight estimate
  for (double j : {0.1, 0.5, 0.9}) {
    // |A ∩ B| = s, |A ∪ B| = 1000
    const auto s = static_cast<std::uint64_t>(j * 1000);
    std::vector<std::uint64_t> a, b;
    for (std::uint64_t i = 0; i < 1000; ++i) {
      if (i < s) {
        a.push_back(i);
        b.push_back(i);
      } else if (i % 2) {
        a.push_back(i);
      } else {
        b.push_back(i);
      }
    }
    EXPECT_NEAR(estimate_jaccard(minhash_signature(a, p), minhash_signature(b, p)), j, 0.1);
  }
}

TEST(MinHash, MismatchedParamsRejected) {
  DedupParams p, q;
  q.seed = 1;
  const std::vector<std::uint64_t> s = {1, 2};
  EXPECT_THROW(estimate_jaccard(minhash_signature(s, p), minhash_signature(s, q)), ConfigError);
  EXPECT_THROW(lsh_band_keys(minhash_signature(s, p), q), ConfigError);
}

TEST(Lsh, BandKeysMatchOracle) {
  DedupParams p;
  const std::vector<std::uint64_t> s = {10, 20, 30};
  const auto sig = minhash_signature(s, p);
  const auto keys = lsh_band_keys(sig, p);
  ASSERT_EQ(keys.size(), 10u);
  for (std::uint32_t b = 0; b < 10; ++b) {
    EXPECT_EQ(keys[b].band, b);
    EXPECT_EQ(keys[b].digest, xxh64_bytes(sig.minima.data() + b * 6, 6 * sizeof(std::uint64_t), b));
  }
}

TEST(Cluster, UnionFindIsTransitiveAndRootedAtMinimum) {
  // 9~4 on band 0, 4~7 on band 1, 2 alone, 5~6 on band 3
  std::vector<std::pair<std::uint64_t, BandKey>> keys = {
      {9, {0, 100}}, {4, {0, 100}}, {4, {1, 7}}, {7, {1, 7}}, {2, {0, 55}}, {5, {3, 1}}, {6, {3, 1}}, {7, {0, 9}}};
  const auto c = cluster_duplicates(keys);
  ASSERT_EQ(c.clusters.size(), 2u);
  EXPECT_EQ(c.clusters[0].representative, 4u);
  EXPECT_EQ(c.clusters[0].members, (std::vector<std::uint64_t>{4, 7, 9}));
  EXPECT_EQ(c.clusters[1].members, (std::vector<std::uint64_t>{5, 6}));
  EXPECT_EQ(c.drop, (std::vector<std::uint64_t>{6, 7, 9}));
  const auto recs = drop_list_records(c);
  ASSERT_EQ(recs.size(), 3u);
  EXPECT_EQ(recs[0], (json{{"ordinal", 6}, {"representative", 5}}));
  EXPECT_EQ(recs[2], (json{{"ordinal", 9}, {"representative", 4}}));
}

TEST(Cluster, SameDigestOnDifferentBandsDoesNotCollide) {
  std::vector<std::pair<std::uint64_t, BandKey>> keys = {{1, {0, 42}}, {2, {1, 42}}};
  EXPECT_TRUE(cluster_duplicates(keys).clusters.empty());
}

std::vector<MinHashSignature> corpus_signatures(const DedupParams& p, std::size_t n, std::uint64_t seed) {
  testkit::Rng rng(seed);
  const auto lex = testkit::persian_lexicon(2000);
  std::vector<std::string> texts;
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0 && rng() % 4 == 0) {
      texts.push_back(texts[rng() % texts.size()] + (rng() % 2 ? " اضافه" : ""));
    } else {
      texts.push_back(testkit::persian_text(rng, lex, 80));
    }
  }
  std::vector<MinHashSignature> sigs;
  for (std::size_t i = 0; i < n; ++i) sigs.push_back(minhash_signature(shingle(texts[i], 2), p, i * 3 + 1));
  return sigs;
}

TEST(Cluster, ExactAndNearCopiesFoundDeterministically) {
  DedupParams p;
  auto sigs = corpus_signatures(p, 400, 5);
  const auto one = cluster_signatures(sigs, p, std::nullopt, 1);
  EXPECT_GT(one.drop.size(), 50u);
  for (unsigned w : {2u, 4u, 8u}) {
    const auto other = cluster_signatures(sigs, p, std::nullopt, w);
    EXPECT_EQ(other.drop, one.drop);
    EXPECT_EQ(drop_list_records(other), drop_list_records(one));
  }
  // input order does not matter
  std::reverse(sigs.begin(), sigs.end());
  EXPECT_EQ(cluster_signatures(sigs, p).drop, one.drop);
  // representatives are never dropped
  for (const auto& c : one.clusters)
    EXPECT_FALSE(std::binary_search(one.drop.begin(), one.drop.end(), c.representative));
}

TEST(Cluster, VerificationOnlyRemovesLinks) {
  DedupParams p;
  const auto sigs = corpus_signatures(p, 300, 9);
  const auto loose = cluster_signatures(sigs, p);
  const auto strict = cluster_signatures(sigs, p, 0.99);
  EXPECT_LE(strict.drop.size(), loose.drop.size());
  EXPECT_TRUE(std::includes(loose.drop.begin(), loose.drop.end(), strict.drop.begin(), strict.drop.end()));
  EXPECT_EQ(cluster_signatures(sigs, p, 0.0).drop, loose.drop);
  EXPECT_THROW(cluster_signatures(sigs, p, 1.5), ConfigError);
}

TEST(Cluster, DuplicateOrdinalIsDataError) {
  DedupParams p;
  const std::vector<std::uint64_t> s = {1};
  std::vector<MinHashSignature> sigs = {minhash_signature(s, p, 3), minhash_signature(s, p, 3)};
  EXPECT_THROW(cluster_signatures(sigs, p), DataError);
}

TEST(SignatureFile, RoundTrip) {
  DedupParams p;
  p.seed = 77;
  const auto sigs = corpus_signatures(p, 20, 1);
  std::stringstream buf;
  write_signatures(buf, p, sigs);
  EXPECT_EQ(buf.str().substr(0, 4), "FGMH");
  EXPECT_EQ(buf.str().size(), 4 + 4 + 12 + 8 + 8 + 20 * (8 + 60 * 8));
  const auto [q, back] = read_signatures(buf);
  EXPECT_EQ(q, p);
  ASSERT_EQ(back.size(), sigs.size());
  for (std::size_t i = 0; i < sigs.size(); ++i) {
    EXPECT_EQ(back[i].doc, sigs[i].doc);
    EXPECT_EQ(back[i].minima, sigs[i].minima);
    EXPECT_EQ(back[i].params_fingerprint, sigs[i].params_fingerprint);
  }
}

TEST(SignatureFile, RejectsCorruptionAndMismatch) {
  DedupParams p;
  const auto sigs = corpus_signatures(p, 3, 1);
  std::stringstream buf;
  write_signatures(buf, p, sigs);
  const auto bytes = buf.str();
  std::stringstream truncated(bytes.substr(0, bytes.size() - 5));
  EXPECT_THROW(read_signatures(truncated), DataError);
  std::stringstream magic("XXXX" + bytes.substr(4));
  EXPECT_THROW(read_signatures(magic), DataError);
  DedupParams other;
  other.seed = 5;
  std::stringstream out;
  EXPECT_THROW(write_signatures(out, other, sigs), ConfigError);
}

TEST(DedupParams, Validation) {
  DedupParams p;
  EXPECT_EQ(p.num_hashes(), 60u);
  p.num_bands = 0;
  EXPECT_THROW(p.validate(), ConfigError);
  DedupParams a, b;
  b.seed = 1;
  EXPECT_NE(a.fingerprint(), b.fingerprint());
}

}  // namespace
}  // namespace forge
