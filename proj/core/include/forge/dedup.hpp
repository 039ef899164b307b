// Copyright 2026 The Forge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "forge/document.hpp"

namespace forge {

struct DedupParams {
  std::uint32_t num_bands = 10;
  std::uint32_t rows_per_band = 6;
  std::uint32_t shingle_order = 2;  // words
  std::uint64_t seed = 0;

  std::uint32_t num_hashes() const { return num_bands * rows_per_band; }
  // Identifies signatures that are comparable with each other.
  std::uint64_t fingerprint() const;
  void validate() const;
  bool operator==(const DedupParams&) const = default;
};

// Sorted, de-duplicated 64-bit hashes of consecutive word n-grams. Words are
// whitespace-delimited; an n-gram hashes its words joined by one space.
std::vector<std::uint64_t> shingle(std::string_view text, std::uint32_t order);

struct MinHashSignature {
  std::uint64_t doc = 0;  // document ordinal
  std::uint64_t params_fingerprint = 0;
  std::vector<std::uint64_t> minima;
};

// Throws UnsignableError on an empty shingle set.
MinHashSignature minhash_signature(std::span<const std::uint64_t> shingles, const DedupParams& params,
                                   std::uint64_t doc = 0);

// Fraction of agreeing positions. Throws ConfigError when the signatures come
// from different parameters.
double estimate_jaccard(const MinHashSignature& a, const MinHashSignature& b);

struct BandKey {
  std::uint32_t band = 0;
  std::uint64_t digest = 0;
  auto operator<=>(const BandKey&) const = default;
};

std::vector<BandKey> lsh_band_keys(const MinHashSignature& sig, const DedupParams& params);

struct DuplicateCluster {
  std::uint64_t representative = 0;
  std::vector<std::uint64_t> members;  // sorted, includes the representative
};

struct DuplicateClusters {
  std::vector<DuplicateCluster> clusters;  // ordered by representative
  std::vector<std::uint64_t> drop;         // sorted
};

// Unions documents that share any band key. Keys are grouped per band, so the
// grouping work is split across `workers`; the result does not depend on
// worker count or on input order.
DuplicateClusters cluster_duplicates(std::span<const std::pair<std::uint64_t, BandKey>> keys, unsigned workers = 1);

// Signs-to-clusters convenience. With `verify_threshold`, a band collision
// only links two documents whose estimated Jaccard reaches the threshold.
DuplicateClusters cluster_signatures(std::span<const MinHashSignature> sigs, const DedupParams& params,
                                     std::optional<double> verify_threshold = std::nullopt, unsigned workers = 1);

// Binary signature file: "FGMH", version, params, count, then fixed-width
// records of (ordinal, minima[num_hashes]).
void write_signatures(std::ostream& out, const DedupParams& params, std::span<const MinHashSignature> sigs);
std::pair<DedupParams, std::vector<MinHashSignature>> read_signatures(std::istream& in);
void save_signatures(const std::filesystem::path& path, const DedupParams& params,
                     std::span<const MinHashSignature> sigs);
std::pair<DedupParams, std::vector<MinHashSignature>> load_signatures(const std::filesystem::path& path);

// One JSON record per dropped document: {"ordinal", "representative"}.
std::vector<json> drop_list_records(const DuplicateClusters& clusters);

}  // namespace forge
