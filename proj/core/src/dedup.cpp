// Copyright 2026 The Forge Authors
// SPDX-License-Identifier: Apache-2.0

#include "forge/dedup.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <numeric>
#include <string>

#include "forge/binary_io.hpp"
#include "forge/error.hpp"
#include "forge/hash.hpp"
#include "forge/parallel.hpp"
#include "forge/utf8.hpp"

namespace forge {

namespace {

constexpr std::string_view kMagic = "FGMH";
constexpr std::uint32_t kVersion = 1;

std::vector<std::uint64_t> hash_keys(const DedupParams& p) {
  std::uint64_t state = p.seed;
  std::vector<std::uint64_t> keys(p.num_hashes());
  for (auto& k : keys) k = splitmix64(state);
  return keys;
}

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  // The smaller index becomes the root so roots are cluster minima.
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent_[b] = a;
  }

 private:
  std::vector<std::size_t> parent_;
};

// Documents sharing a (band, digest) form a run once sorted. Without
// verification a run is linked through its first member; with it every
// accepted pair in the run becomes an edge.
template <typename Accept>
std::vector<std::pair<std::size_t, std::size_t>> band_edges(
    std::vector<std::vector<std::pair<std::uint64_t, std::size_t>>>& per_band, unsigned workers, bool exhaustive,
    Accept&& accept) {
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> edges(per_band.size());
  parallel_for(
      per_band.size(), workers,
      [&](std::size_t b) {
        auto& entries = per_band[b];
        std::sort(entries.begin(), entries.end());
        for (std::size_t i = 0; i < entries.size();) {
          std::size_t j = i + 1;
          while (j < entries.size() && entries[j].first == entries[i].first) ++j;
          for (std::size_t k = i + 1; k < j; ++k) {
            for (std::size_t h = i; h < k; ++h) {
              if (accept(entries[h].second, entries[k].second)) edges[b].emplace_back(entries[h].second, entries[k].second);
              if (!exhaustive) break;
            }
          }
          i = j;
        }
      },
      1);
  std::vector<std::pair<std::size_t, std::size_t>> all;
  for (auto& e : edges) all.insert(all.end(), e.begin(), e.end());
  return all;
}

DuplicateClusters collect(UnionFind& uf, const std::vector<std::uint64_t>& ordinals) {
  std::vector<std::vector<std::size_t>> groups(ordinals.size());
  for (std::size_t i = 0; i < ordinals.size(); ++i) groups[uf.find(i)].push_back(i);
  DuplicateClusters out;
  for (std::size_t root = 0; root < groups.size(); ++root) {
    if (groups[root].size() < 2) continue;
    DuplicateCluster c;
    for (auto i : groups[root]) c.members.push_back(ordinals[i]);
    std::sort(c.members.begin(), c.members.end());
    c.representative = c.members.front();
    out.drop.insert(out.drop.end(), c.members.begin() + 1, c.members.end());
    out.clusters.push_back(std::move(c));
  }
  std::sort(out.clusters.begin(), out.clusters.end(),
            [](const auto& a, const auto& b) { return a.representative < b.representative; });
  std::sort(out.drop.begin(), out.drop.end());
  return out;
}

}  // namespace

std::uint64_t DedupParams::fingerprint() const {
  const std::uint64_t fields[] = {num_bands, rows_per_band, shingle_order, seed};
  return xxh64_bytes(fields, sizeof(fields), 0x4647'4D48);
}

void DedupParams::validate() const {
  if (num_bands == 0 || rows_per_band == 0) throw ConfigError("dedup: bands and rows must be positive");
  if (num_hashes() > 4096) throw ConfigError("dedup: too many hash functions");
  if (shingle_order == 0) throw ConfigError("dedup: shingle order must be >= 1");
}

std::vector<std::uint64_t> shingle(std::string_view text, std::uint32_t order) {
  std::vector<std::uint64_t> out;
  if (order == 0) throw ConfigError("dedup: shingle order must be >= 1");
  const auto words = utf8::split_words(text);
  if (words.size() < order) return out;
  out.reserve(words.size() - order + 1);
  std::string buf;
  for (std::size_t i = 0; i + order <= words.size(); ++i) {
    buf.assign(words[i]);
    for (std::uint32_t k = 1; k < order; ++k) {
      buf.push_back(' ');
      buf.append(words[i + k]);
    }
    out.push_back(xxh64(buf));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

MinHashSignature minhash_signature(std::span<const std::uint64_t> shingles, const DedupParams& params,
                                   std::uint64_t doc) {
  params.validate();
  if (shingles.empty()) throw UnsignableError("document has no shingles");
  const auto keys = hash_keys(params);
  MinHashSignature sig{doc, params.fingerprint(), std::vector<std::uint64_t>(keys.size(), UINT64_MAX)};
  for (auto s : shingles) {
    for (std::size_t i = 0; i < keys.size(); ++i) sig.minima[i] = std::min(sig.minima[i], fmix64(s ^ keys[i]));
  }
  return sig;
}

double estimate_jaccard(const MinHashSignature& a, const MinHashSignature& b) {
  if (a.params_fingerprint != b.params_fingerprint || a.minima.size() != b.minima.size() || a.minima.empty())
    throw ConfigError("estimate_jaccard: signatures were produced with different parameters");
  std::size_t agree = 0;
  for (std::size_t i = 0; i < a.minima.size(); ++i) agree += a.minima[i] == b.minima[i];
  return static_cast<double>(agree) / static_cast<double>(a.minima.size());
}

std::vector<BandKey> lsh_band_keys(const MinHashSignature& sig, const DedupParams& params) {
  if (sig.params_fingerprint != params.fingerprint() || sig.minima.size() != params.num_hashes())
    throw ConfigError("lsh_band_keys: signature does not match parameters");
  std::vector<BandKey> keys(params.num_bands);
  for (std::uint32_t b = 0; b < params.num_bands; ++b) {
    keys[b] = {b, xxh64_bytes(sig.minima.data() + std::size_t{b} * params.rows_per_band,
                        params.rows_per_band * sizeof(std::uint64_t), b)};
  }
  return keys;
}

DuplicateClusters cluster_duplicates(std::span<const std::pair<std::uint64_t, BandKey>> keys, unsigned workers) {
  std::vector<std::uint64_t> ordinals;
  ordinals.reserve(keys.size());
  for (const auto& [doc, key] : keys) ordinals.push_back(doc);
  std::sort(ordinals.begin(), ordinals.end());
  ordinals.erase(std::unique(ordinals.begin(), ordinals.end()), ordinals.end());
  auto index_of = [&](std::uint64_t doc) {
    return static_cast<std::size_t>(std::lower_bound(ordinals.begin(), ordinals.end(), doc) - ordinals.begin());
  };

  std::uint32_t max_band = 0;
  for (const auto& [doc, key] : keys) max_band = std::max(max_band, key.band);
  std::vector<std::vector<std::pair<std::uint64_t, std::size_t>>> per_band(keys.empty() ? 0 : max_band + 1);
  for (const auto& [doc, key] : keys) per_band[key.band].emplace_back(key.digest, index_of(doc));

  UnionFind uf(ordinals.size());
  for (auto [a, b] : band_edges(per_band, workers, false, [](std::size_t, std::size_t) { return true; })) uf.unite(a, b);
  return collect(uf, ordinals);
}

DuplicateClusters cluster_signatures(std::span<const MinHashSignature> sigs, const DedupParams& params,
                                     std::optional<double> verify_threshold, unsigned workers) {
  params.validate();
  if (verify_threshold && (*verify_threshold < 0.0 || *verify_threshold > 1.0))
    throw ConfigError("dedup: verify threshold must lie in [0, 1]");

  std::vector<std::size_t> order(sigs.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return sigs[a].doc < sigs[b].doc; });
  std::vector<std::uint64_t> ordinals;
  ordinals.reserve(sigs.size());
  for (auto i : order) {
    if (!ordinals.empty() && ordinals.back() == sigs[i].doc)
      throw DataError("dedup: duplicate document ordinal " + std::to_string(sigs[i].doc));
    ordinals.push_back(sigs[i].doc);
  }

  std::vector<std::vector<BandKey>> keys(sigs.size());
  parallel_for(sigs.size(), workers, [&](std::size_t i) { keys[i] = lsh_band_keys(sigs[order[i]], params); });
  std::vector<std::vector<std::pair<std::uint64_t, std::size_t>>> per_band(params.num_bands);
  for (auto& band : per_band) band.reserve(sigs.size());
  for (std::size_t i = 0; i < sigs.size(); ++i)
    for (const auto& k : keys[i]) per_band[k.band].emplace_back(k.digest, i);

  UnionFind uf(sigs.size());
  auto accept = [&](std::size_t a, std::size_t b) {
    return !verify_threshold || estimate_jaccard(sigs[order[a]], sigs[order[b]]) >= *verify_threshold;
  };
  for (auto [a, b] : band_edges(per_band, workers, verify_threshold.has_value(), accept)) uf.unite(a, b);
  return collect(uf, ordinals);
}

void write_signatures(std::ostream& out, const DedupParams& params, std::span<const MinHashSignature> sigs) {
  params.validate();
  out.write(kMagic.data(), kMagic.size());
  binio::put<std::uint32_t>(out, kVersion);
  binio::put<std::uint32_t>(out, params.num_bands);
  binio::put<std::uint32_t>(out, params.rows_per_band);
  binio::put<std::uint32_t>(out, params.shingle_order);
  binio::put<std::uint64_t>(out, params.seed);
  binio::put<std::uint64_t>(out, sigs.size());
  for (const auto& s : sigs) {
    if (s.params_fingerprint != params.fingerprint() || s.minima.size() != params.num_hashes())
      throw ConfigError("write_signatures: signature does not match parameters");
    binio::put<std::uint64_t>(out, s.doc);
    out.write(reinterpret_cast<const char*>(s.minima.data()),
              static_cast<std::streamsize>(s.minima.size() * sizeof(std::uint64_t)));
  }
  if (!out) throw DataError("write_signatures: write failed");
}

std::pair<DedupParams, std::vector<MinHashSignature>> read_signatures(std::istream& in) {
  binio::expect_magic(in, kMagic, "signature");
  const auto version = binio::get<std::uint32_t>(in);
  if (version != kVersion) throw DataError("unsupported signature file version " + std::to_string(version));
  DedupParams p;
  p.num_bands = binio::get<std::uint32_t>(in);
  p.rows_per_band = binio::get<std::uint32_t>(in);
  p.shingle_order = binio::get<std::uint32_t>(in);
  p.seed = binio::get<std::uint64_t>(in);
  try {
    p.validate();
  } catch (const ConfigError& e) {
    throw DataError(std::string("corrupt signature file: ") + e.what());
  }
  const auto count = binio::get<std::uint64_t>(in);
  std::vector<MinHashSignature> sigs;
  sigs.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(count, 1u << 20)));
  const auto fp = p.fingerprint();
  for (std::uint64_t i = 0; i < count; ++i) {
    MinHashSignature s{binio::get<std::uint64_t>(in), fp, std::vector<std::uint64_t>(p.num_hashes())};
    if (!in.read(reinterpret_cast<char*>(s.minima.data()),
                 static_cast<std::streamsize>(s.minima.size() * sizeof(std::uint64_t))))
      throw DataError("truncated signature file");
    sigs.push_back(std::move(s));
  }
  return {p, std::move(sigs)};
}

void save_signatures(const std::filesystem::path& path, const DedupParams& params,
                     std::span<const MinHashSignature> sigs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  write_signatures(out, params, sigs);
}

std::pair<DedupParams, std::vector<MinHashSignature>> load_signatures(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return read_signatures(in);
}

std::vector<json> drop_list_records(const DuplicateClusters& clusters) {
  std::vector<json> out;
  out.reserve(clusters.drop.size());
  for (const auto& c : clusters.clusters)
    for (std::size_t i = 1; i < c.members.size(); ++i)
      out.push_back(json{{"ordinal", c.members[i]}, {"representative", c.representative}});
  std::sort(out.begin(), out.end(),
            [](const json& a, const json& b) { return a["ordinal"].get<std::uint64_t>() < b["ordinal"].get<std::uint64_t>(); });
  return out;
}

}  // namespace forge
