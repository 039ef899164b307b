// Copyright 2026 The Forge Authors
// SPDX-License-Identifier: Apache-2.0

#include "forge/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "forge/error.hpp"

namespace forge {

double mean_token_probability(double perplexity) {
  if (!std::isfinite(perplexity) || perplexity < 1.0)
    throw DomainError("perplexity must be a finite value >= 1");
  return 1.0 / perplexity;
}

double perplexity_from_mean_nll(double mean_nll) {
  if (!std::isfinite(mean_nll) || mean_nll < 0.0) throw DomainError("mean NLL must be a finite value >= 0");
  return std::exp(mean_nll);
}

double perplexity_from_nll(std::span<const double> nll) {
  if (nll.empty()) throw DomainError("empty NLL stream");
  double sum = 0.0;
  for (double x : nll) sum += x;
  return perplexity_from_mean_nll(sum / static_cast<double>(nll.size()));
}

void LoraSpec::validate() const {
  if (rank < 1) throw ConfigError("LoRA rank must be >= 1");
  for (const auto& t : targets)
    if (t.d_in < 1 || t.d_out < 1 || t.layers < 1)
      throw ConfigError("LoRA target '" + t.name + "' has a zero dimension");
}

std::uint64_t lora_param_count(const LoraSpec& spec) {
  spec.validate();
  std::uint64_t total = 0;
  for (const auto& t : spec.targets) total += t.layers * spec.rank * (t.d_in + t.d_out);
  return total;
}

void ModelDims::validate() const {
  if (hidden < 1 || layers < 1 || base_vocab < 1) throw ConfigError("model dims must be positive");
  for (const auto& m : matrices)
    if (m.d_in < 1 || m.d_out < 1) throw ConfigError("matrix '" + m.name + "' has a zero dimension");
}

ModelDims phi3_mini_dims() {
  ModelDims d;
  d.hidden = 3072;
  d.layers = 32;
  d.base_vocab = 32064;
  d.matrices = {{"qkv_proj", 3072, 9216, 1},
                {"o_proj", 3072, 3072, 1},
                {"gate_up_proj", 3072, 16384, 1},
                {"down_proj", 8192, 3072, 1}};
  return d;
}

ModelDims model_dims_from_json(const json& j) {
  ModelDims d = phi3_mini_dims();
  try {
    d.hidden = j.value("hidden", d.hidden);
    d.layers = j.value("layers", d.layers);
    d.base_vocab = j.value("base_vocab", d.base_vocab);
    d.new_tokens = j.value("new_tokens", d.new_tokens);
    d.head_tied = j.value("head_tied", d.head_tied);
    if (j.contains("matrices")) {
      d.matrices.clear();
      for (const auto& m : j["matrices"])
        d.matrices.push_back({m.at("name").get<std::string>(), m.at("d_in").get<std::uint64_t>(),
                              m.at("d_out").get<std::uint64_t>(), 1});
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("model dims: ") + e.what());
  }
  d.validate();
  return d;
}

LoraSpec lora_spec_for(const ModelDims& dims, std::uint64_t rank, double alpha) {
  dims.validate();
  LoraSpec spec{rank, alpha, {}};
  for (auto m : dims.matrices) {
    m.layers = dims.layers;
    spec.targets.push_back(std::move(m));
  }
  return spec;
}

std::uint64_t resize_param_count(const ModelDims& dims, ResizeScope scope) {
  dims.validate();
  const std::uint64_t rows = scope == ResizeScope::new_rows_only ? dims.new_tokens : dims.base_vocab + dims.new_tokens;
  return rows * dims.hidden * (dims.head_tied ? 1 : 2);
}

std::string_view to_string(EmbeddingInit init) {
  switch (init) {
    case EmbeddingInit::mean_of_existing: return "mean_of_existing";
    case EmbeddingInit::gaussian: return "gaussian";
    case EmbeddingInit::zero: return "zero";
  }
  return "?";
}

json budget_report(const ModelDims& dims, std::uint64_t rank, double alpha, EmbeddingInit init) {
  const auto lora = lora_param_count(lora_spec_for(dims, rank, alpha));
  const auto new_rows = resize_param_count(dims, ResizeScope::new_rows_only);
  const auto full = resize_param_count(dims, ResizeScope::full_embed_and_head);
  json per_matrix = json::array();
  for (const auto& m : dims.matrices)
    per_matrix.push_back({{"name", m.name}, {"d_in", m.d_in}, {"d_out", m.d_out},
                          {"lora_params", dims.layers * rank * (m.d_in + m.d_out)}});
  return json{{"rank", rank},
              {"alpha", alpha},
              {"layers", dims.layers},
              {"hidden", dims.hidden},
              {"base_vocab", dims.base_vocab},
              {"new_tokens", dims.new_tokens},
              {"head_tied", dims.head_tied},
              {"lora_params", lora},
              {"lora_per_matrix", per_matrix},
              {"resize_new_rows_params", new_rows},
              {"resize_full_params", full},
              {"embedding_init", to_string(init)}};
}

AlignmentReport alignment_matrix(const EmbeddingTable& embeddings,
                                 const std::vector<std::pair<std::string, std::string>>& pairs) {
  std::size_t dim = 0;
  auto lookup = [&](const std::string& token) -> const std::vector<double>& {
    auto it = embeddings.find(token);
    if (it == embeddings.end()) throw DataError("no embedding for token '" + token + "'");
    if (dim == 0) dim = it->second.size();
    if (it->second.size() != dim || dim == 0) throw DataError("embedding for '" + token + "' has the wrong dimension");
    double norm = 0.0;
    for (double x : it->second) norm += x * x;
    if (norm == 0.0) throw DataError("embedding for '" + token + "' is a zero vector");
    return it->second;
  };
  auto unit = [&](const std::string& token) {
    auto v = lookup(token);
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
    return v;
  };

  AlignmentReport r;
  std::vector<std::vector<double>> a, b;
  for (const auto& [x, y] : pairs) {
    r.rows.push_back(x);
    r.cols.push_back(y);
    a.push_back(unit(x));
    b.push_back(unit(y));
  }
  r.cosine.assign(pairs.size(), std::vector<double>(pairs.size()));
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    for (std::size_t j = 0; j < pairs.size(); ++j) {
      double dot = 0.0;
      for (std::size_t k = 0; k < dim; ++k) dot += a[i][k] * b[j][k];
      r.cosine[i][j] = std::clamp(dot, -1.0, 1.0);
    }
  }
  return r;
}

EmbeddingTable read_embeddings(const std::filesystem::path& path) {
  EmbeddingTable table;
  std::istringstream in(read_file(path));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected token<TAB>vector");
    std::istringstream vs(line.substr(tab + 1));
    std::vector<double> v;
    double x;
    while (vs >> x) v.push_back(x);
    if (!vs.eof()) throw DataError(path.string() + ":" + std::to_string(line_no) + ": bad number");
    table[line.substr(0, tab)] = std::move(v);
  }
  return table;
}

std::vector<std::pair<std::string, std::string>> read_pairs(const std::filesystem::path& path) {
  std::vector<std::pair<std::string, std::string>> pairs;
  std::istringstream in(read_file(path));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected a<TAB>b");
    pairs.emplace_back(line.substr(0, tab), line.substr(tab + 1));
  }
  return pairs;
}

std::string alignment_tsv(const AlignmentReport& r) {
  std::string out = "token";
  for (const auto& c : r.cols) out += "\t" + c;
  out += '\n';
  char buf[32];
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    out += r.rows[i];
    for (double v : r.cosine[i]) {
      std::snprintf(buf, sizeof(buf), "\t%.6f", v);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

namespace {

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

}  // namespace

std::string alignment_svg(const AlignmentReport& r) {
  const int cell = 40;
  const int margin = 120;
  const int n = static_cast<int>(r.rows.size());
  const int size = margin + n * cell + 10;
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\"" << size
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  for (int i = 0; i < n; ++i) {
    out << "<text x=\"" << margin - 6 << "\" y=\"" << margin + i * cell + cell / 2 + 4
        << "\" text-anchor=\"end\">" << xml_escape(r.rows[i]) << "</text>\n";
    out << "<text transform=\"translate(" << margin + i * cell + cell / 2 << "," << margin - 6
        << ") rotate(-45)\">" << xml_escape(r.cols[i]) << "</text>\n";
    for (int j = 0; j < n; ++j) {
      // Blue for negative, red for positive.
      const double v = r.cosine[i][j];
      const int shade = static_cast<int>(255 * (1.0 - std::abs(v)));
      char color[16];
      std::snprintf(color, sizeof(color), v >= 0 ? "#ff%02x%02x" : "#%02x%02xff", shade, shade);
      char val[16];
      std::snprintf(val, sizeof(val), "%.2f", v);
      out << "<rect x=\"" << margin + j * cell << "\" y=\"" << margin + i * cell << "\" width=\"" << cell
          << "\" height=\"" << cell << "\" fill=\"" << color << "\"/>"
          << "<text x=\"" << margin + j * cell + cell / 2 << "\" y=\"" << margin + i * cell + cell / 2 + 4
          << "\" text-anchor=\"middle\" font-size=\"10\">" << val << "</text>\n";
    }
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace forge
