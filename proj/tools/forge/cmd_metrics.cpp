// Copyright 2026 The Forge Authors
// SPDX-License-Identifier: Apache-2.0

#include <fstream>
#include <iostream>

#include "commands.hpp"
#include "forge/error.hpp"
#include "forge/metrics.hpp"

namespace forge::cli {

void register_metrics(CLI::App& app) {
  auto* cmd = app.add_subcommand("metrics", "Evaluation metrics and parameter budgets");
  cmd->require_subcommand(1);
  struct Opts {
    std::optional<double> ppl, mean_nll;
    std::string nll_file, dims, init = "mean_of_existing", embeddings, pairs, out, svg;
    std::uint64_t rank = 4, new_tokens = 0;
    double alpha = 32.0;
  };
  auto o = std::make_shared<Opts>();

  auto* ppl = cmd->add_subcommand("ppl", "Perplexity and mean token probability");
  auto* p1 = ppl->add_option("--ppl", o->ppl, "Perplexity");
  auto* p2 = ppl->add_option("--mean-nll", o->mean_nll, "Mean negative log-likelihood (nats)");
  auto* p3 = ppl->add_option("--nll-file", o->nll_file, "Per-token NLL values, one per line");
  p1->excludes(p2, p3);
  p2->excludes(p3);
  ppl->callback([o, p3] {
    double perplexity = 0;
    if (o->ppl) {
      perplexity = *o->ppl;
    } else if (o->mean_nll) {
      perplexity = perplexity_from_mean_nll(*o->mean_nll);
    } else if (p3->count() > 0) {
      std::ifstream in(o->nll_file);
      if (!in) throw DataError("cannot read " + o->nll_file);
      std::vector<double> values;
      for (double v; in >> v;) values.push_back(v);
      if (!in.eof()) throw DataError(o->nll_file + ": not a list of numbers");
      perplexity = perplexity_from_nll(values);
    } else {
      throw ConfigError("ppl needs --ppl, --mean-nll or --nll-file");
    }
    print_json({{"perplexity", perplexity}, {"mean_token_probability", mean_token_probability(perplexity)}});
  });

  auto* budget = cmd->add_subcommand("budget", "LoRA and embedding-resize parameter counts");
  budget->add_option("--dims", o->dims, "Model dimensions JSON (default: Phi-3-mini)");
  budget->add_option("--rank", o->rank, "LoRA rank")->check(CLI::PositiveNumber);
  budget->add_option("--alpha", o->alpha, "LoRA alpha");
  budget->add_option("--new-tokens", o->new_tokens, "Tokens added to the vocabulary");
  budget->add_option("--init", o->init, "New embedding row initialization")
      ->check(CLI::IsMember({"mean_of_existing", "gaussian", "zero"}));
  budget->callback([o] {
    ModelDims dims = o->dims.empty() ? phi3_mini_dims() : model_dims_from_json(parse_json_file(o->dims));
    if (o->new_tokens > 0) dims.new_tokens = o->new_tokens;
    const EmbeddingInit init = o->init == "gaussian" ? EmbeddingInit::gaussian
                               : o->init == "zero"   ? EmbeddingInit::zero
                                                     : EmbeddingInit::mean_of_existing;
    print_json(budget_report(dims, o->rank, o->alpha, init));
  });

  auto* align = cmd->add_subcommand("align", "Cross-lingual embedding cosine matrix");
  align->add_option("--embeddings", o->embeddings, "word<TAB>v1 v2 ... per line")->required();
  align->add_option("--pairs", o->pairs, "a<TAB>b per line")->required();
  align->add_option("--out", o->out, "Matrix TSV (default: stdout)");
  align->add_option("--svg", o->svg, "Heatmap SVG");
  align->callback([o] {
    const auto report = alignment_matrix(read_embeddings(o->embeddings), read_pairs(o->pairs));
    const auto tsv = alignment_tsv(report);
    if (o->out.empty())
      std::cout << tsv;
    else
      write_file(o->out, tsv);
    if (!o->svg.empty()) write_file(o->svg, alignment_svg(report));
  });
}

}  // namespace forge::cli
