// Copyright 2026 The Forge Authors
// SPDX-License-Identifier: Apache-2.0

#include <fstream>
#include <iostream>

#include "commands.hpp"
#include "forge/bpe.hpp"
#include "forge/error.hpp"
#include "forge/parallel.hpp"

namespace forge::cli {
namespace {

std::vector<std::string> doc_texts(const std::string& path) {
  std::vector<std::string> texts;
  for (auto& d : read_docs(path)) texts.push_back(std::move(d.text));
  return texts;
}

}  // namespace

void register_tok(CLI::App& app) {
  auto* cmd = app.add_subcommand("tok", "Byte-pair tokenizer training and vocabulary extension");
  cmd->require_subcommand(1);
  struct Opts {
    std::string in, out, base, trained, tokenizer, text;
    BpeTrainOptions train;
    unsigned workers = 1;
  };
  auto o = std::make_shared<Opts>();

  auto* train = cmd->add_subcommand("train", "Train a BPE model");
  train->add_option("--in", o->in, "Training documents")->required();
  train->add_option("--out", o->out, "Model file")->required();
  train->add_option("--vocab-size", o->train.vocab_size, "Target vocabulary size");
  train->add_flag("--byte-fallback", o->train.byte_fallback, "Reserve the 256 byte tokens");
  train->add_option("--special", o->train.special_tokens, "Special token (repeatable)");
  train->add_option("--min-pair-count", o->train.min_pair_count, "Stop below this pair count");
  train->add_option("--workers", o->train.workers, "Worker threads")->check(CLI::PositiveNumber);
  train->callback([o] {
    auto model = train_bpe(doc_texts(o->in), o->train);
    save_model(o->out, model);
    print_json({{"vocab_size", model.size()}, {"merges", model.merges.size()}, {"alphabet", model.alphabet.size()}});
  });

  auto* extend = cmd->add_subcommand("extend", "Append a trained vocabulary to a frozen base");
  extend->add_option("--base", o->base, "Base model")->required();
  extend->add_option("--trained", o->trained, "Newly trained model")->required();
  extend->add_option("--out", o->out, "Extended tokenizer file")->required();
  extend->callback([o] {
    auto ext = extend_vocab(load_model(o->base), load_model(o->trained));
    save_extended(o->out, ext);
    print_json({{"base_size", ext.base.size()},
                {"net_new", ext.net_new_count},
                {"overlap", ext.overlap_count},
                {"fallback_tokens_added", ext.fallback_tokens_added},
                {"extended_size", ext.size()}});
  });

  auto* enc = cmd->add_subcommand("encode", "Encode text or documents");
  enc->add_option("--tokenizer", o->tokenizer, "Model or extended tokenizer file")->required();
  auto* in_opt = enc->add_option("--in", o->in, "Documents to encode");
  auto* text_opt = enc->add_option("--text", o->text, "Encode one string and print the ids");
  in_opt->excludes(text_opt);
  enc->add_option("--out", o->out, "Token records (default: stdout)");
  enc->add_option("--workers", o->workers, "Worker threads")->check(CLI::PositiveNumber);
  enc->callback([o, text_opt] {
    Tokenizer tok = load_tokenizer(o->tokenizer);
    std::ofstream file;
    if (!o->out.empty()) {
      file.open(o->out, std::ios::binary);
      if (!file) throw DataError("cannot write " + o->out);
    }
    std::ostream& out = o->out.empty() ? std::cout : file;
    if (text_opt->count() > 0) {
      out << json(tok.encode(o->text)).dump() << '\n';
      return;
    }
    if (o->in.empty()) throw ConfigError("encode needs --in or --text");
    auto docs = read_docs(o->in);
    std::vector<std::vector<std::uint32_t>> ids(docs.size());
    parallel_for(docs.size(), o->workers, [&](std::size_t i) { ids[i] = tok.encode(docs[i].text); });
    for (std::size_t i = 0; i < docs.size(); ++i)
      out << json{{"ordinal", docs[i].ordinal}, {"id", docs[i].id}, {"source", docs[i].source}, {"ids", ids[i]}}.dump()
          << '\n';
  });

  auto* fert = cmd->add_subcommand("fertility", "Tokens per word, base versus extended");
  fert->add_option("--tokenizer", o->tokenizer, "Extended tokenizer file")->required();
  fert->add_option("--in", o->in, "Evaluation documents")->required();
  fert->add_option("--workers", o->workers, "Worker threads")->check(CLI::PositiveNumber);
  fert->callback([o] {
    auto file = load_tokenizer_file(o->tokenizer);
    if (!file.extended) throw ConfigError(o->tokenizer + " is not an extended tokenizer");
    auto f = fertility(doc_texts(o->in), file.ext, o->workers);
    print_json({{"words", f.words},
                {"base_tokens", f.base_tokens},
                {"extended_tokens", f.extended_tokens},
                {"tokens_per_word_base", f.tokens_per_word_base},
                {"tokens_per_word_extended", f.tokens_per_word_extended},
                {"reduction", f.reduction}});
  });
}

}  // namespace forge::cli
