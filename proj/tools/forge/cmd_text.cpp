// Copyright 2026 The Forge Authors
// SPDX-License-Identifier: Apache-2.0

#include <fstream>
#include <iostream>
#include <map>
#include <optional>

#include "commands.hpp"
#include "forge/dedup.hpp"
#include "forge/error.hpp"
#include "forge/langid.hpp"
#include "forge/normalizer.hpp"
#include "forge/parallel.hpp"
#include "forge/quality.hpp"

namespace forge::cli {
namespace {

struct AuditSink {
  std::optional<std::ofstream> out;
  explicit AuditSink(const std::string& path) {
    if (path.empty()) return;
    out.emplace(path, std::ios::binary);
    if (!*out) throw DataError("cannot write " + path);
  }
  void put(const Document& doc, const StageDecision& d) {
    if (out) *out << audit_record(doc, d).dump() << '\n';
  }
};

void register_normalize(CLI::App& app) {
  auto* cmd = app.add_subcommand("normalize", "Normalize Persian orthography");
  struct Opts {
    std::string profile, in, out;
    bool wiki = false;
    std::vector<std::string> drop_sections;
    unsigned workers = 1;
  };
  auto o = std::make_shared<Opts>();
  cmd->add_option("--profile", o->profile, "Normalization profile (default: built-in Persian)");
  cmd->add_option("--in", o->in, "Input documents (JSON Lines)")->required();
  cmd->add_option("--out", o->out, "Output documents")->required();
  cmd->add_flag("--wiki", o->wiki, "Strip wiki boilerplate sections");
  cmd->add_option("--drop-section", o->drop_sections, "Section title to strip (repeatable)");
  cmd->add_option("--workers", o->workers, "Worker threads")->check(CLI::PositiveNumber);
  cmd->callback([o] {
    NormalizationProfile profile = o->profile.empty() ? persian_default() : load_profile(o->profile);
    profile.validate();
    WikiSectionPolicy policy;
    if (!o->drop_sections.empty()) policy.drop_sections = o->drop_sections;
    auto docs = read_docs(o->in);
    parallel_for(docs.size(), o->workers, [&](std::size_t i) {
      if (o->wiki) docs[i] = strip_wiki_sections(docs[i], policy);
      docs[i].text = normalize_text(docs[i].text, profile);
    });
    write_documents(o->out, docs);
  });
}

void register_langid(CLI::App& app) {
  auto* cmd = app.add_subcommand("langid", "Character n-gram language identification");
  cmd->require_subcommand(1);

  struct Opts {
    std::string model, corpus, in, out, audit, target = "fa";
    double smoothing = 1e-5, threshold = 0.8;
  };
  auto o = std::make_shared<Opts>();

  auto* train = cmd->add_subcommand("train", "Train a model from {text, label} records");
  train->add_option("--corpus", o->corpus, "Labeled records (JSON Lines)")->required();
  train->add_option("--model", o->model, "Output model file")->required();
  train->add_option("--smoothing", o->smoothing, "Additive smoothing constant");
  train->callback([o] {
    std::vector<LabeledText> corpus;
    for (const auto& r : read_jsonl(o->corpus)) {
      if (!r.is_object() || !r.contains("text") || !r.contains("label"))
        throw DataError("training record needs text and label");
      corpus.push_back({r.at("text").get<std::string>(), r.at("label").get<std::string>()});
    }
    auto model = train_langid(corpus, o->smoothing);
    save_langid(model, o->model);
    print_json({{"labels", model.labels}, {"smoothing", model.smoothing}, {"records", corpus.size()}});
  });

  auto* classify_cmd = cmd->add_subcommand("classify", "Label each document");
  classify_cmd->add_option("--model", o->model, "Model file")->required();
  classify_cmd->add_option("--in", o->in, "Input documents")->required();
  classify_cmd->add_option("--out", o->out, "Annotations (default: stdout)");
  classify_cmd->callback([o] {
    auto model = load_langid(o->model);
    std::ofstream file;
    if (!o->out.empty()) file.open(o->out, std::ios::binary);
    std::ostream& out = o->out.empty() ? std::cout : file;
    for (const auto& doc : read_docs(o->in)) {
      auto d = classify(doc.text, model);
      json post = json::object();
      for (const auto& [label, p] : d.posteriors) post[label] = p;
      out << json{{"id", doc.id}, {"label", d.label}, {"confidence", d.confidence}, {"posteriors", post}}.dump()
          << '\n';
    }
  });

  auto* filter = cmd->add_subcommand("filter", "Keep documents confidently in the target language");
  filter->add_option("--model", o->model, "Model file")->required();
  filter->add_option("--in", o->in, "Input documents")->required();
  filter->add_option("--out", o->out, "Kept documents")->required();
  filter->add_option("--audit", o->audit, "Audit records for every document");
  filter->add_option("--target", o->target, "Target label");
  filter->add_option("--threshold", o->threshold, "Minimum posterior")->check(CLI::Range(0.0, 1.0));
  filter->callback([o] {
    auto model = load_langid(o->model);
    if (model.label_index(o->target) == std::string::npos)
      throw ConfigError("target label '" + o->target + "' not in model");
    AuditSink audit(o->audit);
    std::vector<Document> kept;
    std::size_t dropped = 0;
    for (auto& doc : read_docs(o->in)) {
      auto d = filter_language(doc, model, o->target, o->threshold);
      audit.put(doc, d);
      if (d.kept())
        kept.push_back(std::move(doc));
      else
        ++dropped;
    }
    write_documents(o->out, kept);
    print_json({{"kept", kept.size()}, {"dropped", dropped}});
  });
}

void register_quality(CLI::App& app) {
  auto* cmd = app.add_subcommand("quality", "Profanity, heuristic quality and repetition filters");
  struct Opts {
    std::string config, in, out, audit;
    std::vector<std::string> rules = {"profanity", "quality", "repetition"};
    unsigned workers = 1;
  };
  auto o = std::make_shared<Opts>();
  cmd->add_option("--config", o->config, "Thresholds and lexicons (default: built-in)");
  cmd->add_option("--in", o->in, "Input documents")->required();
  cmd->add_option("--out", o->out, "Kept documents")->required();
  cmd->add_option("--audit", o->audit, "Audit records for every document");
  cmd->add_option("--rules", o->rules, "Filters to run")
      ->delimiter(',')
      ->check(CLI::IsMember({"profanity", "quality", "repetition"}));
  cmd->add_option("--workers", o->workers, "Worker threads")->check(CLI::PositiveNumber);
  cmd->callback([o] {
    const QualityConfig cfg = o->config.empty() ? default_quality_config() : load_quality_config(o->config);
    auto has = [&](std::string_view r) { return std::find(o->rules.begin(), o->rules.end(), r) != o->rules.end(); };
    auto docs = read_docs(o->in);
    std::vector<std::vector<StageDecision>> decisions(docs.size());
    parallel_for(docs.size(), o->workers, [&](std::size_t i) {
      auto& doc = docs[i];
      auto& ds = decisions[i];
      if (has("profanity") && cfg.profanity_enabled) {
        ds.push_back(profanity_gate(doc, cfg.lexicons.profanity));
        if (!ds.back().kept()) return;
      }
      if (has("quality")) {
        ds.push_back(apply_quality_rules(compute_quality_stats(doc, cfg.lexicons), cfg.thresholds));
        if (!ds.back().kept()) return;
      }
      if (has("repetition")) {
        auto r = remove_repetition(doc, cfg.repetition);
        doc = std::move(r.doc);
        ds.push_back(std::move(r.decision));
      }
    });
    AuditSink audit(o->audit);
    std::vector<Document> kept;
    std::map<std::string, std::size_t> reasons;
    for (std::size_t i = 0; i < docs.size(); ++i) {
      bool keep = true;
      for (const auto& d : decisions[i]) {
        audit.put(docs[i], d);
        if (!d.kept()) {
          keep = false;
          for (const auto& r : d.reasons) ++reasons[r];
        }
      }
      if (keep) kept.push_back(std::move(docs[i]));
    }
    write_documents(o->out, kept);
    print_json({{"input", docs.size()}, {"kept", kept.size()}, {"reason_hits", reasons}});
  });
}

void register_dedup(CLI::App& app) {
  auto* cmd = app.add_subcommand("dedup", "MinHash-LSH near-duplicate removal");
  cmd->require_subcommand(1);
  struct Opts {
    DedupParams params;
    std::string in, out, signatures, drop_list, clusters;
    std::optional<double> verify;
    unsigned workers = 1;
  };
  auto o = std::make_shared<Opts>();

  auto* sign = cmd->add_subcommand("sign", "Compute signatures");
  sign->add_option("--in", o->in, "Input documents")->required();
  sign->add_option("--out", o->out, "Signature file")->required();
  sign->add_option("--seed", o->params.seed, "Hash family seed");
  sign->add_option("--bands", o->params.num_bands, "LSH bands");
  sign->add_option("--rows", o->params.rows_per_band, "Rows per band");
  sign->add_option("--shingle-order", o->params.shingle_order, "Words per shingle");
  sign->add_option("--workers", o->workers, "Worker threads")->check(CLI::PositiveNumber);
  sign->callback([o] {
    o->params.validate();
    auto docs = read_docs(o->in);
    std::vector<std::optional<MinHashSignature>> sigs(docs.size());
    parallel_for(docs.size(), o->workers, [&](std::size_t i) {
      auto sh = shingle(docs[i].text, o->params.shingle_order);
      if (!sh.empty()) sigs[i] = minhash_signature(sh, o->params, docs[i].ordinal);
    });
    std::vector<MinHashSignature> out;
    std::size_t unsignable = 0;
    for (auto& s : sigs) {
      if (s)
        out.push_back(std::move(*s));
      else
        ++unsignable;
    }
    save_signatures(o->out, o->params, out);
    print_json({{"signed", out.size()}, {"unsignable", unsignable}});
  });

  auto* cluster = cmd->add_subcommand("cluster", "Group colliding signatures");
  cluster->add_option("--signatures", o->signatures, "Signature file")->required();
  cluster->add_option("--out", o->out, "Drop list (JSON Lines)")->required();
  cluster->add_option("--clusters", o->clusters, "Cluster audit (JSON Lines)");
  cluster->add_option("--verify-threshold", o->verify, "Confirm pairs by estimated Jaccard")
      ->check(CLI::Range(0.0, 1.0));
  cluster->add_option("--workers", o->workers, "Worker threads")->check(CLI::PositiveNumber);
  cluster->callback([o] {
    auto [params, sigs] = load_signatures(o->signatures);
    auto result = cluster_signatures(sigs, params, o->verify, o->workers);
    write_jsonl(o->out, drop_list_records(result));
    if (!o->clusters.empty()) {
      std::vector<json> recs;
      for (const auto& c : result.clusters)
        recs.push_back({{"representative", c.representative}, {"members", c.members}});
      write_jsonl(o->clusters, recs);
    }
    print_json({{"signatures", sigs.size()}, {"clusters", result.clusters.size()}, {"drop", result.drop.size()}});
  });

  auto* apply = cmd->add_subcommand("apply", "Remove documents on a drop list");
  apply->add_option("--in", o->in, "Input documents")->required();
  apply->add_option("--drop-list", o->drop_list, "Drop list")->required();
  apply->add_option("--out", o->out, "Kept documents")->required();
  apply->callback([o] {
    std::map<std::uint64_t, std::uint64_t> drop;
    for (const auto& r : read_jsonl(o->drop_list)) {
      if (!r.is_object() || !r.contains("ordinal")) throw DataError("drop list record needs an ordinal");
      drop[r.at("ordinal").get<std::uint64_t>()] = r.value("representative", std::uint64_t{0});
    }
    std::vector<Document> kept;
    std::size_t removed = 0;
    for (auto& doc : read_docs(o->in)) {
      if (drop.contains(doc.ordinal))
        ++removed;
      else
        kept.push_back(std::move(doc));
    }
    write_documents(o->out, kept);
    print_json({{"kept", kept.size()}, {"dropped", removed}});
  });
}

}  // namespace

void register_text(CLI::App& app) {
  register_normalize(app);
  register_langid(app);
  register_quality(app);
  register_dedup(app);
}

}  // namespace forge::cli
