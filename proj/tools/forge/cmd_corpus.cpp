// Copyright 2026 The Forge Authors
// SPDX-License-Identifier: Apache-2.0

#include <cctype>
#include <fstream>
#include <map>

#include "commands.hpp"
#include "forge/corpus.hpp"
#include "forge/error.hpp"

namespace forge::cli {
namespace {

namespace fs = std::filesystem;

std::string safe_name(const std::string& source) {
  std::string s = source.empty() ? "_" : source;
  for (auto& ch : s)
    if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '-' && ch != '_' && ch != '.') ch = '_';
  return s;
}

void register_chunk(CLI::App& app) {
  auto* cmd = app.add_subcommand("chunk", "Pack token streams into fixed-length chunks");
  struct Opts {
    std::string tokens, out_dir, tokenizer, separator_token = "<|endoftext|>";
    std::optional<std::uint32_t> separator_id;
    std::size_t chunk_len = 2048;
  };
  auto o = std::make_shared<Opts>();
  cmd->add_option("--tokens", o->tokens, "Token records from `tok encode`")->required();
  cmd->add_option("--out-dir", o->out_dir, "Directory for payloads and manifest.jsonl")->required();
  cmd->add_option("--chunk-len", o->chunk_len, "Tokens per chunk");
  auto* sep_id = cmd->add_option("--separator-id", o->separator_id, "Document separator id");
  auto* tok = cmd->add_option("--tokenizer", o->tokenizer, "Tokenizer used to look up --separator-token");
  cmd->add_option("--separator-token", o->separator_token, "Separator token text");
  sep_id->excludes(tok);
  cmd->callback([o] {
    std::uint32_t separator = 0;
    if (o->separator_id) {
      separator = *o->separator_id;
    } else if (!o->tokenizer.empty()) {
      auto t = load_tokenizer(o->tokenizer);
      auto id = t.id_of(o->separator_token, TokenKind::special);
      if (!id) id = t.id_of(o->separator_token, TokenKind::normal);
      if (!id) throw ConfigError("separator '" + o->separator_token + "' is not in the vocabulary");
      separator = *id;
    } else {
      throw ConfigError("chunk needs --separator-id or --tokenizer");
    }
    if (o->chunk_len <= 1) throw ConfigError("chunk_len must be at least 2");

    std::map<std::string, std::vector<std::vector<std::uint32_t>>> by_source;
    for (const auto& r : read_jsonl(o->tokens)) {
      try {
        by_source[r.value("source", std::string{})].push_back(r.at("ids").get<std::vector<std::uint32_t>>());
      } catch (const json::exception& e) {
        throw DataError(std::string("token record: ") + e.what());
      }
    }
    fs::create_directories(o->out_dir);
    ChunkManifest manifest;
    json report = json::object();
    for (const auto& [source, docs] : by_source) {
      const std::string rel = safe_name(source) + ".bin";
      std::ofstream payload(fs::path(o->out_dir) / rel, std::ios::binary);
      if (!payload) throw DataError("cannot write " + rel);
      std::uint64_t offset = 0;
      ChunkPacker packer(source, o->chunk_len, separator, [&](TokenChunk&& c) {
        payload.write(reinterpret_cast<const char*>(c.token_ids.data()),
                      static_cast<std::streamsize>(c.token_ids.size() * sizeof(std::uint32_t)));
        manifest.add({source, rel, offset, c.chunk_index});
        offset += c.token_ids.size() * sizeof(std::uint32_t);
      });
      for (const auto& d : docs) packer.add(d);
      const auto s = packer.finish();
      if (!payload.flush()) throw DataError("write failed: " + rel);
      report[source] = {{"documents", s.documents},   {"empty_documents", s.empty_documents},
                        {"stream_tokens", s.stream_tokens}, {"chunks", s.chunks},
                        {"dropped_tokens", s.dropped_tokens}};
    }
    write_manifest(fs::path(o->out_dir) / "manifest.jsonl", manifest);
    print_json({{"chunk_len", o->chunk_len}, {"separator_id", separator}, {"sources", report}});
  });
}

void register_mix(CLI::App& app) {
  auto* cmd = app.add_subcommand("mix", "Cap, repeat and shuffle chunk manifests");
  struct Opts {
    std::vector<std::string> manifests;
    std::string spec, out, report;
  };
  auto o = std::make_shared<Opts>();
  cmd->add_option("--manifest", o->manifests, "Chunk manifest (repeatable)")->required();
  cmd->add_option("--spec", o->spec, "Mix spec: {sources: [{tag, repeat_factor, cap}], shuffle_seed, chunk_len}")
      ->required();
  cmd->add_option("--out", o->out, "Mixed manifest")->required();
  cmd->add_option("--report", o->report, "Report file (default: stdout only)");
  cmd->callback([o] {
    const MixSpec spec = mix_spec_from_json(parse_json_file(o->spec));
    ChunkManifest all;
    for (const auto& path : o->manifests) {
      auto m = read_manifest(path);
      for (const auto& ref : m.chunks) all.add(m.record(ref));
    }
    auto [mixed, report] = mix_datasets(all, spec);
    write_manifest(o->out, mixed);
    if (!o->report.empty()) write_file(o->report, report.to_json().dump(2) + "\n");
    print_json(report.to_json());
  });
}

void register_warmup(CLI::App& app) {
  auto* cmd = app.add_subcommand("warmup", "Interleave parallel stories into warm-up documents");
  struct Opts {
    std::string in, out, direction = "both";
  };
  auto o = std::make_shared<Opts>();
  cmd->add_option("--in", o->in, "Parallel stories: {story_id, pairs: [[en, fa], ...]}")->required();
  cmd->add_option("--out", o->out, "Warm-up documents (JSON Lines)")->required();
  cmd->add_option("--direction", o->direction, "Which language leads each pair")
      ->check(CLI::IsMember({"fa_first", "en_first", "both"}));
  cmd->callback([o] {
    std::vector<WarmupDirection> dirs;
    if (o->direction != "en_first") dirs.push_back(WarmupDirection::fa_first);
    if (o->direction != "fa_first") dirs.push_back(WarmupDirection::en_first);
    std::vector<Document> out;
    std::size_t stories = 0;
    for (const auto& r : read_jsonl(o->in)) {
      const auto doc = parallel_doc_from_json(r);
      ++stories;
      for (auto dir : dirs) {
        Document d;
        d.id = doc.story_id + (dir == WarmupDirection::fa_first ? ":fa_first" : ":en_first");
        d.text = format_warmup(doc, dir);
        d.source = "warmup";
        d.ordinal = out.size();
        out.push_back(std::move(d));
      }
    }
    write_documents(o->out, out);
    print_json({{"stories", stories}, {"documents", out.size()}});
  });
}

void register_sft(CLI::App& app) {
  auto* cmd = app.add_subcommand("sft", "Build a tokenized instruction-tuning mix");
  struct Opts {
    std::string tokenizer, tmpl, out, manifest;
    std::vector<std::string> sources;
    std::uint64_t seed = 0;
    std::size_t max_len = 512;
  };
  auto o = std::make_shared<Opts>();
  cmd->add_option("--tokenizer", o->tokenizer, "Model or extended tokenizer")->required();
  cmd->add_option("--source", o->sources, "tag=path[:cap] (repeatable)")->required();
  cmd->add_option("--template", o->tmpl, "Chat template JSON (default: Phi-3 markers)");
  cmd->add_option("--seed", o->seed, "Sampling seed");
  cmd->add_option("--max-len", o->max_len, "Maximum sample length in tokens")->check(CLI::PositiveNumber);
  cmd->add_option("--out", o->out, "Samples (JSON Lines)")->required();
  cmd->add_option("--manifest", o->manifest, "Mix manifest (JSON Lines)");
  cmd->callback([o] {
    const Tokenizer tok = load_tokenizer(o->tokenizer);
    const ChatTemplate tmpl = o->tmpl.empty() ? ChatTemplate{} : ChatTemplate::from_json(parse_json_file(o->tmpl));
    std::vector<SftSource> sources;
    for (const auto& spec : o->sources) {
      const auto eq = spec.find('=');
      if (eq == std::string::npos || eq == 0) throw ConfigError("--source wants tag=path[:cap], got " + spec);
      SftSource src;
      src.tag = spec.substr(0, eq);
      std::string path = spec.substr(eq + 1);
      std::optional<std::uint64_t> cap;
      if (const auto colon = path.rfind(':'); colon != std::string::npos) {
        const std::string tail = path.substr(colon + 1);
        if (!tail.empty() && tail.find_first_not_of("0123456789") == std::string::npos) {
          cap = std::stoull(tail);
          path.resize(colon);
        }
      }
      src.records = read_jsonl(path);
      src.cap = cap.value_or(src.records.size());
      sources.push_back(std::move(src));
    }
    const SftMix mix = build_sft_mix(sources, o->seed);

    std::ofstream out(o->out, std::ios::binary);
    if (!out) throw DataError("cannot write " + o->out);
    std::vector<json> manifest;
    std::size_t written = 0, untrainable = 0, truncated = 0;
    for (const auto& e : mix.entries) {
      json m{{"source", e.source}, {"index", e.index}};
      try {
        auto sample = format_sft(e.conversation, tmpl, tok, o->max_len);
        json j = sample.to_json();
        j["source"] = e.source;
        j["index"] = e.index;
        out << j.dump() << '\n';
        ++written;
        if (sample.truncated_tokens > 0) ++truncated;
        m["status"] = "ok";
      } catch (const UntrainableSampleError& err) {
        ++untrainable;
        m["status"] = "untrainable";
      }
      manifest.push_back(std::move(m));
    }
    if (!o->manifest.empty()) write_jsonl(o->manifest, manifest);
    print_json({{"samples", written}, {"untrainable", untrainable}, {"truncated", truncated}, {"counts", mix.counts}});
  });
}

}  // namespace

void register_corpus(CLI::App& app) {
  register_chunk(app);
  register_mix(app);
  register_warmup(app);
  register_sft(app);
}

}  // namespace forge::cli
