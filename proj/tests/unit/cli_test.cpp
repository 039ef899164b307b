// Copyright 2026 The Forge Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>

#include "forge/corpus.hpp"
#include "forge/document.hpp"
#include "testkit.hpp"

namespace forge {
namespace {

namespace fs = std::filesystem;

struct Result {
  int code = -1;
  std::string out;
};

Result forge_cmd(const std::string& args) {
  const std::string cmd = std::string(FORGE_BIN) + " " + args + " 2>/dev/null";
  Result r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  for (std::size_t n; (n = fread(buf, 1, sizeof(buf), p)) > 0;) r.out.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

TEST(Cli, ExitCodes) {
  EXPECT_EQ(forge_cmd("").code, 1);
  EXPECT_EQ(forge_cmd("nonsense").code, 1);
  EXPECT_EQ(forge_cmd("--help").code, 0);
  EXPECT_EQ(forge_cmd("metrics ppl --ppl 2.45").code, 0);
  EXPECT_EQ(forge_cmd("metrics ppl --ppl 0.5").code, 2);
  EXPECT_EQ(forge_cmd("metrics ppl").code, 1);
  EXPECT_EQ(forge_cmd("metrics budget --rank 0").code, 1);
  EXPECT_EQ(forge_cmd("normalize --in /nonexistent/x.jsonl --out /tmp/forge_cli_never").code, 2);
}

TEST(Cli, PerplexityAndBudget) {
  auto r = forge_cmd("metrics ppl --ppl 2.45");
  const auto j = json::parse(r.out);
  EXPECT_NEAR(j["mean_token_probability"].get<double>(), 0.40816, 1e-4);
  r = forge_cmd("metrics budget --rank 4 --new-tokens 4921");
  ASSERT_EQ(r.code, 0);
  const auto b = json::parse(r.out);
  EXPECT_EQ(b["lora_params"], 6291456);
  EXPECT_EQ(b["resize_new_rows_params"], 30234624);
}

TEST(Cli, NormalizeAndQualityFiles) {
  const auto dir = testkit::scratch_dir("cli");
  write_documents(dir / "in.jsonl", {Document{"a", "كتاب  عربي", "s"}, Document{"b", "", "s"}});
  auto r = forge_cmd("normalize --in " + q(dir / "in.jsonl") + " --out " + q(dir / "norm.jsonl"));
  ASSERT_EQ(r.code, 0);
  const auto docs = read_documents(dir / "norm.jsonl");
  ASSERT_EQ(docs.size(), 2u);
  EXPECT_EQ(docs[0].text, "کتاب عربی");

  r = forge_cmd("quality --in " + q(dir / "norm.jsonl") + " --out " + q(dir / "q.jsonl") + " --audit " +
                q(dir / "audit.jsonl"));
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(read_documents(dir / "q.jsonl").size(), 0u);
  // one record per rule decision: profanity keeps, quality drops
  const auto audit = read_jsonl(dir / "audit.jsonl");
  ASSERT_EQ(audit.size(), 4u);
  EXPECT_EQ(audit[0]["stage"], "profanity");
  EXPECT_EQ(audit[1]["verdict"], "drop");
}

TEST(Cli, BadPipelineConfigIsConfigError) {
  const auto dir = testkit::scratch_dir("cli_run");
  write_file(dir / "p.json", R"({"schema": "forge.pipeline/1", "stages": ["quality", "normalize"]})");
  write_file(dir / "in.jsonl", "");
  EXPECT_EQ(forge_cmd("run --config " + q(dir / "p.json") + " --in " + q(dir / "in.jsonl") + " --out " +
                      q(dir / "out"))
                .code,
            1);
  write_file(dir / "p.json", "{not json");
  EXPECT_EQ(forge_cmd("run --config " + q(dir / "p.json") + " --in " + q(dir / "in.jsonl") + " --out " +
                      q(dir / "out"))
                .code,
            1);
}

TEST(Cli, WarmupMixAndChunk) {
  const auto dir = testkit::scratch_dir("cli_corpus");
  write_file(dir / "stories.jsonl", R"({"story_id": "s1", "pairs": [{"en": "Hi.", "fa": "سلام."}]})" "\n");
  auto r = forge_cmd("warmup --in " + q(dir / "stories.jsonl") + " --out " + q(dir / "w.jsonl") +
                     " --direction both");
  ASSERT_EQ(r.code, 0);
  const auto w = read_documents(dir / "w.jsonl");
  ASSERT_EQ(w.size(), 2u);
  EXPECT_EQ(w[0].text, "<FA> سلام.\n<EN> Hi.\n");

  std::vector<json> toks;
  for (int i = 0; i < 5; ++i) toks.push_back({{"ordinal", i}, {"id", "d" + std::to_string(i)}, {"source", "x"},
                                              {"ids", std::vector<int>(7, i + 1)}});
  write_jsonl(dir / "tokens.jsonl", toks);
  r = forge_cmd("chunk --tokens " + q(dir / "tokens.jsonl") + " --out-dir " + q(dir / "chunks") +
                " --chunk-len 8 --separator-id 0");
  ASSERT_EQ(r.code, 0);
  const auto m = read_manifest(dir / "chunks/manifest.jsonl");
  EXPECT_EQ(m.chunks.size(), (5u * 7 + 4) / 8);

  write_file(dir / "mix.json", R"({"shuffle_seed": 1, "chunk_len": 8, "sources": [{"tag": "x", "repeat_factor": 3}]})");
  r = forge_cmd("mix --manifest " + q(dir / "chunks/manifest.jsonl") + " --spec " + q(dir / "mix.json") +
                " --out " + q(dir / "mixed.jsonl"));
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(read_manifest(dir / "mixed.jsonl").chunks.size(), 3 * m.chunks.size());

  write_file(dir / "mix.json", R"({"sources": [{"tag": "x", "cap": 99}]})");
  r = forge_cmd("mix --manifest " + q(dir / "chunks/manifest.jsonl") + " --spec " + q(dir / "mix.json") +
                " --out " + q(dir / "mixed.jsonl"));
  EXPECT_EQ(r.code, 1);
}

}  // namespace
}  // namespace forge
