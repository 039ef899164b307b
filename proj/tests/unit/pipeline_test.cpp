// Copyright 2026 The Forge Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <map>

#include "forge/error.hpp"
#include "forge/pipeline.hpp"
#include "testkit.hpp"

namespace forge {
namespace {

namespace fs = std::filesystem;

json base_config() {
  return json{{"schema", "forge.pipeline/1"},
              {"stages", {"normalize", "quality"}}};
}

TEST(PipelineConfig, Defaults) {
  const auto c = pipeline_config_from_json(base_config());
  EXPECT_EQ(c.stages, (std::vector<std::string>{"normalize", "quality"}));
  EXPECT_EQ(c.source_allow, (std::vector<std::string>{"*"}));
  EXPECT_EQ(c.chunk_len, 2048u);
}

TEST(PipelineConfig, Rejections) {
  auto bad = [](auto mutate) {
    auto j = base_config();
    mutate(j);
    return j;
  };
  EXPECT_THROW(pipeline_config_from_json(json::array()), ConfigError);
  EXPECT_THROW(pipeline_config_from_json(bad([](json& j) { j["schema"] = "x"; })), ConfigError);
  EXPECT_THROW(pipeline_config_from_json(bad([](json& j) { j["stages"] = {"quality", "normalize"}; })), ConfigError);
  EXPECT_THROW(pipeline_config_from_json(bad([](json& j) { j["stages"] = {"normalize", "normalize"}; })), ConfigError);
  EXPECT_THROW(pipeline_config_from_json(bad([](json& j) { j["stages"] = {"bogus"}; })), ConfigError);
  EXPECT_THROW(pipeline_config_from_json(bad([](json& j) { j["stages"] = {"chunk"}; })), ConfigError);
  EXPECT_THROW(pipeline_config_from_json(bad([](json& j) { j["stages"] = {"langid"}; })), ConfigError);
  EXPECT_THROW(pipeline_config_from_json(bad([](json& j) { j["stages"] = {"tokenize"}; })), ConfigError);
  EXPECT_THROW(pipeline_config_from_json(bad([](json& j) { j["langid"] = {{"threshold", 2}}; })), ConfigError);
  EXPECT_THROW(pipeline_config_from_json(bad([](json& j) { j["workers"] = 0; })), ConfigError);
  EXPECT_THROW(pipeline_config_from_json(bad([](json& j) { j["sources"] = {{"allow", json::array()}}; })),
               ConfigError);
  EXPECT_THROW(pipeline_config_from_json(bad([](json& j) { j["dedup"] = {{"bands", 0}}; })), ConfigError);
  EXPECT_THROW(pipeline_config_from_json(bad([](json& j) { j["chunk"] = {{"chunk_len", "x"}}; })), ConfigError);
  EXPECT_THROW(pipeline_config_from_json(bad([](json& j) { j["normalize"] = 3; })), ConfigError);
}

TEST(PipelineConfig, HashIgnoresWorkers) {
  auto a = base_config();
  auto b = base_config();
  b["workers"] = 8;
  EXPECT_EQ(pipeline_config_from_json(a).hash(), pipeline_config_from_json(b).hash());
  b["seed"] = 3;
  EXPECT_NE(pipeline_config_from_json(a).hash(), pipeline_config_from_json(b).hash());
}

TEST(PipelineConfig, GlobHelpers) {
  EXPECT_TRUE(glob_match("news*", "news-2020"));
  EXPECT_FALSE(glob_match("news", "news-2020"));
  const auto dir = testkit::scratch_dir("glob");
  for (auto n : {"b.jsonl", "a.jsonl", "c.txt"}) write_file(dir / n, "");
  const auto got = expand_inputs((dir / "*.jsonl").string());
  ASSERT_EQ(got.size(), 2u);
  EXPECT_EQ(got[0].filename(), "a.jsonl");
  EXPECT_EQ(expand_inputs((dir / "none*").string()).size(), 0u);
}

class PipelineRun : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new fs::path(testkit::scratch_dir("pipeline"));
    fx_ = new testkit::PipelineFixture(testkit::make_pipeline_fixture(*dir_ / "fx", 600, 23));
  }
  static void TearDownTestSuite() {
    delete fx_;
    delete dir_;
  }

  static json run(const fs::path& out, unsigned workers, bool resume = false,
                  std::optional<std::string> stop = std::nullopt) {
    RunOptions o;
    o.inputs = fx_->inputs;
    o.out_dir = out;
    o.workers = workers;
    o.resume = resume;
    o.stop_after = std::move(stop);
    return run_pipeline(load_pipeline_config(fx_->config), o);
  }

  // doc id -> (stage, first reason) over every drops.jsonl under out.
  static std::map<std::string, std::pair<std::string, std::string>> drops(const fs::path& out) {
    std::map<std::string, std::pair<std::string, std::string>> m;
    for (const auto& e : fs::directory_iterator(out / "stages")) {
      if (!fs::exists(e.path() / "drops.jsonl")) continue;
      for (const auto& r : read_jsonl(e.path() / "drops.jsonl"))
        if (r["id"].is_string()) m[r["id"]] = {r["stage"], r["reasons"][0]};
    }
    return m;
  }

  static fs::path* dir_;
  static testkit::PipelineFixture* fx_;
};

fs::path* PipelineRun::dir_ = nullptr;
testkit::PipelineFixture* PipelineRun::fx_ = nullptr;

TEST_F(PipelineRun, ConservationAndGroundTruth) {
  const auto out = *dir_ / "run1";
  const auto m = run(out, 2);
  EXPECT_TRUE(m["complete"].get<bool>());
  ASSERT_EQ(m["stages"].size(), 10u);
  EXPECT_NO_THROW(validate_manifest(m));

  // Document counts chain from stage to stage.
  const auto& st = m["stages"];
  EXPECT_EQ(st[0]["input"].get<std::uint64_t>(), fx_->expected.size() + 2);
  EXPECT_EQ(st[0]["reasons"]["malformed_input"], 2);
  for (std::size_t i = 1; i < st.size(); ++i) {
    if (st[i]["unit"] != "documents") continue;
    EXPECT_EQ(st[i]["input"], st[i - 1]["kept"]) << st[i]["name"];
  }

  const auto dropped = drops(out);
  std::map<std::string, std::map<std::string, int>> by_category;  // category -> stage -> count
  std::map<std::string, int> totals;
  for (const auto& [id, cat] : fx_->expected) {
    ++totals[cat];
    auto it = dropped.find(id);
    ++by_category[cat][it == dropped.end() ? "kept" : it->second.first];
  }
  auto frac = [&](const std::string& cat, const std::string& stage) {
    return static_cast<double>(by_category[cat][stage]) / std::max(1, totals[cat]);
  };
  EXPECT_EQ(frac("disallowed", "ingest"), 1.0);
  EXPECT_EQ(frac("empty", "langid"), 1.0);
  EXPECT_GE(frac("english", "langid"), 0.95);
  EXPECT_GE(frac("profanity", "profanity"), 0.95);
  EXPECT_GE(frac("short", "quality"), 0.95);
  EXPECT_GE(frac("repetition", "kept") + frac("repetition", "repetition"), 0.9);
  EXPECT_GE(frac("duplicate", "dedup"), 0.8);
  EXPECT_GE(frac("clean", "kept"), 0.9);

  // Chunk payloads hold exactly chunk_len ids per manifest line.
  const auto chunks = read_manifest(out / "stages/08_chunk/manifest.jsonl");
  ASSERT_FALSE(chunks.chunks.empty());
  for (const auto& c : chunks.chunks) {
    const auto r = chunks.record(c);
    EXPECT_EQ(read_chunk(out / r.file, r.offset, 512).size(), 512u);
  }
  const auto mix = st[9];
  std::uint64_t expected_mix = 0;
  for (const auto& [src, info] : st[8]["extra"]["sources"].items())
    expected_mix += info["chunks"].get<std::uint64_t>() * (src == "news" ? 2 : 1);
  EXPECT_EQ(mix["extra"]["total_chunks"], expected_mix);
  EXPECT_EQ(mix["extra"]["total_tokens"], expected_mix * 512);

  const auto report = stats_report(m);
  EXPECT_NE(report.text.find("dedup"), std::string::npos);
  EXPECT_EQ(report.summary["chunks"], chunks.chunks.size());
}

TEST_F(PipelineRun, ArtifactsIndependentOfWorkers) {
  const auto a = *dir_ / "w1";
  const auto b = *dir_ / "w3";
  const auto ma = run(a, 1);
  const auto mb = run(b, 3);
  for (std::size_t i = 0; i < ma["stages"].size(); ++i)
    EXPECT_EQ(ma["stages"][i]["artifacts"], mb["stages"][i]["artifacts"]) << ma["stages"][i]["name"];
  EXPECT_EQ(ma["config_hash"], mb["config_hash"]);
}

TEST_F(PipelineRun, StopAndResume) {
  const auto out = *dir_ / "resume";
  const auto partial = run(out, 1, false, "dedup");
  EXPECT_FALSE(partial["complete"].get<bool>());
  EXPECT_EQ(partial["stages"].size(), 7u);
  EXPECT_FALSE(fs::exists(out / "stages/07_tokenize"));

  std::vector<std::string> log;
  RunOptions o;
  o.inputs = fx_->inputs;
  o.out_dir = out;
  o.resume = true;
  o.log = [&](std::string_view s) { log.emplace_back(s); };
  const auto full = run_pipeline(load_pipeline_config(fx_->config), o);
  EXPECT_TRUE(full["complete"].get<bool>());
  const auto reused = std::count_if(log.begin(), log.end(), [](const auto& s) {
    return s.find("reusing") != std::string::npos;
  });
  EXPECT_EQ(reused, 7);

  const auto fresh = run(*dir_ / "fresh", 1);
  for (std::size_t i = 0; i < fresh["stages"].size(); ++i)
    EXPECT_EQ(full["stages"][i]["artifacts"], fresh["stages"][i]["artifacts"]) << fresh["stages"][i]["name"];
}

TEST(PipelineReport, RejectsBrokenConservation) {
  json m = {{"stages", {{{"name", "x"}, {"input", 5}, {"kept", 3}, {"dropped", 1}}}}};
  EXPECT_THROW(validate_manifest(m), DataError);
  m["stages"][0]["dropped"] = 2;
  m["stages"][0]["reasons"] = {{"a", 1}};
  EXPECT_THROW(validate_manifest(m), DataError);
  m["stages"][0]["reasons"] = {{"a", 1}, {"b", 1}};
  EXPECT_NO_THROW(validate_manifest(m));
  EXPECT_THROW(validate_manifest(json::object()), DataError);
}

TEST(PipelineRunErrors, MissingInputAndOutDir) {
  const auto c = pipeline_config_from_json(base_config());
  RunOptions o;
  o.out_dir = testkit::scratch_dir("err");
  o.inputs = {o.out_dir / "nope.jsonl"};
  EXPECT_THROW(run_pipeline(c, o), DataError);
  o.out_dir.clear();
  EXPECT_THROW(run_pipeline(c, o), ConfigError);
}

}  // namespace
}  // namespace forge
