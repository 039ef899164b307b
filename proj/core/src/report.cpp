// Copyright 2026 The Forge Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cstdio>

#include "forge/error.hpp"
#include "forge/pipeline.hpp"

namespace forge {

namespace {

std::uint64_t count(const json& stage, const char* key) {
  auto it = stage.find(key);
  if (it == stage.end()) return 0;
  if (!it->is_number_unsigned() && !(it->is_number_integer() && it->get<long long>() >= 0))
    throw DataError(std::string("manifest: stage field '") + key + "' must be a non-negative integer");
  return it->get<std::uint64_t>();
}

}  // namespace

void validate_manifest(const json& manifest) {
  if (!manifest.is_object() || !manifest.contains("stages") || !manifest["stages"].is_array())
    throw DataError("manifest: missing stage list");
  for (const auto& s : manifest["stages"]) {
    const auto name = s.value("name", std::string("?"));
    const auto in = count(s, "input");
    const auto kept = count(s, "kept");
    const auto dropped = count(s, "dropped");
    if (in != kept + dropped)
      throw DataError("manifest: stage '" + name + "' has input " + std::to_string(in) + " != kept " +
                      std::to_string(kept) + " + dropped " + std::to_string(dropped));
    std::uint64_t by_reason = 0;
    if (auto r = s.find("reasons"); r != s.end())
      for (const auto& [k, v] : r->items()) by_reason += v.get<std::uint64_t>();
    if (s.contains("reasons") && by_reason != dropped)
      throw DataError("manifest: stage '" + name + "' reason counts sum to " + std::to_string(by_reason) +
                      ", expected " + std::to_string(dropped));
  }
}

StatsReport stats_report(const json& manifest) {
  validate_manifest(manifest);
  StatsReport report;
  report.summary = json{{"stages", json::array()}};
  std::string& t = report.text;
  char line[256];
  std::snprintf(line, sizeof(line), "%-12s %12s %12s %12s %9s  %s\n", "stage", "input", "kept", "dropped", "retained",
                "top reasons");
  t += line;

  std::uint64_t first_input = 0, last_docs = 0;
  bool first = true;
  for (const auto& s : manifest["stages"]) {
    const auto name = s.value("name", std::string("?"));
    const auto in = count(s, "input");
    const auto kept = count(s, "kept");
    const auto dropped = count(s, "dropped");
    const double retention = in == 0 ? 0.0 : static_cast<double>(kept) / static_cast<double>(in);
    std::vector<std::pair<std::string, std::uint64_t>> reasons;
    if (auto r = s.find("reasons"); r != s.end())
      for (const auto& [k, v] : r->items()) reasons.emplace_back(k, v.get<std::uint64_t>());
    std::stable_sort(reasons.begin(), reasons.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    if (reasons.size() > 3) reasons.resize(3);

    std::string top;
    json top_json = json::array();
    for (const auto& [k, v] : reasons) {
      if (!top.empty()) top += ", ";
      top += k + "=" + std::to_string(v);
      top_json.push_back({{"reason", k}, {"count", v}});
    }
    std::snprintf(line, sizeof(line), "%-12s %12llu %12llu %12llu %8.2f%%  %s\n", name.c_str(),
                  static_cast<unsigned long long>(in), static_cast<unsigned long long>(kept),
                  static_cast<unsigned long long>(dropped), 100.0 * retention, top.c_str());
    t += line;
    report.summary["stages"].push_back({{"name", name},
                                        {"input", in},
                                        {"kept", kept},
                                        {"dropped", dropped},
                                        {"retention", retention},
                                        {"top_reasons", top_json}});
    if (s.value("unit", std::string("documents")) == "documents") {
      if (first) first_input = in;
      first = false;
      last_docs = kept;
    }
  }

  std::uint64_t tokens = 0, chunks = 0, mixed_tokens = 0;
  for (const auto& s : manifest["stages"]) {
    const auto& extra = s.contains("extra") ? s["extra"] : json::object();
    const auto name = s.value("name", std::string());
    if (name == "tokenize") tokens = extra.value("tokens", std::uint64_t{0});
    if (name == "chunk") chunks = extra.value("chunks", std::uint64_t{0});
    if (name == "mix") mixed_tokens = extra.value("total_tokens", std::uint64_t{0});
  }
  report.summary["documents_in"] = first_input;
  report.summary["documents_out"] = last_docs;
  report.summary["tokens"] = tokens;
  report.summary["chunks"] = chunks;
  report.summary["mixed_tokens"] = mixed_tokens;
  std::snprintf(line, sizeof(line), "documents: %llu in, %llu out; tokens %llu; chunks %llu; mixed tokens %llu\n",
                static_cast<unsigned long long>(first_input), static_cast<unsigned long long>(last_docs),
                static_cast<unsigned long long>(tokens), static_cast<unsigned long long>(chunks),
                static_cast<unsigned long long>(mixed_tokens));
  t += line;
  return report;
}

}  // namespace forge
