// Copyright 2026 The Forge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <istream>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace forge {

using json = nlohmann::json;

// Unit of corpus flow. Interchange form is one JSON object per line:
// {"id", "text", "source", "meta"}. `ordinal` is the position in the run's
// input stream and is carried in meta["ordinal"] across stage files.
struct Document {
  std::string id;
  std::string text;
  std::string source;
  json meta = json::object();
  std::uint64_t ordinal = 0;
};

enum class Verdict { keep, drop, transform };

std::string_view to_string(Verdict v);

// Keep/drop/transform verdict with machine-readable reason codes. `detail`
// carries stage-specific audit data (matched term, label and confidence, ...).
struct StageDecision {
  std::string stage;
  Verdict verdict = Verdict::keep;
  std::vector<std::string> reasons;
  json detail = json::object();

  bool kept() const { return verdict != Verdict::drop; }

  static StageDecision keep(std::string stage) { return {std::move(stage), Verdict::keep, {}, json::object()}; }
  static StageDecision drop(std::string stage, std::vector<std::string> reasons, json detail = json::object()) {
    return {std::move(stage), Verdict::drop, std::move(reasons), std::move(detail)};
  }
};

json to_json(const Document& doc);
// Throws DataError on a record that is not an object, lacks a string "text",
// or carries text that is not valid UTF-8.
Document document_from_json(const json& j);
Document parse_document_line(std::string_view line);

json audit_record(const Document& doc, const StageDecision& decision);

// Line-oriented JSON readers/writers.
class JsonlReader {
 public:
  explicit JsonlReader(const std::filesystem::path& path);
  // Next non-empty line, without the trailing newline.
  std::optional<std::string> next_line();
  std::size_t line_number() const { return line_no_; }

 private:
  std::unique_ptr<std::istream> in_;
  std::size_t line_no_ = 0;
};

std::vector<Document> read_documents(const std::filesystem::path& path);
void write_documents(const std::filesystem::path& path, const std::vector<Document>& docs);
std::vector<json> read_jsonl(const std::filesystem::path& path);
void write_jsonl(const std::filesystem::path& path, const std::vector<json>& records);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace forge
