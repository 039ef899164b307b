// Copyright 2026 The Forge Authors
// SPDX-License-Identifier: Apache-2.0

#include "forge/document.hpp"

#include <fstream>
#include <sstream>

#include "forge/error.hpp"
#include "forge/utf8.hpp"

namespace forge {

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::keep:
      return "keep";
    case Verdict::drop:
      return "drop";
    case Verdict::transform:
      return "transform";
  }
  return "?";
}

json to_json(const Document& doc) {
  json meta = doc.meta.is_object() ? doc.meta : json::object();
  meta["ordinal"] = doc.ordinal;
  return json{{"id", doc.id}, {"text", doc.text}, {"source", doc.source}, {"meta", std::move(meta)}};
}

Document document_from_json(const json& j) {
  if (!j.is_object()) throw DataError("document record is not an object");
  const auto text = j.find("text");
  if (text == j.end() || !text->is_string()) throw DataError("document record lacks a string \"text\"");
  Document doc;
  doc.text = text->get<std::string>();
  if (!utf8::is_valid(doc.text)) throw DataError("document text is not valid UTF-8");
  if (auto it = j.find("id"); it != j.end()) {
    doc.id = it->is_string() ? it->get<std::string>() : it->dump();
  }
  if (auto it = j.find("source"); it != j.end() && it->is_string()) doc.source = it->get<std::string>();
  if (auto it = j.find("meta"); it != j.end() && it->is_object()) doc.meta = *it;
  if (auto it = doc.meta.find("ordinal"); it != doc.meta.end() && it->is_number_unsigned())
    doc.ordinal = it->get<std::uint64_t>();
  return doc;
}

Document parse_document_line(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed JSON: ") + e.what());
  }
  return document_from_json(j);
}

json audit_record(const Document& doc, const StageDecision& decision) {
  return json{{"id", doc.id},
              {"ordinal", doc.ordinal},
              {"stage", decision.stage},
              {"verdict", to_string(decision.verdict)},
              {"reasons", decision.reasons},
              {"detail", decision.detail}};
}

JsonlReader::JsonlReader(const std::filesystem::path& path)
    : in_(std::make_unique<std::ifstream>(path, std::ios::binary)) {
  if (!*in_) throw DataError("cannot open " + path.string());
}

std::optional<std::string> JsonlReader::next_line() {
  std::string line;
  while (std::getline(*in_, line)) {
    ++line_no_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    return line;
  }
  return std::nullopt;
}

std::vector<Document> read_documents(const std::filesystem::path& path) {
  JsonlReader reader(path);
  std::vector<Document> docs;
  while (auto line = reader.next_line()) {
    try {
      docs.push_back(parse_document_line(*line));
    } catch (const DataError& e) {
      throw DataError(path.string() + ":" + std::to_string(reader.line_number()) + ": " + e.what());
    }
  }
  return docs;
}

void write_documents(const std::filesystem::path& path, const std::vector<Document>& docs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& d : docs) out << to_json(d).dump() << '\n';
}

std::vector<json> read_jsonl(const std::filesystem::path& path) {
  JsonlReader reader(path);
  std::vector<json> out;
  while (auto line = reader.next_line()) {
    try {
      out.push_back(json::parse(*line));
    } catch (const json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(reader.line_number()) + ": " + e.what());
    }
  }
  return out;
}

void write_jsonl(const std::filesystem::path& path, const std::vector<json>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& r : records) out << r.dump() << '\n';
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
}

}  // namespace forge
