// Copyright 2026 The Forge Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdio>
#include <filesystem>
#include <iostream>

#include "commands.hpp"
#include "forge/error.hpp"

namespace forge::cli {

std::vector<Document> read_docs(const std::filesystem::path& path) {
  std::vector<Document> docs;
  JsonlReader reader(path);
  std::uint64_t position = 0;
  while (auto line = reader.next_line()) {
    Document d;
    try {
      d = parse_document_line(*line);
    } catch (const DataError& e) {
      throw DataError(path.string() + ":" + std::to_string(reader.line_number()) + ": " + e.what());
    }
    if (!d.meta.contains("ordinal")) d.ordinal = position;
    ++position;
    docs.push_back(std::move(d));
  }
  return docs;
}

void print_json(const json& j) { std::cout << j.dump(2) << '\n'; }

json parse_json_file(const std::filesystem::path& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

}  // namespace forge::cli

int main(int argc, char** argv) {
  CLI::App app{"forge: corpus curation and training-data toolkit"};
  app.require_subcommand(1);
  forge::cli::register_text(app);
  forge::cli::register_tok(app);
  forge::cli::register_corpus(app);
  forge::cli::register_metrics(app);
  forge::cli::register_run(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  } catch (const forge::ConfigError& e) {
    std::cerr << "forge: configuration error: " << e.what() << '\n';
    return 1;
  } catch (const forge::DataError& e) {
    std::cerr << "forge: data error: " << e.what() << '\n';
    return 2;
  } catch (const forge::DomainError& e) {
    std::cerr << "forge: data error: " << e.what() << '\n';
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "forge: data error: " << e.what() << '\n';
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "forge: data error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "forge: error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
