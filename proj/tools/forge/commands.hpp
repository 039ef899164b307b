// Copyright 2026 The Forge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "forge/document.hpp"

namespace forge::cli {

// Each register_* adds its subcommands; the callback runs the command.
void register_text(CLI::App& app);
void register_tok(CLI::App& app);
void register_corpus(CLI::App& app);
void register_metrics(CLI::App& app);
void register_run(CLI::App& app);

// Documents with their ordinal taken from meta, or the line position when
// the record carries none.
std::vector<Document> read_docs(const std::filesystem::path& path);
void print_json(const json& j);
json parse_json_file(const std::filesystem::path& path);

}  // namespace forge::cli
