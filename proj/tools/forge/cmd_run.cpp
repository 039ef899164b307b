// Copyright 2026 The Forge Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <iostream>

#include "commands.hpp"
#include "forge/error.hpp"
#include "forge/pipeline.hpp"

namespace forge::cli {

void register_run(CLI::App& app) {
  auto* cmd = app.add_subcommand("run", "Run the configured pipeline end to end");
  struct Opts {
    std::string config, out, stop_after;
    std::vector<std::string> inputs;
    std::optional<unsigned> workers;
    bool resume = false, quiet = false;
  };
  auto o = std::make_shared<Opts>();
  cmd->add_option("--config", o->config, "Pipeline config (JSON)")->required();
  cmd->add_option("--in", o->inputs, "Input glob (repeatable)")->required();
  cmd->add_option("--out", o->out, "Output directory")->required();
  cmd->add_option("--workers", o->workers, "Worker threads (overrides the config)")->check(CLI::PositiveNumber);
  cmd->add_flag("--resume", o->resume, "Reuse completed stages with a matching run hash");
  cmd->add_option("--stop-after", o->stop_after, "Stop after this stage");
  cmd->add_flag("-q,--quiet", o->quiet, "No progress on stderr");
  cmd->callback([o] {
    const auto config = load_pipeline_config(o->config);
    RunOptions opts;
    for (const auto& pattern : o->inputs) {
      auto paths = expand_inputs(pattern);
      if (paths.empty()) throw DataError("no input matches " + pattern);
      opts.inputs.insert(opts.inputs.end(), paths.begin(), paths.end());
    }
    std::sort(opts.inputs.begin(), opts.inputs.end());
    opts.inputs.erase(std::unique(opts.inputs.begin(), opts.inputs.end()), opts.inputs.end());
    opts.out_dir = o->out;
    opts.workers = o->workers;
    opts.resume = o->resume;
    if (!o->stop_after.empty()) opts.stop_after = o->stop_after;
    if (!o->quiet) opts.log = [](std::string_view msg) { std::cerr << msg << '\n'; };
    const json manifest = run_pipeline(config, opts);
    std::cout << stats_report(manifest).text;
  });

  auto* report = app.add_subcommand("report", "Print the stats table of a finished run");
  report->add_option("--manifest", o->config, "Run manifest.json")->required();
  report->add_flag("--json", o->quiet, "Print the summary as JSON");
  report->callback([o] {
    json manifest;
    try {
      manifest = json::parse(read_file(o->config));
    } catch (const json::exception& e) {
      throw DataError(o->config + ": " + e.what());
    }
    const auto r = stats_report(manifest);
    if (o->quiet)
      print_json(r.summary);
    else
      std::cout << r.text;
  });
}

}  // namespace forge::cli
