// Copyright 2026 The OBIL Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// obil <subcommand> --config <path> [--out <dir>] [--seed <n>]
//
// Exit status: 0 success, 2 usage/config/validation error, 3 runtime failure.

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "obil/error.hpp"
#include "obil/experiment.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

bool is_config_error(obil::ErrorCode c) {
  return c == obil::ErrorCode::kInvalidConfig || c == obil::ErrorCode::kUnknownLoss;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Likelihood-ratio ensembles with online prior adaptation"};
  app.set_version_flag("--version", std::string(obil::version()));
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;

  const char* names[][2] = {
      {"gen", "write a synthetic Gaussian CSV"},
      {"train", "train and serialize a likelihood-ratio ensemble"},
      {"calibrate", "fit temperatures and report ECE with the deployment gate"},
      {"simulate", "run the online adapter on a scenario and emit its trace"},
      {"regret", "run the regret experiment and emit ledgers"},
      {"evaluate", "score a serialized ensemble on a test CSV"},
      {"run", "run the full per-seed experiment pipeline"},
  };
  for (const auto& [name, help] : names) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "experiment config (JSON)")->required();
    sub->add_option("--out", out_dir, "output directory (overrides output_dir)");
    sub->add_option("--seed", seed, "single seed (overrides seeds)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }
  const std::string cmd = app.get_subcommands().front()->get_name();

  obil::ExperimentConfig cfg;
  try {
    cfg = obil::load_config(config_path);
    if (seed) cfg.seeds = {*seed};
    if (!out_dir.empty()) cfg.output_dir = out_dir;
  } catch (const std::exception& e) {
    std::cerr << "obil: config error: " << e.what() << '\n';
    return kExitConfig;
  }
  const std::filesystem::path out = cfg.output_dir;

  try {
    if (cmd == "gen") {
      obil::command_gen(cfg, out, std::cout);
    } else if (cmd == "train") {
      obil::command_train(cfg, out, std::cout);
    } else if (cmd == "calibrate") {
      obil::command_calibrate(cfg, out, std::cout);
    } else if (cmd == "simulate") {
      obil::command_simulate(cfg, out, std::cout);
    } else if (cmd == "regret") {
      obil::command_regret(cfg, out, std::cout);
    } else if (cmd == "evaluate") {
      obil::command_evaluate(cfg, out, std::cout);
    } else {
      const auto report = obil::run_experiment(cfg, out);
      for (const auto& s : report.seeds) {
        if (s.ok) continue;
        std::cerr << "obil: seed " << s.seed << " failed in stage '" << s.failed_stage
                  << "': " << s.error << '\n';
      }
      std::cout << "wrote report for " << report.seeds.size() << " seed(s) to " << out.string()
                << '\n';
      if (!report.ok()) return kExitRuntime;
    }
  } catch (const obil::Error& e) {
    std::cerr << "obil " << cmd << ": " << e.what() << '\n';
    return is_config_error(e.code()) ? kExitConfig : kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "obil " << cmd << ": " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}
