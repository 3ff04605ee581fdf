// Copyright 2026 The fedguard-sim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// fedguard_sim: offline | run | sweep.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fedguard/common.h"
#include "fedguard/config.h"
#include "fedguard/defense.h"
#include "fedguard/sim.h"

namespace {

using fedguard::sim::ExperimentConfig;

struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> aggregator;
  std::optional<double> byz_fraction;
  std::optional<double> alpha;
  std::optional<int> workers;
  std::string out_dir = ".";
  std::string checkpoint;
};

void AddCommon(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config_path, "JSON experiment config");
  cmd->add_option("--seed", o.seed, "master seed");
  cmd->add_option("--out", o.out_dir, "output directory");
  cmd->add_option("--aggregator", o.aggregator,
                  "fedavg, median, bulyan, lfr, fltrust or fedguard");
  cmd->add_option("--byz-fraction", o.byz_fraction, "fraction of Byzantine clients");
  cmd->add_option("--alpha", o.alpha, "Dirichlet concentration");
  cmd->add_option("--workers", o.workers, "worker threads");
}

ExperimentConfig Resolve(const Overrides& o) {
  ExperimentConfig c = o.config_path.empty() ? fedguard::sim::DefaultConfig()
                                             : fedguard::sim::LoadConfig(o.config_path);
  if (o.seed) c.seed = *o.seed;
  if (o.aggregator) c.aggregator = *o.aggregator;
  if (o.byz_fraction) c.byz_fraction = *o.byz_fraction;
  if (o.alpha) c.alpha = *o.alpha;
  if (o.workers) c.workers = *o.workers;
  c.Validate();
  return c;
}

std::filesystem::path OutDir(const Overrides& o) {
  std::filesystem::path dir(o.out_dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::optional<fedguard::defense::OfflineArtifacts> MaybeLoad(const Overrides& o) {
  if (o.checkpoint.empty()) return std::nullopt;
  return fedguard::defense::LoadCheckpoint(o.checkpoint);
}

void PrintReport(const fedguard::sim::ExperimentReport& r, const std::string& path) {
  std::printf("final_accuracy=%.6f aer=%.6f csv=%s\n", r.final_accuracy, r.aer,
              path.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Federated-learning simulator with the FedGuard defense"};
  app.require_subcommand(1);

  Overrides o;
  std::vector<double> grid{0.0, 0.1, 0.3, 0.5, 0.7, 0.9};

  CLI::App* offline = app.add_subcommand("offline", "build and save defense artifacts");
  AddCommon(offline, o);

  CLI::App* run = app.add_subcommand("run", "run one experiment");
  AddCommon(run, o);
  run->add_option("--checkpoint", o.checkpoint, "reuse saved defense artifacts");

  CLI::App* sweep = app.add_subcommand("sweep", "one experiment per Byzantine fraction");
  AddCommon(sweep, o);
  sweep->add_option("--grid", grid, "Byzantine fractions")->delimiter(',');

  CLI11_PARSE(app, argc, argv);

  try {
    const ExperimentConfig config = Resolve(o);
    if (offline->parsed()) {
      const auto env = fedguard::sim::BuildEnvironment(config);
      const auto artifacts = fedguard::sim::RunOffline(env, config);
      const auto path = (OutDir(o) / "offline.ckpt").string();
      fedguard::defense::SaveCheckpoint(artifacts, path);
      std::printf("checkpoint=%s shadows=%zu\n", path.c_str(),
                  artifacts.defense_data.size());
    } else if (run->parsed()) {
      const auto artifacts = MaybeLoad(o);
      const auto path =
          (OutDir(o) / fedguard::sim::SweepFileName(config, config.byz_fraction)).string();
      const auto report = fedguard::sim::RunExperiment(
          config, path, artifacts ? &*artifacts : nullptr);
      PrintReport(report, path);
    } else {
      const auto dir = OutDir(o);
      const auto reports = fedguard::sim::Sweep(config, grid, dir.string());
      for (std::size_t i = 0; i < reports.size(); ++i) {
        PrintReport(reports[i],
                    (dir / fedguard::sim::SweepFileName(config, grid[i])).string());
      }
    }
  } catch (const fedguard::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
