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

// Experiment orchestration: environment setup, the round loop, metrics and
// CSV output.

#ifndef FEDGUARD_SIM_H_
#define FEDGUARD_SIM_H_

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fedguard/attacks.h"
#include "fedguard/config.h"
#include "fedguard/dataset.h"
#include "fedguard/defense.h"
#include "fedguard/nn.h"

namespace fedguard::sim {

inline constexpr std::size_t kAttackCount = attacks::kAllAttacks.size();

// Position of `kind` in attacks::kAllAttacks; indexes per-attack counters.
std::size_t AttackSlot(attacks::AttackKind kind);

// Attack run by each client; nullopt for benign clients.
using Roles = std::vector<std::optional<attacks::AttackSpec>>;

// round(byz_fraction * n) Byzantine clients picked by a seeded permutation.
// Fewer Byzantine clients than catalog entries: attacks drawn without
// repetition. Otherwise every attack appears once and the rest are drawn
// uniformly from the catalog. Throws ConfigError when n < 1 or the catalog is
// empty while Byzantine clients are requested.
Roles AssignRoles(int n, double byz_fraction,
                  const std::vector<attacks::AttackSpec>& catalog,
                  std::uint64_t seed);

int ByzantineCount(const Roles& roles);

// Everything fixed before round 1.
struct Environment {
  nn::ModelArch arch;
  LabeledDataset train;
  LabeledDataset test;
  std::vector<LabeledDataset> private_sets;
  LabeledDataset seed_set;
  // seed_set replicated `replication` times; shared with every client.
  LabeledDataset pub;
  Roles roles;
};

Environment BuildEnvironment(const ExperimentConfig& config);

struct RoundRecord {
  int round = 0;
  std::vector<int> selected;
  int n_b = 0;
  int n_m = 0;
  std::array<int, kAttackCount> mistaken{};
  double accuracy = 0.0;
  int nonfinite_uploads = 0;
  bool fallback = false;

  bool operator==(const RoundRecord&) const = default;
};

// Model uploaded by every client in round `round` (1-based), starting from
// `global`. Independent of the aggregator and of the worker count.
std::vector<nn::ParamVector> LocalUpdates(const Environment& env,
                                          const ExperimentConfig& config,
                                          const nn::ParamVector& global,
                                          int round);

struct AggregateResult {
  nn::ParamVector model;
  // Clients whose update entered the aggregate; nullopt for fedavg and median,
  // which use every update.
  std::optional<std::vector<int>> selected;
  bool fallback = false;
};

// `offline` is required for fedguard and ignored otherwise.
AggregateResult Aggregate(const Environment& env, const ExperimentConfig& config,
                          const std::vector<nn::ParamVector>& uploads,
                          const nn::ParamVector& global, int round,
                          const defense::OfflineArtifacts* offline);

RoundRecord RunRound(const Environment& env, const ExperimentConfig& config,
                     nn::ParamVector& global, int round,
                     const defense::OfflineArtifacts* offline);

// Mean of n_m / n_b over rounds with n_b >= 1; 0 when there are none.
double ComputeAer(const std::vector<RoundRecord>& records);

struct ExperimentReport {
  std::vector<RoundRecord> records;
  double final_accuracy = 0.0;
  double aer = 0.0;
};

defense::OfflineArtifacts RunOffline(const Environment& env,
                                     const ExperimentConfig& config);

// Runs the offline phase when the aggregator is fedguard (unless `offline`
// is given), then every round. When `csv_path` is non-empty the CSV is
// rewritten and flushed after every round.
ExperimentReport RunExperiment(const ExperimentConfig& config,
                               const std::string& csv_path = "",
                               const defense::OfflineArtifacts* offline = nullptr);

// Comma-separated header of the experiment CSV.
std::string CsvHeader();

// One run per byz_fraction, sharing a single offline phase; writes
// <out_dir>/<aggregator>_byz<fraction>.csv for each.
std::vector<ExperimentReport> Sweep(const ExperimentConfig& config,
                                    const std::vector<double>& fractions,
                                    const std::string& out_dir);

std::string SweepFileName(const ExperimentConfig& config, double fraction);

}  // namespace fedguard::sim

#endif  // FEDGUARD_SIM_H_
