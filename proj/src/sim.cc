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

#include "fedguard/sim.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include "fedguard/aggregation.h"
#include "fedguard/common.h"
#include "fedguard/data.h"

namespace fedguard::sim {
namespace {

std::string Format(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return buf;
}

std::string UtcTimestamp() {
  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

bool HasNonFinite(const nn::ParamVector& p) {
  return std::any_of(p.values.begin(), p.values.end(),
                     [](float v) { return !std::isfinite(v); });
}

int EffectiveF(const Environment& env, const ExperimentConfig& config) {
  return config.f_estimate >= 0 ? config.f_estimate : ByzantineCount(env.roles);
}

// Appends rows to the experiment CSV, flushing after each one.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const ExperimentConfig& config)
      : path_(path), config_(config) {
    if (path_.empty()) return;
    out_.open(path_, std::ios::trunc);
    if (!out_) throw IoError(path_ + ": cannot open for writing");
    out_ << "# fedguard-sim seed=" << config.seed
         << " generated=" << UtcTimestamp() << "\n"
         << CsvHeader() << "\n";
    Flush();
  }

  void Round(const RoundRecord& r) {
    if (path_.empty()) return;
    std::string aer;
    if (r.n_b > 0) aer = Format("%.6f", static_cast<double>(r.n_m) / r.n_b);
    Row(r.round, r.accuracy, r.n_b, r.n_m, static_cast<int>(r.selected.size()),
        r.mistaken, aer);
  }

  void Summary(const ExperimentReport& report) {
    if (path_.empty()) return;
    int n_b = 0;
    int n_m = 0;
    int selected = 0;
    std::array<int, kAttackCount> mistaken{};
    for (const auto& r : report.records) {
      n_b += r.n_b;
      n_m += r.n_m;
      selected += static_cast<int>(r.selected.size());
      for (std::size_t a = 0; a < kAttackCount; ++a) mistaken[a] += r.mistaken[a];
    }
    Row(-1, report.final_accuracy, n_b, n_m, selected, mistaken,
        Format("%.6f", report.aer));
  }

 private:
  void Row(int round, double accuracy, int n_b, int n_m, int selected,
           const std::array<int, kAttackCount>& mistaken, const std::string& aer) {
    const std::string alpha = config_.partition_mode == data::PartitionMode::kIid
                                  ? "iid"
                                  : Format("%.6g", config_.alpha);
    out_ << round << ',' << config_.aggregator << ','
         << Format("%.6g", config_.byz_fraction) << ',' << alpha << ','
         << Format("%.6f", accuracy) << ',' << n_b << ',' << n_m << ','
         << selected;
    for (int m : mistaken) out_ << ',' << m;
    out_ << ',' << aer << "\n";
    Flush();
  }

  void Flush() {
    out_.flush();
    if (!out_) throw IoError(path_ + ": write failed");
  }

  std::string path_;
  const ExperimentConfig& config_;
  std::ofstream out_;
};

void CheckArtifacts(const Environment& env, const ExperimentConfig& config,
                    const defense::OfflineArtifacts& a) {
  if (a.arch_id != env.arch.id()) {
    throw ConfigError("defense artifacts were built for model " + a.arch_id +
                      ", experiment uses " + env.arch.id());
  }
  if (a.replication != config.replication || a.seed_ids != env.seed_set.ids()) {
    throw ConfigError("defense artifacts were built for a different public dataset");
  }
}

}  // namespace

std::size_t AttackSlot(attacks::AttackKind kind) {
  const auto it = std::find(attacks::kAllAttacks.begin(), attacks::kAllAttacks.end(), kind);
  return static_cast<std::size_t>(it - attacks::kAllAttacks.begin());
}

Roles AssignRoles(int n, double byz_fraction,
                  const std::vector<attacks::AttackSpec>& catalog,
                  std::uint64_t seed) {
  if (n < 1) throw ConfigError("need at least one client");
  if (!(byz_fraction >= 0.0 && byz_fraction <= 1.0)) {
    throw ConfigError("byz_fraction must lie in [0, 1]");
  }
  const int byz = static_cast<int>(std::llround(byz_fraction * n));
  Roles roles(static_cast<std::size_t>(n));
  if (byz == 0) return roles;
  if (catalog.empty()) throw ConfigError("Byzantine clients need a non-empty attack catalog");

  std::mt19937_64 rng(seed);
  std::vector<int> clients(static_cast<std::size_t>(n));
  std::iota(clients.begin(), clients.end(), 0);
  std::shuffle(clients.begin(), clients.end(), rng);

  const int c = static_cast<int>(catalog.size());
  std::vector<int> kinds(static_cast<std::size_t>(c));
  std::iota(kinds.begin(), kinds.end(), 0);
  if (byz < c) {
    std::shuffle(kinds.begin(), kinds.end(), rng);
    kinds.resize(static_cast<std::size_t>(byz));
  } else {
    std::uniform_int_distribution<int> pick(0, c - 1);
    while (static_cast<int>(kinds.size()) < byz) kinds.push_back(pick(rng));
    std::shuffle(kinds.begin(), kinds.end(), rng);
  }
  for (int t = 0; t < byz; ++t) {
    roles[static_cast<std::size_t>(clients[static_cast<std::size_t>(t)])] =
        catalog[static_cast<std::size_t>(kinds[static_cast<std::size_t>(t)])];
  }
  return roles;
}

int ByzantineCount(const Roles& roles) {
  return static_cast<int>(std::count_if(roles.begin(), roles.end(),
                                        [](const auto& r) { return r.has_value(); }));
}

Environment BuildEnvironment(const ExperimentConfig& config) {
  config.Validate();
  const DatasetConfig& dc = config.dataset;
  LabeledDataset train;
  LabeledDataset test;
  if (dc.source == "synthetic") {
    train = data::SynthDataset(dc.synthetic, DeriveSeed(config.seed, SeedStream::kSynthTrain));
    data::SynthSpec test_spec = dc.synthetic;
    test_spec.per_class = dc.synthetic_test_per_class;
    test = data::SynthDataset(test_spec, DeriveSeed(config.seed, SeedStream::kSynthTest));
  } else {
    train = data::LoadIdx(dc.train_images, dc.train_labels);
    test = data::LoadIdx(dc.test_images, dc.test_labels, train.class_count());
  }
  if (dc.max_train > 0) train = train.Head(static_cast<std::size_t>(dc.max_train));
  if (dc.max_test > 0) test = test.Head(static_cast<std::size_t>(dc.max_test));
  if (!(test.shape() == train.shape())) {
    throw DataError("train and test images differ in shape");
  }

  nn::ModelArch arch = BuildArch(config, train.shape(), train.class_count());
  data::PartitionConfig pc;
  pc.mode = config.partition_mode;
  pc.alpha = config.alpha;
  pc.client_count = config.clients;
  pc.seed = DeriveSeed(config.seed, SeedStream::kPartition);
  std::vector<LabeledDataset> private_sets = data::Partition(train, pc);
  LabeledDataset seed_set = data::SampleSeed(
      train, config.seed_fraction, DeriveSeed(config.seed, SeedStream::kSeedSample));
  LabeledDataset pub = data::Replicate(seed_set, config.replication);
  Roles roles = AssignRoles(config.clients, config.byz_fraction, config.catalog,
                            DeriveSeed(config.seed, SeedStream::kRoles));
  return Environment{std::move(arch),         std::move(train), std::move(test),
                     std::move(private_sets), std::move(seed_set), std::move(pub),
                     std::move(roles)};
}

std::vector<nn::ParamVector> LocalUpdates(const Environment& env,
                                          const ExperimentConfig& config,
                                          const nn::ParamVector& global,
                                          int round) {
  const std::size_t n = env.private_sets.size();
  std::vector<nn::ParamVector> uploads(n);
  const auto r = static_cast<std::uint64_t>(round);
  ParallelFor(n, config.workers, [&](std::size_t i) {
    const auto& role = env.roles[i];
    const std::uint64_t attack_seed =
        DeriveSeed(config.seed, SeedStream::kClientAttack, {r, i});
    const std::uint64_t train_seed =
        DeriveSeed(config.seed, SeedStream::kClientTrain, {r, i});
    LabeledDataset local;
    if (role && attacks::IsDataAttack(role->kind)) {
      if (config.data_attack_scope == DataAttackScope::kLocal) {
        local = attacks::ApplyDataAttack(
            *role, LabeledDataset::Concat(env.pub, env.private_sets[i]), attack_seed);
      } else {
        local = LabeledDataset::Concat(
            env.pub, attacks::ApplyDataAttack(*role, env.private_sets[i], attack_seed));
      }
    } else {
      local = LabeledDataset::Concat(env.pub, env.private_sets[i]);
    }
    nn::ParamVector model = nn::TrainLocal(env.arch, global, local, config.local, train_seed);
    if (role && !attacks::IsDataAttack(role->kind)) {
      model = attacks::ApplyModelAttack(*role, model, attack_seed);
    }
    uploads[i] = std::move(model);
  });
  return uploads;
}

AggregateResult Aggregate(const Environment& env, const ExperimentConfig& config,
                          const std::vector<nn::ParamVector>& uploads,
                          const nn::ParamVector& global, int round,
                          const defense::OfflineArtifacts* offline) {
  const std::string& rule = config.aggregator;
  AggregateResult out;
  if (rule == "fedavg") {
    out.model = aggregation::FedAvg(uploads);
  } else if (rule == "median") {
    out.model = aggregation::CoordinateMedian(uploads);
  } else if (rule == "bulyan") {
    std::vector<int> sel;
    out.model = aggregation::Bulyan(uploads, EffectiveF(env, config), &sel);
    out.selected = std::move(sel);
  } else if (rule == "lfr") {
    std::vector<int> sel;
    out.model = aggregation::Lfr(env.arch, uploads, env.seed_set, EffectiveF(env, config), &sel);
    out.selected = std::move(sel);
  } else if (rule == "fltrust") {
    const nn::ParamVector server = nn::TrainLocal(
        env.arch, global, env.seed_set, config.local,
        DeriveSeed(config.seed, SeedStream::kServerTrain, {static_cast<std::uint64_t>(round)}));
    std::vector<int> sel;
    out.model = aggregation::FlTrust(uploads, server, global, &sel);
    out.selected = std::move(sel);
  } else if (rule == "fedguard") {
    if (offline == nullptr) throw ConfigError("fedguard needs offline defense artifacts");
    const defense::FilterResult filter =
        defense::FilterRound(env.arch, uploads, env.pub, offline->reference_model,
                             offline->defense, config.workers);
    std::vector<nn::ParamVector> kept;
    for (int i : filter.selected) kept.push_back(uploads[static_cast<std::size_t>(i)]);
    out.model = aggregation::FedAvg(kept);
    out.selected = filter.selected;
    out.fallback = filter.fallback;
  } else {
    throw ConfigError("unknown aggregator '" + rule + "'");
  }
  return out;
}

RoundRecord RunRound(const Environment& env, const ExperimentConfig& config,
                     nn::ParamVector& global, int round,
                     const defense::OfflineArtifacts* offline) {
  const std::vector<nn::ParamVector> uploads = LocalUpdates(env, config, global, round);
  AggregateResult agg = Aggregate(env, config, uploads, global, round, offline);

  RoundRecord rec;
  rec.round = round;
  rec.fallback = agg.fallback;
  for (const auto& u : uploads) rec.nonfinite_uploads += HasNonFinite(u) ? 1 : 0;
  if (agg.selected) {
    rec.selected = *agg.selected;
  } else {
    rec.selected.resize(uploads.size());
    std::iota(rec.selected.begin(), rec.selected.end(), 0);
  }
  rec.n_b = ByzantineCount(env.roles);
  // fedavg and median count every Byzantine update as selected.
  for (int i : rec.selected) {
    const auto& role = env.roles[static_cast<std::size_t>(i)];
    if (!role) continue;
    ++rec.n_m;
    ++rec.mistaken[AttackSlot(role->kind)];
  }
  global = std::move(agg.model);
  rec.accuracy = nn::Evaluate(env.arch, global, env.test);
  return rec;
}

double ComputeAer(const std::vector<RoundRecord>& records) {
  double sum = 0.0;
  int rounds = 0;
  for (const auto& r : records) {
    if (r.n_b < 1) continue;
    sum += static_cast<double>(r.n_m) / static_cast<double>(r.n_b);
    ++rounds;
  }
  return rounds == 0 ? 0.0 : sum / rounds;
}

std::string CsvHeader() {
  std::string h = "round,aggregator,byz_fraction,alpha,accuracy,n_b,n_m,selected_count";
  for (auto kind : attacks::kAllAttacks) {
    h += ",mistaken_";
    h += attacks::AttackName(kind);
  }
  h += ",aer";
  return h;
}

defense::OfflineArtifacts RunOffline(const Environment& env,
                                     const ExperimentConfig& config) {
  defense::OfflineConfig oc;
  oc.shadow_count = config.shadow_count;
  oc.shadow_train = config.shadow_train;
  oc.catalog = config.catalog;
  oc.svm = config.svm;
  return defense::RunOfflinePhase(env.arch, env.seed_set, config.replication, oc,
                                  config.seed, config.workers);
}

ExperimentReport RunExperiment(const ExperimentConfig& config,
                               const std::string& csv_path,
                               const defense::OfflineArtifacts* offline) {
  const Environment env = BuildEnvironment(config);
  std::optional<defense::OfflineArtifacts> own;
  if (config.aggregator == "fedguard" && offline == nullptr) {
    own = RunOffline(env, config);
    offline = &*own;
  }
  if (offline != nullptr) CheckArtifacts(env, config, *offline);

  CsvWriter csv(csv_path, config);
  ExperimentReport report;
  nn::ParamVector global = nn::InitModel(env.arch, DeriveSeed(config.seed, SeedStream::kModelInit));
  for (int r = 1; r <= config.rounds; ++r) {
    report.records.push_back(RunRound(env, config, global, r, offline));
    csv.Round(report.records.back());
  }
  report.final_accuracy = report.records.back().accuracy;
  report.aer = ComputeAer(report.records);
  csv.Summary(report);
  return report;
}

std::string SweepFileName(const ExperimentConfig& config, double fraction) {
  return config.aggregator + Format("_byz%.3f.csv", fraction);
}

std::vector<ExperimentReport> Sweep(const ExperimentConfig& config,
                                    const std::vector<double>& fractions,
                                    const std::string& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError(out_dir + ": " + ec.message());
  std::optional<defense::OfflineArtifacts> offline;
  if (config.aggregator == "fedguard") offline = RunOffline(BuildEnvironment(config), config);
  std::vector<ExperimentReport> reports;
  for (double f : fractions) {
    ExperimentConfig c = config;
    c.byz_fraction = f;
    const auto path = std::filesystem::path(out_dir) / SweepFileName(c, f);
    reports.push_back(RunExperiment(c, path.string(), offline ? &*offline : nullptr));
  }
  return reports;
}

}  // namespace fedguard::sim
