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

#ifndef FEDGUARD_CONFIG_H_
#define FEDGUARD_CONFIG_H_

#include <cstdint>
#include <string>
#include <vector>

#include "fedguard/attacks.h"
#include "fedguard/data.h"
#include "fedguard/defense.h"
#include "fedguard/nn.h"

namespace fedguard::sim {

struct DatasetConfig {
  // "synthetic" or "idx".
  std::string source = "synthetic";
  std::string train_images;
  std::string train_labels;
  std::string test_images;
  std::string test_labels;
  // Keep only the first N rows; 0 keeps everything.
  int max_train = 0;
  int max_test = 0;
  data::SynthSpec synthetic;
  int synthetic_test_per_class = 100;
};

struct ModelConfig {
  // "mlp" or "cnn".
  std::string arch = "mlp";
  std::vector<int> hidden{32};
  int conv1 = 32;
  int conv2 = 64;
  int dense = 128;
};

// Where data-poisoning clients apply their transform.
enum class DataAttackScope {
  kLocal,    // the whole local training set, D_pub plus D_pri
  kPrivate,  // D_pri only
};

// Every knob of one experiment. Defaults mirror the evaluated setting: 30
// clients, 30 rounds, 10 local epochs, batch 32, lr 0.01, 100 shadow models
// trained for 100 epochs, d = 100, seed fraction 0.01%, alpha = 0.01.
struct ExperimentConfig {
  std::uint64_t seed = 0;
  int workers = 1;

  DatasetConfig dataset;

  data::PartitionMode partition_mode = data::PartitionMode::kDirichlet;
  double alpha = 0.01;
  int clients = 30;

  ModelConfig model;

  int rounds = 30;
  nn::TrainConfig local{10, 32, 0.01f};

  double seed_fraction = 0.0001;
  int replication = 100;
  int shadow_count = 100;
  nn::TrainConfig shadow_train{100, 32, 0.01f};
  defense::SvmConfig svm;

  double byz_fraction = 0.0;
  std::vector<attacks::AttackSpec> catalog;
  DataAttackScope data_attack_scope = DataAttackScope::kLocal;

  // fedavg, median, bulyan, lfr, fltrust or fedguard.
  std::string aggregator = "fedguard";
  // Byzantine count assumed by bulyan/lfr; negative means the true count.
  int f_estimate = -1;

  // Throws ConfigError on out-of-range values.
  void Validate() const;
};

// All seven attacks with the evaluated constants (50% poisoning, bit 10,
// z = 1, U[-1, 1], factor 0.5, 3x3 trigger to label 0).
std::vector<attacks::AttackSpec> DefaultCatalog();

ExperimentConfig DefaultConfig();

// JSON with the sections seed, workers, dataset{...}, partition{...},
// model{...}, training{...}, fedguard{...}, attacks{...}, aggregation{...}.
// Missing keys keep their defaults; unknown keys throw ConfigError.
ExperimentConfig ParseConfig(const std::string& json_text);
ExperimentConfig LoadConfig(const std::string& path);
std::string ConfigToJson(const ExperimentConfig& config);

nn::ModelArch BuildArch(const ExperimentConfig& config, const Shape& input,
                        int class_count);

bool IsKnownAggregator(const std::string& name);

}  // namespace fedguard::sim

#endif  // FEDGUARD_CONFIG_H_
