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

// FedGuard: a membership-inference style filter for uploaded client models.
//
// Offline, the server trains shadow models on the public dataset D_pub (the
// seed set replicated d times), half honestly and half under known attacks,
// picks one benign shadow as the reference model, and summarises every shadow
// by two features measured against the reference on D_pub:
//
//   MSE = 1/(N*L) * sum_i ||C_model[i] - C_ref[i]||^2
//   TCD = 1/N     * sum_i |C_model[i][l_i] - C_ref[i][l_i]|
//
// A linear SVM trained with the hinge-loss SGD loop below separates benign
// (y = 1) from malicious (y = 0) shadows. Online, every uploaded model is
// featurised the same way and only models classified benign are averaged; if
// none is, the model with the smallest MSE is kept.

#ifndef FEDGUARD_DEFENSE_H_
#define FEDGUARD_DEFENSE_H_

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fedguard/attacks.h"
#include "fedguard/dataset.h"
#include "fedguard/nn.h"

namespace fedguard::defense {

inline constexpr int kMalicious = 0;
inline constexpr int kBenign = 1;

struct Features {
  double mse = 0.0;
  double tcd = 0.0;
  bool operator==(const Features&) const = default;
};

struct FeatureSample {
  Features x;
  int y = kBenign;
  bool operator==(const FeatureSample&) const = default;
};

struct ShadowSet {
  std::vector<nn::ParamVector> models;
  std::vector<int> labels;
  // Attack simulated by each malicious shadow; empty for benign ones.
  std::vector<std::optional<attacks::AttackKind>> attacks;
  int reference_index = 0;

  std::size_t size() const { return models.size(); }
};

struct SvmConfig {
  double lambda = 1e-4;
  double eta = 0.01;
  int iterations = 2000;
};

// Linear decision function over standardised features. Immutable once
// trained; safe to share across threads.
struct DefenseModel {
  std::array<double, 2> w{0.0, 0.0};
  double b = 0.0;
  std::array<double, 2> feature_mean{0.0, 0.0};
  std::array<double, 2> feature_scale{1.0, 1.0};
  SvmConfig config;

  std::array<double, 2> Normalize(const Features& x) const;
  double Score(const Features& x) const;
  // Strictly positive score means benign; zero and NaN are malicious.
  bool IsBenign(const Features& x) const { return Score(x) > 0.0; }
};

// Half the shadows (rounded up) are trained honestly on `pub`; the rest cycle
// through `catalog`. Data attacks poison a copy of `pub` before training,
// model attacks transform an honestly trained shadow. Each shadow gets its own
// initialisation and shuffle seed derived from `seed`. The reference is drawn
// uniformly from the benign shadows. Throws ConfigError when k < 2, the
// catalog is empty, or there are fewer malicious shadows than attack kinds.
ShadowSet BuildShadowSet(const nn::ModelArch& arch, const LabeledDataset& pub,
                         int k, const std::vector<attacks::AttackSpec>& catalog,
                         const nn::TrainConfig& train, std::uint64_t seed,
                         int workers = 1);

// Throws DimensionError unless both matrices are N x L and labels has N
// entries.
Features ExtractFeatures(const ConfidenceMatrix& c_model,
                         const ConfidenceMatrix& c_ref,
                         std::span<const int> labels);

// Features of every shadow against the reference shadow on `pub`.
std::vector<FeatureSample> DefenseData(const nn::ModelArch& arch,
                                       const ShadowSet& shadows,
                                       const LabeledDataset& pub,
                                       int workers = 1);

// Standardises both features over `data`, maps y {0,1} -> {-1,+1}, then runs
// `iterations` epochs of: if y(w.x + b) < 1 { w -= eta(lambda w - y x);
// b += eta y } else { w -= eta lambda w }. Sample order per epoch comes from
// `seed`. The decay factor 1 - eta*lambda is clamped at 0. lambda = 0 gives a
// plain perceptron-with-margin loop. Throws
// TrainingError when `data` holds a single class.
DefenseModel TrainDefenseSvm(std::span<const FeatureSample> data,
                             const SvmConfig& config, std::uint64_t seed);

struct Verdict {
  bool benign = false;
  Features x;
};

Verdict ClassifyClient(const nn::ModelArch& arch,
                       const nn::ParamVector& client_model,
                       const LabeledDataset& pub, const ConfidenceMatrix& c_ref,
                       const DefenseModel& model);
Verdict ClassifyClient(const nn::ModelArch& arch,
                       const nn::ParamVector& client_model,
                       const LabeledDataset& pub,
                       const nn::ParamVector& ref_model,
                       const DefenseModel& model);

struct FilterResult {
  std::vector<int> selected;
  std::vector<Verdict> verdicts;
  // True when every client was classified malicious and the min-MSE client
  // was kept instead.
  bool fallback = false;
};

// Never returns an empty selection. NaN MSE counts as +infinity in the
// fallback; ties go to the lowest index.
FilterResult FilterRound(const nn::ModelArch& arch,
                         std::span<const nn::ParamVector> client_models,
                         const LabeledDataset& pub,
                         const nn::ParamVector& ref_model,
                         const DefenseModel& model, int workers = 1);

struct OfflineConfig {
  int shadow_count = 100;
  nn::TrainConfig shadow_train{100, 32, 0.01f};
  std::vector<attacks::AttackSpec> catalog;
  SvmConfig svm;
};

// Everything the online phase needs; persisted by SaveCheckpoint.
struct OfflineArtifacts {
  std::string arch_id;
  int replication = 1;
  std::vector<std::int64_t> seed_ids;
  int reference_index = 0;
  nn::ParamVector reference_model;
  std::vector<FeatureSample> defense_data;
  // Attack name per defense sample ("benign" for honest shadows).
  std::vector<std::string> defense_sources;
  DefenseModel defense;

  bool operator==(const OfflineArtifacts& o) const;
};

OfflineArtifacts RunOfflinePhase(const nn::ModelArch& arch,
                                 const LabeledDataset& seed_dataset,
                                 int replication, const OfflineConfig& config,
                                 std::uint64_t seed, int workers = 1);

inline constexpr int kCheckpointVersion = 1;

// Text checkpoint, one key per line, floats as exact hexadecimal literals:
//
//   fedguard-offline-checkpoint
//   format_version 1
//   arch_id <id>
//   replication <d>
//   seed_ids <count> <id>...
//   svm_lambda <x>
//   svm_eta <x>
//   svm_iterations <T>
//   svm_w <w0> <w1>
//   svm_b <b>
//   feature_mean <m0> <m1>
//   feature_scale <s0> <s1>
//   reference_index <i>
//   defense_data <k>      followed by k lines "<mse> <tcd> <y> <source>"
//   reference_model <count>   followed by the values, whitespace separated
//   end
void SaveCheckpoint(const OfflineArtifacts& artifacts, const std::string& path);
// Throws FormatError (naming the file) on any structural problem or a
// format_version other than kCheckpointVersion.
OfflineArtifacts LoadCheckpoint(const std::string& path);

}  // namespace fedguard::defense

#endif  // FEDGUARD_DEFENSE_H_
