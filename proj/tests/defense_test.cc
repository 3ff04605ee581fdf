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

#include "fedguard/defense.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "fedguard/common.h"
#include "fedguard/data.h"
#include "oracles.h"
#include "test_util.h"

namespace fedguard::defense {
namespace {

using test_util::TempPath;

ConfidenceMatrix RandomConfidences(std::size_t n, std::size_t l, std::mt19937_64& rng) {
  std::uniform_real_distribution<float> u(0.01f, 1.0f);
  ConfidenceMatrix c(n, l);
  for (std::size_t i = 0; i < n; ++i) {
    float sum = 0.0f;
    auto row = c.MutableRow(i);
    for (float& v : row) sum += (v = u(rng));
    for (float& v : row) v /= sum;
  }
  return c;
}

TEST(FeaturesTest, MatchesOracleOnRandomInstances) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 250; ++trial) {
    const std::size_t n = 1 + rng() % 8;
    const std::size_t l = 2 + rng() % 4;
    const auto a = RandomConfidences(n, l, rng);
    const auto b = RandomConfidences(n, l, rng);
    std::vector<int> labels(n);
    for (int& y : labels) y = static_cast<int>(rng() % l);
    const Features got = ExtractFeatures(a, b, labels);
    const auto want = oracle::Features(a, b, labels);
    EXPECT_NEAR(got.mse, want.mse, 1e-6 * std::max(1e-12, want.mse));
    EXPECT_NEAR(got.tcd, want.tcd, 1e-6 * std::max(1e-12, want.tcd));
    EXPECT_GE(got.mse, 0.0);
    EXPECT_LE(got.mse, 4.0);
    EXPECT_GE(got.tcd, 0.0);
    EXPECT_LE(got.tcd, 1.0);
  }
}

TEST(FeaturesTest, RowPermutationInvariant) {
  std::mt19937_64 rng(2);
  const auto a = RandomConfidences(8, 5, rng);
  const auto b = RandomConfidences(8, 5, rng);
  std::vector<int> labels{0, 1, 2, 3, 4, 0, 1, 2};
  std::vector<std::size_t> perm{3, 7, 0, 5, 1, 6, 2, 4};
  ConfidenceMatrix pa(8, 5);
  ConfidenceMatrix pb(8, 5);
  std::vector<int> pl(8);
  for (std::size_t i = 0; i < 8; ++i) {
    std::copy(a.Row(perm[i]).begin(), a.Row(perm[i]).end(), pa.MutableRow(i).begin());
    std::copy(b.Row(perm[i]).begin(), b.Row(perm[i]).end(), pb.MutableRow(i).begin());
    pl[i] = labels[perm[i]];
  }
  const Features x = ExtractFeatures(a, b, labels);
  const Features y = ExtractFeatures(pa, pb, pl);
  EXPECT_NEAR(x.mse, y.mse, 1e-12);
  EXPECT_NEAR(x.tcd, y.tcd, 1e-12);
}

TEST(FeaturesTest, HandExample) {
  const ConfidenceMatrix a(2, 2, {1.0f, 0.0f, 0.5f, 0.5f});
  const ConfidenceMatrix b(2, 2, {0.0f, 1.0f, 0.5f, 0.5f});
  const std::vector<int> labels{0, 1};
  const Features f = ExtractFeatures(a, b, labels);
  EXPECT_DOUBLE_EQ(f.mse, 0.5);  // (1 + 1 + 0 + 0) / 4
  EXPECT_DOUBLE_EQ(f.tcd, 0.5);  // (1 + 0) / 2
  EXPECT_EQ(ExtractFeatures(a, a, labels), (Features{0.0, 0.0}));
}

TEST(FeaturesTest, ShapeErrors) {
  const ConfidenceMatrix a(2, 2);
  const ConfidenceMatrix b(2, 3);
  const std::vector<int> labels{0, 1};
  EXPECT_THROW(ExtractFeatures(a, b, labels), DimensionError);
  EXPECT_THROW(ExtractFeatures(a, a, std::vector<int>{0}), DimensionError);
}

std::vector<FeatureSample> ToyDefenseData() {
  std::vector<FeatureSample> d;
  for (int i = 0; i < 6; ++i) d.push_back({{1e-6 * (1 + i), 1e-3 * (1 + i)}, kBenign});
  for (int i = 0; i < 6; ++i) d.push_back({{1e-2 * (1 + i), 0.3 + 0.1 * i}, kMalicious});
  return d;
}

TEST(SvmTest, SeparatesToyData) {
  const auto data = ToyDefenseData();
  const DefenseModel m = TrainDefenseSvm(data, {}, 3);
  for (const auto& s : data) EXPECT_EQ(m.IsBenign(s.x), s.y == kBenign);
  EXPECT_EQ(m.config.iterations, SvmConfig{}.iterations);
}

std::vector<FeatureSample> CornerData(int copies) {
  std::vector<FeatureSample> d;
  for (int i = 0; i < copies; ++i) {
    d.push_back({{0.0, 0.0}, kBenign});
    d.push_back({{10.0, 10.0}, kMalicious});
  }
  return d;
}

double Norm(const DefenseModel& m) { return std::hypot(m.w[0], m.w[1]); }

TEST(SvmTest, CornerSetTrainingAccuracy) {
  const auto data = CornerData(20);
  const DefenseModel m = TrainDefenseSvm(data, {}, 1);
  for (const auto& s : data) EXPECT_EQ(m.IsBenign(s.x), s.y == kBenign);
}

TEST(SvmTest, LargeLambdaShrinksWeights) {
  const auto data = CornerData(20);
  const DefenseModel loose = TrainDefenseSvm(data, {1e-3, 0.01, 200}, 1);
  const DefenseModel tight = TrainDefenseSvm(data, {1e3, 0.01, 200}, 1);
  EXPECT_LT(Norm(tight), Norm(loose));
}

TEST(SvmTest, DuplicatedDataKeepsSignPattern) {
  auto once = ToyDefenseData();
  auto twice = once;
  twice.insert(twice.end(), once.begin(), once.end());
  const DefenseModel a = TrainDefenseSvm(once, {}, 5);
  const DefenseModel b = TrainDefenseSvm(twice, {}, 5);
  for (double m = 0.0; m <= 0.06; m += 0.005) {
    for (double t = 0.0; t <= 0.9; t += 0.05) {
      EXPECT_EQ(a.IsBenign({m, t}), b.IsBenign({m, t})) << m << "," << t;
    }
  }
}

TEST(SvmTest, ZeroLambdaReachesZeroHingeLoss) {
  const auto data = ToyDefenseData();
  const DefenseModel m = TrainDefenseSvm(data, {0.0, 0.01, 5000}, 2);
  for (const auto& s : data) {
    const double y = s.y == kBenign ? 1.0 : -1.0;
    EXPECT_GE(y * m.Score(s.x), 1.0);
  }
}

TEST(SvmTest, DeterministicInSeed) {
  const auto data = ToyDefenseData();
  const DefenseModel a = TrainDefenseSvm(data, {}, 3);
  const DefenseModel b = TrainDefenseSvm(data, {}, 3);
  EXPECT_EQ(a.w, b.w);
  EXPECT_EQ(a.b, b.b);
}

TEST(SvmTest, RejectsSingleClassAndBadConfig) {
  auto data = ToyDefenseData();
  data.resize(6);
  EXPECT_THROW(TrainDefenseSvm(data, {}, 1), TrainingError);
  EXPECT_THROW(TrainDefenseSvm(ToyDefenseData(), {-1.0, 0.01, 10}, 1), ConfigError);
  EXPECT_THROW(TrainDefenseSvm(ToyDefenseData(), {1e-4, 0.0, 10}, 1), ConfigError);
}

TEST(SvmTest, ZeroAndNanScoresAreMalicious) {
  DefenseModel m;
  m.b = 0.0;
  EXPECT_FALSE(m.IsBenign({0.1, 0.1}));
  m.b = 1.0;
  EXPECT_TRUE(m.IsBenign({0.1, 0.1}));
  EXPECT_FALSE(m.IsBenign({std::numeric_limits<double>::quiet_NaN(), 0.1}));
}

// A small but real offline phase on synthetic data.
struct Fixture {
  nn::ModelArch arch = nn::ModelArch::Mlp({1, 8, 8}, {8}, 4);
  LabeledDataset seed_set;
  OfflineConfig config;

  Fixture() {
    data::SynthSpec spec;
    spec.classes = 4;
    spec.per_class = 3;
    spec.shape = {1, 8, 8};
    seed_set = data::SynthDataset(spec, 5);
    config.shadow_count = 16;
    config.shadow_train = {4, 8, 0.05f};
    for (auto k : attacks::kAllAttacks) config.catalog.push_back({.kind = k});
  }
};

TEST(ShadowTest, LabelsCatalogAndReference) {
  Fixture fx;
  const LabeledDataset pub = data::Replicate(fx.seed_set, 2);
  const ShadowSet set = BuildShadowSet(fx.arch, pub, 16, fx.config.catalog,
                                       fx.config.shadow_train, 7);
  ASSERT_EQ(set.size(), 16u);
  int benign = 0;
  std::vector<int> per_attack(attacks::kAllAttacks.size(), 0);
  for (std::size_t j = 0; j < set.size(); ++j) {
    if (set.labels[j] == kBenign) {
      ++benign;
      EXPECT_FALSE(set.attacks[j].has_value());
    } else {
      ASSERT_TRUE(set.attacks[j].has_value());
      ++per_attack[static_cast<std::size_t>(*set.attacks[j])];
    }
  }
  EXPECT_EQ(benign, 8);
  for (int c : per_attack) EXPECT_GE(c, 1);
  EXPECT_EQ(set.labels[static_cast<std::size_t>(set.reference_index)], kBenign);
  EXPECT_NE(set.models[0], set.models[1]);
}

TEST(ShadowTest, TooFewShadowsForCatalog) {
  Fixture fx;
  EXPECT_THROW(BuildShadowSet(fx.arch, fx.seed_set, 12, fx.config.catalog,
                              fx.config.shadow_train, 1),
               ConfigError);
  EXPECT_THROW(BuildShadowSet(fx.arch, fx.seed_set, 1, fx.config.catalog,
                              fx.config.shadow_train, 1),
               ConfigError);
}

TEST(OfflineTest, DeterministicAndWorkerIndependent) {
  Fixture fx;
  const OfflineArtifacts a = RunOfflinePhase(fx.arch, fx.seed_set, 2, fx.config, 3, 1);
  const OfflineArtifacts b = RunOfflinePhase(fx.arch, fx.seed_set, 2, fx.config, 3, 2);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.defense_data.size(), 16u);
  EXPECT_EQ(a.defense_data[static_cast<std::size_t>(a.reference_index)].x, (Features{0.0, 0.0}));
  EXPECT_EQ(a.seed_ids, fx.seed_set.ids());
}

TEST(OfflineTest, ReferenceClassifiesBenign) {
  Fixture fx;
  fx.config.shadow_train = {20, 8, 0.05f};
  const LabeledDataset pub = data::Replicate(fx.seed_set, 2);
  const OfflineArtifacts a = RunOfflinePhase(fx.arch, fx.seed_set, 2, fx.config, 3);
  const Verdict self = ClassifyClient(fx.arch, a.reference_model, pub, a.reference_model, a.defense);
  EXPECT_EQ(self.x, (Features{0.0, 0.0}));
  EXPECT_TRUE(self.benign);
}

TEST(FilterTest, FallbackKeepsSmallestMse) {
  Fixture fx;
  const OfflineArtifacts art = RunOfflinePhase(fx.arch, fx.seed_set, 1, fx.config, 3);
  DefenseModel reject_all;
  reject_all.b = -1.0;
  std::vector<nn::ParamVector> clients{
      attacks::SignFlip(art.reference_model), art.reference_model,
      nn::InitModel(fx.arch, 99)};
  const FilterResult r =
      FilterRound(fx.arch, clients, fx.seed_set, art.reference_model, reject_all);
  EXPECT_TRUE(r.fallback);
  EXPECT_EQ(r.selected, (std::vector<int>{1}));

  // NaN MSE never wins the fallback.
  std::fill(clients[1].values.begin(), clients[1].values.end(),
            std::numeric_limits<float>::quiet_NaN());
  const FilterResult n =
      FilterRound(fx.arch, clients, fx.seed_set, art.reference_model, reject_all);
  EXPECT_EQ(n.selected.size(), 1u);
  EXPECT_NE(n.selected[0], 1);
}

TEST(FilterTest, AcceptAllKeepsEveryone) {
  Fixture fx;
  const nn::ParamVector ref = nn::InitModel(fx.arch, 1);
  DefenseModel accept_all;
  accept_all.b = 1.0;
  const std::vector<nn::ParamVector> clients(3, ref);
  const FilterResult r = FilterRound(fx.arch, clients, fx.seed_set, ref, accept_all);
  EXPECT_FALSE(r.fallback);
  EXPECT_EQ(r.selected, (std::vector<int>{0, 1, 2}));
}

TEST(CheckpointTest, RoundTripIsExact) {
  Fixture fx;
  const OfflineArtifacts a = RunOfflinePhase(fx.arch, fx.seed_set, 2, fx.config, 3);
  const std::string path = TempPath("offline.ckpt");
  SaveCheckpoint(a, path);
  EXPECT_EQ(LoadCheckpoint(path), a);
}

std::string ReadAll(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteAll(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

TEST(CheckpointTest, RejectsCorruptFiles) {
  Fixture fx;
  const OfflineArtifacts a = RunOfflinePhase(fx.arch, fx.seed_set, 1, fx.config, 3);
  const std::string path = TempPath("corrupt.ckpt");
  SaveCheckpoint(a, path);
  const std::string good = ReadAll(path);

  std::string text = good;
  text.replace(text.find("format_version 1"), 16, "format_version 2");
  WriteAll(path, text);
  try {
    LoadCheckpoint(path);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find(path), std::string::npos);
  }

  WriteAll(path, good.substr(0, good.size() / 2));
  EXPECT_THROW(LoadCheckpoint(path), FormatError);

  text = good;
  text.replace(text.find("svm_lambda"), 10, "svm_lambdx");
  WriteAll(path, text);
  EXPECT_THROW(LoadCheckpoint(path), FormatError);

  EXPECT_THROW(LoadCheckpoint(TempPath("absent.ckpt")), IoError);
}

}  // namespace
}  // namespace fedguard::defense
