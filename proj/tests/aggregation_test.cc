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

#include "fedguard/aggregation.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "fedguard/common.h"
#include "oracles.h"
#include "test_util.h"

namespace fedguard::aggregation {
namespace {

using test_util::RandomVector;

std::vector<nn::ParamVector> RandomUpdates(int n, int dim, std::mt19937_64& rng) {
  std::vector<nn::ParamVector> out;
  for (int i = 0; i < n; ++i) {
    out.push_back(RandomVector(static_cast<std::size_t>(dim), rng(), -2.0f, 2.0f));
  }
  return out;
}

void ExpectClose(const nn::ParamVector& got, const std::vector<double>& want) {
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t j = 0; j < want.size(); ++j) {
    EXPECT_LE(std::abs(got.values[j] - want[j]), 1e-6 * std::max(1.0, std::abs(want[j])))
        << "coordinate " << j;
  }
}

TEST(FedAvgTest, UniformMean) {
  const std::vector<nn::ParamVector> u{{{1, 2}, "a"}, {{3, 6}, "a"}};
  EXPECT_EQ(FedAvg(u).values, (std::vector<float>{2, 4}));
}

TEST(MedianTest, OddEvenAndExamples) {
  const std::vector<nn::ParamVector> odd{{{1}, "a"}, {{100}, "a"}, {{2}, "a"}};
  EXPECT_EQ(CoordinateMedian(odd).values[0], 2.0f);
  const std::vector<nn::ParamVector> even{{{1}, "a"}, {{4}, "a"}, {{2}, "a"}, {{3}, "a"}};
  EXPECT_EQ(CoordinateMedian(even).values[0], 2.5f);
}

TEST(MedianTest, NanSortsLast) {
  const float nan = std::numeric_limits<float>::quiet_NaN();
  const std::vector<nn::ParamVector> u{{{nan}, "a"}, {{1}, "a"}, {{2}, "a"}};
  EXPECT_EQ(CoordinateMedian(u).values[0], 2.0f);
}

TEST(MedianTest, MatchesOracleOnRandomInstances) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 250; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 6);
    const int dim = 1 + static_cast<int>(rng() % 4);
    const auto u = RandomUpdates(n, dim, rng);
    ExpectClose(CoordinateMedian(u), oracle::Median(u));
  }
}

TEST(KrumTest, MatchesOracleOnRandomInstances) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 250; ++trial) {
    const int n = 3 + static_cast<int>(rng() % 4);
    const int dim = 1 + static_cast<int>(rng() % 4);
    const int f = static_cast<int>(rng() % static_cast<std::uint64_t>(n - 2));
    const int m = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(n));
    const auto u = RandomUpdates(n, dim, rng);
    EXPECT_EQ(KrumSelect(u, f, m), oracle::Krum(u, f, m)) << "n=" << n << " f=" << f;
  }
}

TEST(KrumTest, OutlierIsPickedLastAndTiesGoLow) {
  const std::vector<nn::ParamVector> u{
      {{0, 0}, "a"}, {{0.1f, 0}, "a"}, {{0, 0.1f}, "a"}, {{50, 50}, "a"}};
  const auto sel = KrumSelect(u, 1, 4);
  EXPECT_EQ(sel.back(), 3);
  const std::vector<nn::ParamVector> same(4, nn::ParamVector{{1, 1}, "a"});
  EXPECT_EQ(KrumSelect(same, 1, 2), (std::vector<int>{0, 1}));
}

TEST(KrumTest, InfeasibleCounts) {
  const std::vector<nn::ParamVector> u(4, nn::ParamVector{{1}, "a"});
  EXPECT_THROW(KrumSelect(u, 2, 1), InfeasibleError);
  EXPECT_THROW(KrumSelect(u, 1, 5), InfeasibleError);
  EXPECT_THROW(KrumSelect(u, 1, 0), InfeasibleError);
}

TEST(BulyanTest, MatchesOracleOnRandomInstances) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 250; ++trial) {
    const int n = 3 + static_cast<int>(rng() % 4);
    const int dim = 1 + static_cast<int>(rng() % 4);
    const int f = static_cast<int>(rng() % static_cast<std::uint64_t>(n));
    const auto u = RandomUpdates(n, dim, rng);
    std::vector<int> selected;
    const auto got = Bulyan(u, f, &selected);
    const auto want = oracle::Bulyan(u, f);
    ExpectClose(got, want.values);
    EXPECT_EQ(selected, want.selected);
  }
}

TEST(BulyanTest, HighByzantineCountStillAggregates) {
  std::mt19937_64 rng(4);
  const auto u = RandomUpdates(10, 3, rng);
  std::vector<int> selected;
  const auto out = Bulyan(u, 9, &selected);
  EXPECT_EQ(selected.size(), 1u);
  EXPECT_EQ(out.values, u[static_cast<std::size_t>(selected[0])].values);
}

TEST(LfrTest, KeepsLowestLossModels) {
  const nn::ModelArch arch = nn::ModelArch::Mlp({1, 1, 2}, {}, 2);
  // Class = which pixel is lit; the "good" model scores that pixel.
  const LabeledDataset val({1, 1, 2}, 2, {1, 0, 0, 1}, {0, 1});
  const nn::ParamVector good{{5, 0, 0, 5, 0, 0}, arch.id()};
  const nn::ParamVector bad{{0, 5, 5, 0, 0, 0}, arch.id()};
  const nn::ParamVector flat = nn::ZeroModel(arch);
  const std::vector<nn::ParamVector> u{bad, good, flat};
  std::vector<int> selected;
  const auto out = Lfr(arch, u, val, 1, &selected);
  EXPECT_EQ(selected, (std::vector<int>{1, 2}));
  EXPECT_EQ(out, FedAvg(std::vector<nn::ParamVector>{good, flat}));
  EXPECT_THROW(Lfr(arch, u, LabeledDataset(), 1), DataError);
}

TEST(FlTrustTest, TrustWeightsAndRescaling) {
  const nn::ParamVector global{{0, 0}, "a"};
  const nn::ParamVector server{{1, 0}, "a"};
  // Aligned but 10x longer, orthogonal, opposite.
  const std::vector<nn::ParamVector> u{{{10, 0}, "a"}, {{0, 3}, "a"}, {{-1, 0}, "a"}};
  std::vector<int> selected;
  const auto out = FlTrust(u, server, global, &selected);
  EXPECT_EQ(selected, (std::vector<int>{0}));
  EXPECT_NEAR(out.values[0], 1.0f, 1e-6);
  EXPECT_NEAR(out.values[1], 0.0f, 1e-6);
}

TEST(FlTrustTest, MatchesOracleOnRandomInstances) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 6);
    const int dim = 1 + static_cast<int>(rng() % 4);
    const auto u = RandomUpdates(n, dim, rng);
    const auto global = RandomVector(static_cast<std::size_t>(dim), rng());
    const auto server = RandomVector(static_cast<std::size_t>(dim), rng());
    ExpectClose(FlTrust(u, server, global), oracle::FlTrust(u, server, global));
  }
}

TEST(FlTrustTest, ZeroServerDeltaKeepsGlobal) {
  const nn::ParamVector global{{1, 2}, "a"};
  const std::vector<nn::ParamVector> u{{{3, 3}, "a"}};
  EXPECT_EQ(FlTrust(u, global, global), global);
  const std::vector<nn::ParamVector> opposite{{{0, 1}, "a"}};
  EXPECT_EQ(FlTrust(opposite, nn::ParamVector{{2, 3}, "a"}, global), global);
}

TEST(CheckUpdatesTest, RejectsMixedOrEmpty) {
  EXPECT_THROW(FedAvg(std::vector<nn::ParamVector>{}), InfeasibleError);
  const std::vector<nn::ParamVector> mixed{{{1}, "a"}, {{1, 2}, "a"}};
  EXPECT_THROW(CoordinateMedian(mixed), DimensionError);
  const std::vector<nn::ParamVector> arch{{{1}, "a"}, {{1}, "b"}};
  EXPECT_THROW(FedAvg(arch), DimensionError);
}

}  // namespace
}  // namespace fedguard::aggregation
