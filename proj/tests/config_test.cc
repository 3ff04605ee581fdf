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

#include "fedguard/config.h"

#include <string>

#include <gtest/gtest.h>

#include "fedguard/common.h"
#include "test_util.h"

namespace fedguard::sim {
namespace {

TEST(ConfigTest, DefaultsMatchEvaluatedSetting) {
  const ExperimentConfig c = DefaultConfig();
  EXPECT_EQ(c.clients, 30);
  EXPECT_EQ(c.rounds, 30);
  EXPECT_EQ(c.local.epochs, 10);
  EXPECT_EQ(c.local.batch_size, 32);
  EXPECT_FLOAT_EQ(c.local.learning_rate, 0.01f);
  EXPECT_EQ(c.shadow_count, 100);
  EXPECT_EQ(c.shadow_train.epochs, 100);
  EXPECT_EQ(c.replication, 100);
  EXPECT_DOUBLE_EQ(c.seed_fraction, 0.0001);
  EXPECT_DOUBLE_EQ(c.alpha, 0.01);
  EXPECT_EQ(c.catalog.size(), attacks::kAllAttacks.size());
  EXPECT_EQ(c.data_attack_scope, DataAttackScope::kLocal);
  EXPECT_NO_THROW(c.Validate());
}

TEST(ConfigTest, EmptyObjectGivesDefaults) {
  EXPECT_EQ(ConfigToJson(ParseConfig("{}")), ConfigToJson(DefaultConfig()));
}

TEST(ConfigTest, OverridesAndRoundTrip) {
  const ExperimentConfig c = ParseConfig(R"({
    "seed": 42,
    "partition": {"mode": "iid", "clients": 8},
    "model": {"arch": "mlp", "hidden": [16, 8]},
    "training": {"rounds": 3, "learning_rate": 0.05},
    "attacks": {"byz_fraction": 0.5, "catalog": ["sign_flip", "lie"], "lie_z": 0.25,
                "data_attack_scope": "private"},
    "aggregation": {"rule": "median"}
  })");
  EXPECT_EQ(c.seed, 42u);
  EXPECT_EQ(c.partition_mode, data::PartitionMode::kIid);
  EXPECT_EQ(c.clients, 8);
  EXPECT_EQ(c.model.hidden, (std::vector<int>{16, 8}));
  EXPECT_EQ(c.rounds, 3);
  EXPECT_FLOAT_EQ(c.local.learning_rate, 0.05f);
  ASSERT_EQ(c.catalog.size(), 2u);
  EXPECT_EQ(c.catalog[1].kind, attacks::AttackKind::kLie);
  EXPECT_FLOAT_EQ(c.catalog[1].noise_scale, 0.25f);
  EXPECT_EQ(c.data_attack_scope, DataAttackScope::kPrivate);
  EXPECT_EQ(c.aggregator, "median");
  const std::string json = ConfigToJson(c);
  EXPECT_EQ(ConfigToJson(ParseConfig(json)), json);
}

TEST(ConfigTest, StrictKeysAndValues) {
  EXPECT_THROW(ParseConfig(R"({"sed": 1})"), ConfigError);
  EXPECT_THROW(ParseConfig(R"({"training": {"round": 3}})"), ConfigError);
  EXPECT_THROW(ParseConfig(R"({"dataset": {"synthetic": {"colour": 1}}})"), ConfigError);
  EXPECT_THROW(ParseConfig(R"({"training": {"rounds": "three"}})"), ConfigError);
  EXPECT_THROW(ParseConfig(R"({"attacks": {"catalog": ["lie", "lie"]}})"), ConfigError);
  EXPECT_THROW(ParseConfig(R"({"attacks": {"catalog": ["gaussian"]}})"), ConfigError);
  EXPECT_THROW(ParseConfig(R"({"aggregation": {"rule": "trimmed_mean"}})"), ConfigError);
  EXPECT_THROW(ParseConfig(R"({"attacks": {"byz_fraction": 1.5}})"), ConfigError);
  EXPECT_THROW(ParseConfig(R"({"partition": {"mode": "shards"}})"), ConfigError);
  EXPECT_THROW(ParseConfig("{not json"), ConfigError);
}

TEST(ConfigTest, MissingFileIsIoError) {
  EXPECT_THROW(LoadConfig(test_util::TempPath("no-such-config.json")), IoError);
}

TEST(ConfigTest, BuildArchPicksFamily) {
  ExperimentConfig c = DefaultConfig();
  c.model.hidden = {4};
  const Shape in{1, 14, 14};
  EXPECT_EQ(BuildArch(c, in, 3).ParamCount(), 196u * 4 + 4 + 4 * 3 + 3);
  c.model.arch = "cnn";
  EXPECT_NE(BuildArch(c, in, 3).id(), BuildArch(DefaultConfig(), in, 3).id());
}

}  // namespace
}  // namespace fedguard::sim
