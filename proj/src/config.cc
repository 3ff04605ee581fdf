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

#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fedguard/common.h"

namespace fedguard::sim {
namespace {

using nlohmann::json;

// Reads keys from one JSON object and rejects any key nobody asked for.
class Section {
 public:
  Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) throw ConfigError(name_ + ": expected an object");
  }

  template <typename T>
  void Get(const std::string& key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(Path(key) + ": " + e.what());
    }
  }

  // Nested object; returns null json when absent.
  const json& Child(const std::string& key) {
    seen_.insert(key);
    static const json kEmpty = json::object();
    auto it = j_.find(key);
    return it == j_.end() ? kEmpty : *it;
  }

  std::string Path(const std::string& key) const {
    return name_.empty() ? key : name_ + "." + key;
  }

  void Finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) {
        throw ConfigError("unknown config key '" + Path(it.key()) + "'");
      }
    }
  }

 private:
  const json& j_;
  std::string name_;
  std::set<std::string> seen_;
};

std::string ModeName(data::PartitionMode m) {
  return m == data::PartitionMode::kIid ? "iid" : "dirichlet";
}

std::string ScopeName(DataAttackScope s) {
  return s == DataAttackScope::kLocal ? "local" : "private";
}

}  // namespace

std::vector<attacks::AttackSpec> DefaultCatalog() {
  std::vector<attacks::AttackSpec> out;
  for (attacks::AttackKind k : attacks::kAllAttacks) {
    attacks::AttackSpec s;
    s.kind = k;
    out.push_back(s);
  }
  return out;
}

ExperimentConfig DefaultConfig() {
  ExperimentConfig c;
  c.catalog = DefaultCatalog();
  return c;
}

bool IsKnownAggregator(const std::string& name) {
  return name == "fedavg" || name == "median" || name == "bulyan" ||
         name == "lfr" || name == "fltrust" || name == "fedguard";
}

void ExperimentConfig::Validate() const {
  if (workers < 1) throw ConfigError("workers must be >= 1");
  if (dataset.source != "synthetic" && dataset.source != "idx") {
    throw ConfigError("dataset.source must be 'synthetic' or 'idx'");
  }
  if (dataset.max_train < 0 || dataset.max_test < 0) {
    throw ConfigError("dataset.max_train/max_test must be >= 0");
  }
  if (partition_mode == data::PartitionMode::kDirichlet && !(alpha > 0.0)) {
    throw ConfigError("partition.alpha must be > 0");
  }
  if (clients < 1) throw ConfigError("partition.clients must be >= 1");
  if (model.arch != "mlp" && model.arch != "cnn") {
    throw ConfigError("model.arch must be 'mlp' or 'cnn'");
  }
  if (rounds < 1) throw ConfigError("training.rounds must be >= 1");
  if (local.epochs < 1 || local.batch_size < 1) {
    throw ConfigError("training.local_epochs and batch_size must be >= 1");
  }
  if (!(seed_fraction > 0.0 && seed_fraction <= 1.0)) {
    throw ConfigError("fedguard.seed_fraction must lie in (0, 1]");
  }
  if (replication < 1) throw ConfigError("fedguard.replication must be >= 1");
  if (shadow_count < 2) throw ConfigError("fedguard.shadow_count must be >= 2");
  if (shadow_train.epochs < 1 || shadow_train.batch_size < 1) {
    throw ConfigError("fedguard.shadow_epochs and shadow_batch_size must be >= 1");
  }
  if (!(svm.lambda > 0.0) || !(svm.eta > 0.0) || svm.iterations < 1) {
    throw ConfigError("fedguard.svm_lambda/svm_eta must be > 0, svm_iterations >= 1");
  }
  if (!(byz_fraction >= 0.0 && byz_fraction <= 1.0)) {
    throw ConfigError("attacks.byz_fraction must lie in [0, 1]");
  }
  if (catalog.empty()) throw ConfigError("attacks.catalog must not be empty");
  for (const auto& s : catalog) s.Validate();
  if (!IsKnownAggregator(aggregator)) {
    throw ConfigError("unknown aggregator '" + aggregator + "'");
  }
}

ExperimentConfig ParseConfig(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  ExperimentConfig c = DefaultConfig();
  Section top(root, "");
  top.Get("seed", c.seed);
  top.Get("workers", c.workers);

  {
    Section s(top.Child("dataset"), "dataset");
    s.Get("source", c.dataset.source);
    s.Get("train_images", c.dataset.train_images);
    s.Get("train_labels", c.dataset.train_labels);
    s.Get("test_images", c.dataset.test_images);
    s.Get("test_labels", c.dataset.test_labels);
    s.Get("max_train", c.dataset.max_train);
    s.Get("max_test", c.dataset.max_test);
    Section syn(s.Child("synthetic"), "dataset.synthetic");
    auto& spec = c.dataset.synthetic;
    syn.Get("classes", spec.classes);
    syn.Get("per_class", spec.per_class);
    syn.Get("test_per_class", c.dataset.synthetic_test_per_class);
    syn.Get("channels", spec.shape.channels);
    syn.Get("height", spec.shape.height);
    syn.Get("width", spec.shape.width);
    syn.Get("ring_radius", spec.ring_radius);
    syn.Get("blob_sigma", spec.blob_sigma);
    syn.Get("jitter", spec.jitter);
    syn.Get("pixel_noise", spec.pixel_noise);
    syn.Finish();
    s.Finish();
  }
  {
    Section s(top.Child("partition"), "partition");
    std::string mode = ModeName(c.partition_mode);
    s.Get("mode", mode);
    if (mode == "iid") {
      c.partition_mode = data::PartitionMode::kIid;
    } else if (mode == "dirichlet") {
      c.partition_mode = data::PartitionMode::kDirichlet;
    } else {
      throw ConfigError("partition.mode must be 'iid' or 'dirichlet'");
    }
    s.Get("alpha", c.alpha);
    s.Get("clients", c.clients);
    s.Finish();
  }
  {
    Section s(top.Child("model"), "model");
    s.Get("arch", c.model.arch);
    s.Get("hidden", c.model.hidden);
    s.Get("conv1", c.model.conv1);
    s.Get("conv2", c.model.conv2);
    s.Get("dense", c.model.dense);
    s.Finish();
  }
  {
    Section s(top.Child("training"), "training");
    s.Get("rounds", c.rounds);
    s.Get("local_epochs", c.local.epochs);
    s.Get("batch_size", c.local.batch_size);
    s.Get("learning_rate", c.local.learning_rate);
    s.Finish();
  }
  {
    Section s(top.Child("fedguard"), "fedguard");
    s.Get("seed_fraction", c.seed_fraction);
    s.Get("replication", c.replication);
    s.Get("shadow_count", c.shadow_count);
    s.Get("shadow_epochs", c.shadow_train.epochs);
    s.Get("shadow_batch_size", c.shadow_train.batch_size);
    s.Get("shadow_learning_rate", c.shadow_train.learning_rate);
    s.Get("svm_lambda", c.svm.lambda);
    s.Get("svm_eta", c.svm.eta);
    s.Get("svm_iterations", c.svm.iterations);
    s.Finish();
  }
  {
    Section s(top.Child("attacks"), "attacks");
    s.Get("byz_fraction", c.byz_fraction);
    std::vector<std::string> names;
    for (const auto& spec : c.catalog) names.emplace_back(attacks::AttackName(spec.kind));
    s.Get("catalog", names);
    attacks::AttackSpec proto;
    s.Get("poison_fraction", proto.poison_fraction);
    s.Get("bit_index", proto.bit_index);
    s.Get("lie_z", proto.noise_scale);
    s.Get("random_lo", proto.uniform_lo);
    s.Get("random_hi", proto.uniform_hi);
    s.Get("krum_factor", proto.krum_factor);
    s.Get("backdoor_target", proto.target_label);
    s.Get("trigger_size", proto.trigger.size);
    s.Get("trigger_value", proto.trigger.value);
    std::string scope = ScopeName(c.data_attack_scope);
    s.Get("data_attack_scope", scope);
    if (scope == "local") {
      c.data_attack_scope = DataAttackScope::kLocal;
    } else if (scope == "private") {
      c.data_attack_scope = DataAttackScope::kPrivate;
    } else {
      throw ConfigError("attacks.data_attack_scope must be 'local' or 'private'");
    }
    s.Finish();
    c.catalog.clear();
    std::set<std::string> unique;
    for (const auto& n : names) {
      if (!unique.insert(n).second) {
        throw ConfigError("attacks.catalog lists '" + n + "' twice");
      }
      attacks::AttackSpec spec = proto;
      spec.kind = attacks::ParseAttack(n);
      c.catalog.push_back(spec);
    }
  }
  {
    Section s(top.Child("aggregation"), "aggregation");
    s.Get("rule", c.aggregator);
    s.Get("f_estimate", c.f_estimate);
    s.Finish();
  }
  top.Finish();
  c.Validate();
  return c;
}

ExperimentConfig LoadConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path + ": cannot open config file");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return ParseConfig(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::string ConfigToJson(const ExperimentConfig& c) {
  const attacks::AttackSpec proto =
      c.catalog.empty() ? attacks::AttackSpec{} : c.catalog.front();
  std::vector<std::string> names;
  for (const auto& s : c.catalog) names.emplace_back(attacks::AttackName(s.kind));
  const auto& syn = c.dataset.synthetic;
  json j = {
      {"seed", c.seed},
      {"workers", c.workers},
      {"dataset",
       {{"source", c.dataset.source},
        {"train_images", c.dataset.train_images},
        {"train_labels", c.dataset.train_labels},
        {"test_images", c.dataset.test_images},
        {"test_labels", c.dataset.test_labels},
        {"max_train", c.dataset.max_train},
        {"max_test", c.dataset.max_test},
        {"synthetic",
         {{"classes", syn.classes},
          {"per_class", syn.per_class},
          {"test_per_class", c.dataset.synthetic_test_per_class},
          {"channels", syn.shape.channels},
          {"height", syn.shape.height},
          {"width", syn.shape.width},
          {"ring_radius", syn.ring_radius},
          {"blob_sigma", syn.blob_sigma},
          {"jitter", syn.jitter},
          {"pixel_noise", syn.pixel_noise}}}}},
      {"partition",
       {{"mode", ModeName(c.partition_mode)}, {"alpha", c.alpha}, {"clients", c.clients}}},
      {"model",
       {{"arch", c.model.arch},
        {"hidden", c.model.hidden},
        {"conv1", c.model.conv1},
        {"conv2", c.model.conv2},
        {"dense", c.model.dense}}},
      {"training",
       {{"rounds", c.rounds},
        {"local_epochs", c.local.epochs},
        {"batch_size", c.local.batch_size},
        {"learning_rate", c.local.learning_rate}}},
      {"fedguard",
       {{"seed_fraction", c.seed_fraction},
        {"replication", c.replication},
        {"shadow_count", c.shadow_count},
        {"shadow_epochs", c.shadow_train.epochs},
        {"shadow_batch_size", c.shadow_train.batch_size},
        {"shadow_learning_rate", c.shadow_train.learning_rate},
        {"svm_lambda", c.svm.lambda},
        {"svm_eta", c.svm.eta},
        {"svm_iterations", c.svm.iterations}}},
      {"attacks",
       {{"byz_fraction", c.byz_fraction},
        {"catalog", names},
        {"poison_fraction", proto.poison_fraction},
        {"bit_index", proto.bit_index},
        {"lie_z", proto.noise_scale},
        {"random_lo", proto.uniform_lo},
        {"random_hi", proto.uniform_hi},
        {"krum_factor", proto.krum_factor},
        {"backdoor_target", proto.target_label},
        {"trigger_size", proto.trigger.size},
        {"trigger_value", proto.trigger.value},
        {"data_attack_scope", ScopeName(c.data_attack_scope)}}},
      {"aggregation", {{"rule", c.aggregator}, {"f_estimate", c.f_estimate}}},
  };
  return j.dump(2);
}

nn::ModelArch BuildArch(const ExperimentConfig& config, const Shape& input,
                        int class_count) {
  if (config.model.arch == "cnn") {
    return nn::ModelArch::Cnn(input, class_count, config.model.conv1,
                              config.model.conv2, config.model.dense);
  }
  return nn::ModelArch::Mlp(input, config.model.hidden, class_count);
}

}  // namespace fedguard::sim
