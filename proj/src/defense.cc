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
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "fedguard/common.h"

namespace fedguard::defense {
namespace {

constexpr char kCheckpointMagic[] = "fedguard-offline-checkpoint";

template <typename T>
std::string Hex(T v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::hex);
  return std::string(buf, res.ptr);
}

template <typename T>
T ParseHex(const std::string& token, const std::string& path) {
  T v{};
  std::string_view s = token;
  bool negative = false;
  if (!s.empty() && s.front() == '-') {
    negative = true;
    s.remove_prefix(1);
  }
  if (s == "inf" || s == "nan") {
    v = s == "inf" ? std::numeric_limits<T>::infinity()
                   : std::numeric_limits<T>::quiet_NaN();
  } else {
    auto res = std::from_chars(s.data(), s.data() + s.size(), v,
                               std::chars_format::hex);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
      throw FormatError(path + ": bad number '" + token + "'");
    }
  }
  return negative ? -v : v;
}

// Line-oriented reader that enforces the documented key order.
class CheckpointReader {
 public:
  explicit CheckpointReader(const std::string& path) : path_(path), in_(path) {
    if (!in_) throw IoError(path + ": cannot open checkpoint");
  }

  std::vector<std::string> Line(const std::string& key) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (line.empty()) continue;
      std::istringstream ss(line);
      std::vector<std::string> tokens;
      for (std::string t; ss >> t;) tokens.push_back(t);
      if (tokens.empty()) continue;
      if (!key.empty() && tokens[0] != key) {
        throw FormatError(path_ + ":" + std::to_string(line_no_) + ": expected '" +
                          key + "', found '" + tokens[0] + "'");
      }
      return tokens;
    }
    throw FormatError(path_ + ": unexpected end of file, expected '" + key + "'");
  }

  std::string Token() {
    std::string t;
    if (!(in_ >> t)) throw FormatError(path_ + ": unexpected end of file");
    return t;
  }

  long Int(const std::string& token) const {
    long v = 0;
    auto res = std::from_chars(token.data(), token.data() + token.size(), v);
    if (res.ec != std::errc() || res.ptr != token.data() + token.size()) {
      throw FormatError(path_ + ": bad integer '" + token + "'");
    }
    return v;
  }

  void Expect(const std::vector<std::string>& tokens, std::size_t count) const {
    if (tokens.size() != count) {
      throw FormatError(path_ + ": '" + tokens[0] + "' expects " +
                        std::to_string(count - 1) + " values");
    }
  }

  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::ifstream in_;
  int line_no_ = 0;
};

}  // namespace

std::array<double, 2> DefenseModel::Normalize(const Features& x) const {
  return {(x.mse - feature_mean[0]) / feature_scale[0],
          (x.tcd - feature_mean[1]) / feature_scale[1]};
}

double DefenseModel::Score(const Features& x) const {
  const auto z = Normalize(x);
  return w[0] * z[0] + w[1] * z[1] + b;
}

ShadowSet BuildShadowSet(const nn::ModelArch& arch, const LabeledDataset& pub,
                         int k, const std::vector<attacks::AttackSpec>& catalog,
                         const nn::TrainConfig& train, std::uint64_t seed,
                         int workers) {
  if (k < 2) throw ConfigError("need at least 2 shadow models");
  if (catalog.empty()) throw ConfigError("shadow attack catalog is empty");
  for (const auto& spec : catalog) spec.Validate();
  if (pub.empty()) throw DataError("public dataset is empty");
  const int benign = (k + 1) / 2;
  const int malicious = k - benign;
  if (malicious < static_cast<int>(catalog.size())) {
    throw ConfigError(std::to_string(k) + " shadow models leave " +
                      std::to_string(malicious) + " malicious slots for " +
                      std::to_string(catalog.size()) + " attack kinds");
  }

  ShadowSet set;
  set.models.resize(static_cast<std::size_t>(k));
  set.labels.resize(static_cast<std::size_t>(k));
  set.attacks.resize(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j) {
    if (j < benign) {
      set.labels[static_cast<std::size_t>(j)] = kBenign;
    } else {
      set.labels[static_cast<std::size_t>(j)] = kMalicious;
      set.attacks[static_cast<std::size_t>(j)] =
          catalog[static_cast<std::size_t>(j - benign) % catalog.size()].kind;
    }
  }

  ParallelFor(static_cast<std::size_t>(k), workers, [&](std::size_t j) {
    const auto idx = static_cast<std::uint64_t>(j);
    const nn::ParamVector init =
        nn::InitModel(arch, DeriveSeed(seed, SeedStream::kShadowInit, {idx}));
    const std::uint64_t train_seed = DeriveSeed(seed, SeedStream::kShadowTrain, {idx});
    const std::uint64_t attack_seed = DeriveSeed(seed, SeedStream::kShadowAttack, {idx});
    if (set.labels[j] == kBenign) {
      set.models[j] = nn::TrainLocal(arch, init, pub, train, train_seed);
      return;
    }
    const auto& spec =
        catalog[(j - static_cast<std::size_t>(benign)) % catalog.size()];
    if (attacks::IsDataAttack(spec.kind)) {
      const LabeledDataset poisoned = attacks::ApplyDataAttack(spec, pub, attack_seed);
      set.models[j] = nn::TrainLocal(arch, init, poisoned, train, train_seed);
    } else {
      set.models[j] = attacks::ApplyModelAttack(
          spec, nn::TrainLocal(arch, init, pub, train, train_seed), attack_seed);
    }
  });

  std::mt19937_64 rng(DeriveSeed(seed, SeedStream::kReference));
  set.reference_index = std::uniform_int_distribution<int>(0, benign - 1)(rng);
  return set;
}

Features ExtractFeatures(const ConfidenceMatrix& c_model,
                         const ConfidenceMatrix& c_ref,
                         std::span<const int> labels) {
  if (c_model.rows() != c_ref.rows() || c_model.cols() != c_ref.cols() ||
      labels.size() != c_model.rows()) {
    throw DimensionError("feature extraction needs two N x L matrices and N labels");
  }
  const std::size_t n = c_model.rows();
  const std::size_t l = c_model.cols();
  if (n == 0 || l == 0) throw DimensionError("feature extraction on an empty matrix");
  double sum_sq = 0.0;
  double sum_true = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto a = c_model.Row(i);
    const auto r = c_ref.Row(i);
    for (std::size_t j = 0; j < l; ++j) {
      const double d = static_cast<double>(a[j]) - static_cast<double>(r[j]);
      sum_sq += d * d;
    }
    const auto label = static_cast<std::size_t>(labels[i]);
    if (label >= l) throw DimensionError("label outside the confidence columns");
    sum_true += std::abs(static_cast<double>(a[label]) - static_cast<double>(r[label]));
  }
  return {sum_sq / static_cast<double>(n * l), sum_true / static_cast<double>(n)};
}

std::vector<FeatureSample> DefenseData(const nn::ModelArch& arch,
                                       const ShadowSet& shadows,
                                       const LabeledDataset& pub, int workers) {
  const ConfidenceMatrix c_ref = nn::Forward(
      arch, shadows.models[static_cast<std::size_t>(shadows.reference_index)], pub);
  std::vector<FeatureSample> out(shadows.size());
  ParallelFor(shadows.size(), workers, [&](std::size_t s) {
    out[s].x = ExtractFeatures(nn::Forward(arch, shadows.models[s], pub), c_ref,
                               pub.labels());
    out[s].y = shadows.labels[s];
  });
  return out;
}

DefenseModel TrainDefenseSvm(std::span<const FeatureSample> data,
                             const SvmConfig& config, std::uint64_t seed) {
  if (!(config.lambda >= 0.0) || !(config.eta > 0.0) || config.iterations < 1) {
    throw ConfigError("SVM needs lambda >= 0, eta > 0 and iterations >= 1");
  }
  bool has_benign = false;
  bool has_malicious = false;
  for (const auto& s : data) {
    if (s.y == kBenign) has_benign = true;
    else if (s.y == kMalicious) has_malicious = true;
    else throw TrainingError("identity labels must be 0 or 1");
  }
  if (!has_benign || !has_malicious) {
    throw TrainingError("defense data must contain benign and malicious samples");
  }

  DefenseModel model;
  model.config = config;
  const double n = static_cast<double>(data.size());
  std::vector<std::array<double, 2>> raw;
  for (const auto& s : data) raw.push_back({s.x.mse, s.x.tcd});
  std::array<double, 2> mean{0.0, 0.0};
  for (const auto& l : raw) {
    mean[0] += l[0];
    mean[1] += l[1];
  }
  mean[0] /= n;
  mean[1] /= n;
  std::array<double, 2> var{0.0, 0.0};
  for (const auto& l : raw) {
    var[0] += (l[0] - mean[0]) * (l[0] - mean[0]);
    var[1] += (l[1] - mean[1]) * (l[1] - mean[1]);
  }
  model.feature_mean = mean;
  for (int f = 0; f < 2; ++f) {
    const double sd = std::sqrt(var[static_cast<std::size_t>(f)] / n);
    model.feature_scale[static_cast<std::size_t>(f)] =
        std::isfinite(sd) && sd > 0.0 ? sd : 1.0;
  }
  for (double v : {mean[0], mean[1]}) {
    if (!std::isfinite(v)) throw TrainingError("defense features must be finite");
  }

  std::vector<std::array<double, 2>> xs;
  std::vector<double> ys;
  for (const auto& s : data) {
    xs.push_back(model.Normalize(s.x));
    ys.push_back(s.y == kBenign ? 1.0 : -1.0);
  }
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  const double eta = config.eta;
  const double lambda = config.lambda;
  // w - eta*lambda*w, with the decay clamped so eta*lambda > 1 cannot flip
  // or blow up the weights.
  const double keep = std::max(0.0, 1.0 - eta * lambda);
  auto& w = model.w;
  double& b = model.b;
  for (int t = 0; t < config.iterations; ++t) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t i : order) {
      const auto& x = xs[i];
      const double y = ys[i];
      if (y * (w[0] * x[0] + w[1] * x[1] + b) < 1.0) {
        w[0] = keep * w[0] + eta * y * x[0];
        w[1] = keep * w[1] + eta * y * x[1];
        b += eta * y;
      } else {
        w[0] *= keep;
        w[1] *= keep;
      }
    }
  }
  return model;
}

Verdict ClassifyClient(const nn::ModelArch& arch,
                       const nn::ParamVector& client_model,
                       const LabeledDataset& pub, const ConfidenceMatrix& c_ref,
                       const DefenseModel& model) {
  Verdict v;
  v.x = ExtractFeatures(nn::Forward(arch, client_model, pub), c_ref, pub.labels());
  v.benign = model.IsBenign(v.x);
  return v;
}

Verdict ClassifyClient(const nn::ModelArch& arch,
                       const nn::ParamVector& client_model,
                       const LabeledDataset& pub,
                       const nn::ParamVector& ref_model,
                       const DefenseModel& model) {
  return ClassifyClient(arch, client_model, pub, nn::Forward(arch, ref_model, pub),
                        model);
}

FilterResult FilterRound(const nn::ModelArch& arch,
                         std::span<const nn::ParamVector> client_models,
                         const LabeledDataset& pub,
                         const nn::ParamVector& ref_model,
                         const DefenseModel& model, int workers) {
  if (client_models.empty()) throw InfeasibleError("no client models to filter");
  const ConfidenceMatrix c_ref = nn::Forward(arch, ref_model, pub);
  FilterResult result;
  result.verdicts.resize(client_models.size());
  ParallelFor(client_models.size(), workers, [&](std::size_t i) {
    result.verdicts[i] = ClassifyClient(arch, client_models[i], pub, c_ref, model);
  });
  for (std::size_t i = 0; i < client_models.size(); ++i) {
    if (result.verdicts[i].benign) result.selected.push_back(static_cast<int>(i));
  }
  if (result.selected.empty()) {
    std::size_t best = 0;
    double best_mse = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < client_models.size(); ++i) {
      double mse = result.verdicts[i].x.mse;
      if (std::isnan(mse)) mse = std::numeric_limits<double>::infinity();
      if (i == 0 || mse < best_mse) {
        best = i;
        best_mse = mse;
      }
    }
    result.selected.push_back(static_cast<int>(best));
    result.fallback = true;
  }
  return result;
}

bool OfflineArtifacts::operator==(const OfflineArtifacts& o) const {
  return arch_id == o.arch_id && replication == o.replication &&
         seed_ids == o.seed_ids && reference_index == o.reference_index &&
         reference_model == o.reference_model && defense_data == o.defense_data &&
         defense_sources == o.defense_sources && defense.w == o.defense.w &&
         defense.b == o.defense.b && defense.feature_mean == o.defense.feature_mean &&
         defense.feature_scale == o.defense.feature_scale &&
         defense.config.lambda == o.defense.config.lambda &&
         defense.config.eta == o.defense.config.eta &&
         defense.config.iterations == o.defense.config.iterations;
}

OfflineArtifacts RunOfflinePhase(const nn::ModelArch& arch,
                                 const LabeledDataset& seed_dataset,
                                 int replication, const OfflineConfig& config,
                                 std::uint64_t seed, int workers) {
  if (replication < 1) throw ConfigError("replication must be >= 1");
  std::vector<std::size_t> rows;
  for (int t = 0; t < replication; ++t) {
    for (std::size_t i = 0; i < seed_dataset.size(); ++i) rows.push_back(i);
  }
  const LabeledDataset pub = seed_dataset.Subset(rows);
  const ShadowSet shadows = BuildShadowSet(arch, pub, config.shadow_count, config.catalog,
                                           config.shadow_train, seed, workers);
  OfflineArtifacts out;
  out.arch_id = arch.id();
  out.replication = replication;
  out.seed_ids = seed_dataset.ids();
  out.reference_index = shadows.reference_index;
  out.reference_model = shadows.models[static_cast<std::size_t>(shadows.reference_index)];
  out.defense_data = DefenseData(arch, shadows, pub, workers);
  for (const auto& a : shadows.attacks) {
    out.defense_sources.emplace_back(a ? attacks::AttackName(*a) : "benign");
  }
  out.defense = TrainDefenseSvm(out.defense_data, config.svm,
                                DeriveSeed(seed, SeedStream::kDefenseSvm));
  return out;
}

void SaveCheckpoint(const OfflineArtifacts& a, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError(path + ": cannot open for writing");
  const DefenseModel& d = a.defense;
  out << kCheckpointMagic << "\n";
  out << "format_version " << kCheckpointVersion << "\n";
  out << "arch_id " << a.arch_id << "\n";
  out << "replication " << a.replication << "\n";
  out << "seed_ids " << a.seed_ids.size();
  for (auto id : a.seed_ids) out << " " << id;
  out << "\n";
  out << "svm_lambda " << Hex(d.config.lambda) << "\n";
  out << "svm_eta " << Hex(d.config.eta) << "\n";
  out << "svm_iterations " << d.config.iterations << "\n";
  out << "svm_w " << Hex(d.w[0]) << " " << Hex(d.w[1]) << "\n";
  out << "svm_b " << Hex(d.b) << "\n";
  out << "feature_mean " << Hex(d.feature_mean[0]) << " " << Hex(d.feature_mean[1]) << "\n";
  out << "feature_scale " << Hex(d.feature_scale[0]) << " " << Hex(d.feature_scale[1])
      << "\n";
  out << "reference_index " << a.reference_index << "\n";
  out << "defense_data " << a.defense_data.size() << "\n";
  for (std::size_t i = 0; i < a.defense_data.size(); ++i) {
    const auto& s = a.defense_data[i];
    const std::string source =
        i < a.defense_sources.size() ? a.defense_sources[i] : "unknown";
    out << Hex(s.x.mse) << " " << Hex(s.x.tcd) << " " << s.y << " " << source << "\n";
  }
  out << "reference_model " << a.reference_model.size() << "\n";
  for (std::size_t i = 0; i < a.reference_model.size(); ++i) {
    out << Hex(a.reference_model.values[i]) << ((i % 8 == 7) ? "\n" : " ");
  }
  if (a.reference_model.size() % 8 != 0) out << "\n";
  out << "end\n";
  if (!out) throw IoError(path + ": write failed");
}

OfflineArtifacts LoadCheckpoint(const std::string& path) {
  CheckpointReader r(path);
  auto magic = r.Line("");
  if (magic.size() != 1 || magic[0] != kCheckpointMagic) {
    throw FormatError(path + ": not a fedguard offline checkpoint");
  }
  auto version = r.Line("format_version");
  r.Expect(version, 2);
  if (r.Int(version[1]) != kCheckpointVersion) {
    throw FormatError(path + ": unsupported format_version " + version[1]);
  }
  OfflineArtifacts a;
  auto arch = r.Line("arch_id");
  r.Expect(arch, 2);
  a.arch_id = arch[1];
  auto rep = r.Line("replication");
  r.Expect(rep, 2);
  a.replication = static_cast<int>(r.Int(rep[1]));
  auto ids = r.Line("seed_ids");
  if (ids.size() < 2) r.Expect(ids, 2);
  r.Expect(ids, 2 + static_cast<std::size_t>(r.Int(ids[1])));
  for (std::size_t i = 2; i < ids.size(); ++i) a.seed_ids.push_back(r.Int(ids[i]));

  DefenseModel& d = a.defense;
  auto lambda = r.Line("svm_lambda");
  r.Expect(lambda, 2);
  d.config.lambda = ParseHex<double>(lambda[1], path);
  auto eta = r.Line("svm_eta");
  r.Expect(eta, 2);
  d.config.eta = ParseHex<double>(eta[1], path);
  auto iters = r.Line("svm_iterations");
  r.Expect(iters, 2);
  d.config.iterations = static_cast<int>(r.Int(iters[1]));
  auto w = r.Line("svm_w");
  r.Expect(w, 3);
  d.w = {ParseHex<double>(w[1], path), ParseHex<double>(w[2], path)};
  auto b = r.Line("svm_b");
  r.Expect(b, 2);
  d.b = ParseHex<double>(b[1], path);
  auto mean = r.Line("feature_mean");
  r.Expect(mean, 3);
  d.feature_mean = {ParseHex<double>(mean[1], path), ParseHex<double>(mean[2], path)};
  auto scale = r.Line("feature_scale");
  r.Expect(scale, 3);
  d.feature_scale = {ParseHex<double>(scale[1], path), ParseHex<double>(scale[2], path)};
  if (!(d.feature_scale[0] != 0.0 && d.feature_scale[1] != 0.0)) {
    throw FormatError(path + ": feature_scale must be non-zero");
  }
  auto ref_idx = r.Line("reference_index");
  r.Expect(ref_idx, 2);
  a.reference_index = static_cast<int>(r.Int(ref_idx[1]));

  auto dd = r.Line("defense_data");
  r.Expect(dd, 2);
  const long k = r.Int(dd[1]);
  if (k < 0) throw FormatError(path + ": negative defense_data count");
  for (long i = 0; i < k; ++i) {
    auto row = r.Line("");
    if (row.size() != 4) {
      throw FormatError(path + ": defense_data rows need 4 fields");
    }
    FeatureSample s;
    s.x.mse = ParseHex<double>(row[0], path);
    s.x.tcd = ParseHex<double>(row[1], path);
    s.y = static_cast<int>(r.Int(row[2]));
    if (s.y != kBenign && s.y != kMalicious) {
      throw FormatError(path + ": identity label must be 0 or 1");
    }
    a.defense_data.push_back(s);
    a.defense_sources.push_back(row[3]);
  }

  auto ref = r.Line("reference_model");
  r.Expect(ref, 2);
  const long count = r.Int(ref[1]);
  if (count < 0) throw FormatError(path + ": negative reference_model count");
  a.reference_model.arch_id = a.arch_id;
  a.reference_model.values.reserve(static_cast<std::size_t>(count));
  for (long i = 0; i < count; ++i) {
    a.reference_model.values.push_back(ParseHex<float>(r.Token(), path));
  }
  auto end = r.Line("end");
  r.Expect(end, 1);
  return a;
}

}  // namespace fedguard::defense
