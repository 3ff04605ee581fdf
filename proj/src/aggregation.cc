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
#include <iostream>
#include <limits>
#include <numeric>
#include <string>

#include "fedguard/common.h"

namespace fedguard::aggregation {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Sort key: non-finite values order as +infinity.
double Key(float v) {
  return std::isfinite(v) ? static_cast<double>(v) : kInf;
}

double MedianOfSorted(const std::vector<double>& sorted) {
  const std::size_t n = sorted.size();
  if (n % 2 == 1) return sorted[n / 2];
  const double lo = sorted[n / 2 - 1];
  const double hi = sorted[n / 2];
  if (lo == hi) return lo;
  return 0.5 * (lo + hi);
}

double SquaredDistance(const nn::ParamVector& a, const nn::ParamVector& b) {
  double sum = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double d = static_cast<double>(a.values[j]) - static_cast<double>(b.values[j]);
    sum += d * d;
  }
  return std::isfinite(sum) ? sum : kInf;
}

nn::ParamVector MeanOf(Updates updates, const std::vector<int>& which) {
  nn::ParamVector out{std::vector<float>(updates[0].size()), updates[0].arch_id};
  const double inv = 1.0 / static_cast<double>(which.size());
  for (std::size_t j = 0; j < out.size(); ++j) {
    double sum = 0.0;
    for (int i : which) sum += static_cast<double>(updates[static_cast<std::size_t>(i)].values[j]);
    out.values[j] = static_cast<float>(sum * inv);
  }
  return out;
}

}  // namespace

void CheckUpdates(Updates updates) {
  if (updates.empty()) throw InfeasibleError("no updates to aggregate");
  for (const auto& u : updates) {
    if (u.size() != updates[0].size() || u.arch_id != updates[0].arch_id) {
      throw DimensionError("updates differ in length or architecture");
    }
  }
}

nn::ParamVector FedAvg(Updates updates) {
  CheckUpdates(updates);
  std::vector<int> all(updates.size());
  std::iota(all.begin(), all.end(), 0);
  return MeanOf(updates, all);
}

nn::ParamVector CoordinateMedian(Updates updates) {
  CheckUpdates(updates);
  nn::ParamVector out{std::vector<float>(updates[0].size()), updates[0].arch_id};
  std::vector<double> column(updates.size());
  for (std::size_t j = 0; j < out.size(); ++j) {
    for (std::size_t i = 0; i < updates.size(); ++i) column[i] = Key(updates[i].values[j]);
    std::sort(column.begin(), column.end());
    out.values[j] = static_cast<float>(MedianOfSorted(column));
  }
  return out;
}

std::vector<int> KrumSelect(Updates updates, int f, int m) {
  CheckUpdates(updates);
  const int n = static_cast<int>(updates.size());
  if (f < 0 || n - f - 2 < 1) {
    throw InfeasibleError("krum needs n - f - 2 >= 1 (n=" + std::to_string(n) +
                          ", f=" + std::to_string(f) + ")");
  }
  if (m < 1 || m > n) throw InfeasibleError("krum selection size outside [1, n]");

  std::vector<std::vector<double>> dist(static_cast<std::size_t>(n),
                                        std::vector<double>(static_cast<std::size_t>(n), 0.0));
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double d = SquaredDistance(updates[static_cast<std::size_t>(i)],
                                       updates[static_cast<std::size_t>(j)]);
      dist[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = d;
      dist[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] = d;
    }
  }

  std::vector<int> remaining(static_cast<std::size_t>(n));
  std::iota(remaining.begin(), remaining.end(), 0);
  std::vector<int> chosen;
  std::vector<double> near;
  while (static_cast<int>(chosen.size()) < m) {
    const int r = static_cast<int>(remaining.size());
    const int k = std::min(r - 1, std::max(1, r - f - 2));
    int best = -1;
    double best_score = kInf;
    for (int i : remaining) {
      near.clear();
      for (int j : remaining) {
        if (j != i) near.push_back(dist[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
      }
      std::partial_sort(near.begin(), near.begin() + k, near.end());
      double score = 0.0;
      for (int t = 0; t < k; ++t) score += near[static_cast<std::size_t>(t)];
      // remaining is kept in index order, so strict < keeps the lowest index.
      if (best < 0 || score < best_score) {
        best = i;
        best_score = score;
      }
    }
    chosen.push_back(best);
    remaining.erase(std::find(remaining.begin(), remaining.end(), best));
  }
  return chosen;
}

nn::ParamVector Bulyan(Updates updates, int f, std::vector<int>* selected) {
  CheckUpdates(updates);
  const int n = static_cast<int>(updates.size());
  if (n < 3) throw InfeasibleError("bulyan needs at least 3 updates");
  if (f < 0) throw ConfigError("bulyan needs f >= 0");

  int s = 2 * f < n ? n - 2 * f : n - f;
  s = std::max(1, s);
  const int krum_f = std::min(f, n - 3);
  std::vector<int> chosen = KrumSelect(updates, krum_f, s);
  const int beta = std::max(1, s - 2 * f);

  nn::ParamVector out{std::vector<float>(updates[0].size()), updates[0].arch_id};
  std::vector<double> column(chosen.size());
  std::vector<std::pair<double, int>> closeness(chosen.size());
  for (std::size_t j = 0; j < out.size(); ++j) {
    for (std::size_t t = 0; t < chosen.size(); ++t) {
      column[t] = Key(updates[static_cast<std::size_t>(chosen[t])].values[j]);
    }
    std::vector<double> sorted = column;
    std::sort(sorted.begin(), sorted.end());
    const double med = MedianOfSorted(sorted);
    for (std::size_t t = 0; t < chosen.size(); ++t) {
      double gap = std::abs(column[t] - med);
      if (!std::isfinite(gap)) gap = kInf;
      closeness[t] = {gap, chosen[t]};
    }
    std::sort(closeness.begin(), closeness.end());
    double sum = 0.0;
    for (int t = 0; t < beta; ++t) {
      sum += static_cast<double>(
          updates[static_cast<std::size_t>(closeness[static_cast<std::size_t>(t)].second)]
              .values[j]);
    }
    out.values[j] = static_cast<float>(sum / beta);
  }
  if (selected != nullptr) {
    *selected = chosen;
    std::sort(selected->begin(), selected->end());
  }
  return out;
}

nn::ParamVector Lfr(const nn::ModelArch& arch, Updates updates,
                    const LabeledDataset& val_set, int f,
                    std::vector<int>* selected) {
  CheckUpdates(updates);
  if (val_set.empty()) throw DataError("LFR needs a non-empty validation set");
  if (f < 0) throw ConfigError("LFR needs f >= 0");
  const int n = static_cast<int>(updates.size());
  std::vector<std::pair<double, int>> losses;
  for (int i = 0; i < n; ++i) {
    double loss = nn::MeanLoss(arch, updates[static_cast<std::size_t>(i)], val_set);
    if (!std::isfinite(loss)) loss = kInf;
    losses.emplace_back(loss, i);
  }
  std::sort(losses.begin(), losses.end());
  const int keep = std::max(1, n - f);
  std::vector<int> chosen;
  for (int t = 0; t < keep; ++t) chosen.push_back(losses[static_cast<std::size_t>(t)].second);
  std::sort(chosen.begin(), chosen.end());
  if (selected != nullptr) *selected = chosen;
  return MeanOf(updates, chosen);
}

nn::ParamVector FlTrust(Updates updates, const nn::ParamVector& server_update,
                        const nn::ParamVector& global_model,
                        std::vector<int>* selected) {
  CheckUpdates(updates);
  if (server_update.size() != updates[0].size() ||
      global_model.size() != updates[0].size()) {
    throw DimensionError("server/global model length differs from the updates");
  }
  if (selected != nullptr) selected->clear();
  const std::size_t dim = global_model.size();
  std::vector<double> server_delta(dim);
  double server_norm_sq = 0.0;
  for (std::size_t j = 0; j < dim; ++j) {
    server_delta[j] = static_cast<double>(server_update.values[j]) -
                      static_cast<double>(global_model.values[j]);
    server_norm_sq += server_delta[j] * server_delta[j];
  }
  const double server_norm = std::sqrt(server_norm_sq);
  if (!(server_norm > 0.0) || !std::isfinite(server_norm)) {
    std::cerr << "warning: FLTrust server update has zero norm; keeping the "
                 "global model\n";
    return global_model;
  }

  std::vector<double> acc(dim, 0.0);
  std::vector<double> delta(dim);
  double trust_sum = 0.0;
  for (std::size_t i = 0; i < updates.size(); ++i) {
    double dot = 0.0;
    double norm_sq = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
      delta[j] = static_cast<double>(updates[i].values[j]) -
                 static_cast<double>(global_model.values[j]);
      dot += delta[j] * server_delta[j];
      norm_sq += delta[j] * delta[j];
    }
    const double norm = std::sqrt(norm_sq);
    if (!std::isfinite(dot) || !std::isfinite(norm) || norm == 0.0) continue;
    const double trust = std::max(0.0, dot / (norm * server_norm));
    if (!(trust > 0.0)) continue;
    const double scale = trust * server_norm / norm;
    for (std::size_t j = 0; j < dim; ++j) acc[j] += scale * delta[j];
    trust_sum += trust;
    if (selected != nullptr) selected->push_back(static_cast<int>(i));
  }
  if (!(trust_sum > 0.0)) {
    std::cerr << "warning: FLTrust gave every client zero trust; keeping the "
                 "global model\n";
    return global_model;
  }

  nn::ParamVector out = global_model;
  for (std::size_t j = 0; j < dim; ++j) {
    out.values[j] = static_cast<float>(static_cast<double>(global_model.values[j]) +
                                       acc[j] / trust_sum);
  }
  return out;
}

}  // namespace fedguard::aggregation
