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

// Baseline aggregation rules. All rules are total under attack: NaN/Inf
// coordinates order as +infinity in median/trim comparisons, count as
// infinitely far in Krum distances, and earn zero FLTrust trust.

#ifndef FEDGUARD_AGGREGATION_H_
#define FEDGUARD_AGGREGATION_H_

#include <span>
#include <vector>

#include "fedguard/dataset.h"
#include "fedguard/nn.h"

namespace fedguard::aggregation {

using Updates = std::span<const nn::ParamVector>;

// Coordinate-wise arithmetic mean with uniform weights.
nn::ParamVector FedAvg(Updates updates);

// Coordinate-wise median; for even n the mean of the two central values.
nn::ParamVector CoordinateMedian(Updates updates);

// Iterative Krum: score(i) = sum of squared distances to its n-f-2 nearest
// other candidates; repeatedly take the lowest score (lowest index on ties),
// remove it, and rescore the remaining candidates until m are chosen. Throws
// InfeasibleError unless n - f - 2 >= 1 and 1 <= m <= n.
std::vector<int> KrumSelect(Updates updates, int f, int m);

// Bulyan with selection size s = n-2f (or n-f when f >= n/2), clamped to at
// least 1. Krum runs with f clamped to n-3 so its neighbour count stays
// positive. Each coordinate averages the beta = max(1, s-2f) selected values
// closest to the selected set's coordinate median.
nn::ParamVector Bulyan(Updates updates, int f,
                       std::vector<int>* selected = nullptr);

// Keeps the max(1, n-f) updates with the lowest validation cross-entropy
// (ties by index) and averages them.
nn::ParamVector Lfr(const nn::ModelArch& arch, Updates updates,
                    const LabeledDataset& val_set, int f,
                    std::vector<int>* selected = nullptr);

// FLTrust: trust t_i = max(0, cos(delta_i, delta_s)) with deltas taken from
// `global_model`; each delta_i is rescaled to |delta_s| and the trust-weighted
// mean is added to the global model. Zero total trust or a zero server delta
// returns the global model. `selected` receives the indices with t_i > 0.
nn::ParamVector FlTrust(Updates updates, const nn::ParamVector& server_update,
                        const nn::ParamVector& global_model,
                        std::vector<int>* selected = nullptr);

// Throws DimensionError unless every update shares length and arch id.
void CheckUpdates(Updates updates);

}  // namespace fedguard::aggregation

#endif  // FEDGUARD_AGGREGATION_H_
