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

// Scalar-generic forward/backward kernels behind fedguard/nn.h. Production
// code runs them in float; the double instantiation exists so gradient checks
// can compare against finite differences without float rounding noise.

#ifndef FEDGUARD_NN_ENGINE_H_
#define FEDGUARD_NN_ENGINE_H_

#include <span>
#include <vector>

#include "fedguard/nn.h"

namespace fedguard::nn::internal {

template <typename T>
class Engine {
 public:
  explicit Engine(const ModelArch& arch);

  // Runs one sample and caches activations for Backward. `probs` receives the
  // softmax output (class_count entries).
  void Forward(std::span<const T> params, std::span<const T> input,
               std::span<T> probs);

  // Cross-entropy of the last forwarded sample against `label`; adds
  // d(loss)/d(params) into `grad`.
  double Backward(std::span<const T> params, int label, std::span<double> grad);

  // Cross-entropy of the last forwarded sample without touching gradients.
  double Loss(int label) const;

 private:
  const ModelArch& arch_;
  std::vector<std::vector<T>> acts_;  // acts_[i] feeds layer i
  std::vector<std::vector<int>> argmax_;
  std::vector<double> logits_;
  std::vector<double> delta_;
  std::vector<double> next_delta_;
  std::vector<double> scratch_;
};

// Mean cross-entropy over a batch and its gradient (overwrites `grad`).
template <typename T>
double BatchLossAndGradient(const ModelArch& arch, std::span<const T> params,
                            std::span<const T> images,
                            std::span<const int> labels,
                            std::span<double> grad);

// Mean cross-entropy over a batch.
template <typename T>
double BatchLoss(const ModelArch& arch, std::span<const T> params,
                 std::span<const T> images, std::span<const int> labels);

}  // namespace fedguard::nn::internal

#endif  // FEDGUARD_NN_ENGINE_H_
