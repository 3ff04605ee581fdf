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

#ifndef FEDGUARD_TESTS_TEST_UTIL_H_
#define FEDGUARD_TESTS_TEST_UTIL_H_

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "fedguard/dataset.h"
#include "fedguard/nn.h"

namespace fedguard::test_util {

// Uniform [0,1) images with labels cycling through the classes.
inline LabeledDataset RandomDataset(std::size_t n, Shape shape, int classes,
                                    std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  std::vector<float> images(n * static_cast<std::size_t>(shape.Size()));
  for (float& v : images) v = u(rng);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i % static_cast<std::size_t>(classes));
  return LabeledDataset(shape, classes, std::move(images), std::move(labels));
}

inline nn::ParamVector RandomVector(std::size_t dim, std::uint64_t seed,
                                    float lo = -1.0f, float hi = 1.0f,
                                    const std::string& arch_id = "test") {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(lo, hi);
  nn::ParamVector p{std::vector<float>(dim), arch_id};
  for (float& v : p.values) v = u(rng);
  return p;
}

inline std::string TempPath(const std::string& name) {
  return ::testing::TempDir() + "/" + name;
}

}  // namespace fedguard::test_util

#endif  // FEDGUARD_TESTS_TEST_UTIL_H_
