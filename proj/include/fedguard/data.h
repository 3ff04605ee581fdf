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

#ifndef FEDGUARD_DATA_H_
#define FEDGUARD_DATA_H_

#include <cstdint>
#include <string>
#include <vector>

#include "fedguard/dataset.h"

namespace fedguard::data {

// Reads an IDX image file (magic 0x00000803, N x H x W unsigned bytes) and the
// matching label file (magic 0x00000801). Pixels are scaled by 1/255. The
// class count is max(label) + 1 unless `class_count` is positive. Errors name
// the offending file.
LabeledDataset LoadIdx(const std::string& images_path,
                       const std::string& labels_path, int class_count = 0);

// Writes a single-channel dataset back to IDX (pixels rounded to bytes).
void WriteIdx(const LabeledDataset& data, const std::string& images_path,
              const std::string& labels_path);

struct SynthSpec {
  int classes = 10;
  int per_class = 200;
  Shape shape{1, 14, 14};
  // Blob centres sit on a circle of this radius (fraction of the image side).
  float ring_radius = 0.28f;
  // Gaussian blob width and per-sample centre jitter, in pixels.
  float blob_sigma = 1.6f;
  float jitter = 0.5f;
  float pixel_noise = 0.12f;
};

// Deterministic Gaussian-blob images, one blob location per class, exactly
// `per_class` samples of every class, rows interleaved by class.
LabeledDataset SynthDataset(const SynthSpec& spec, std::uint64_t seed);

enum class PartitionMode { kIid, kDirichlet };

struct PartitionConfig {
  PartitionMode mode = PartitionMode::kDirichlet;
  double alpha = 0.01;
  int client_count = 30;
  std::uint64_t seed = 0;
};

// Row indices per client. See Partition.
std::vector<std::vector<std::size_t>> PartitionIndices(
    const LabeledDataset& dataset, const PartitionConfig& config);

// Splits `dataset` into client_count disjoint parts covering every row.
//  iid: shuffle, then even split with the remainder going to the lowest
//       client indices.
//  dirichlet: per class draw p ~ Dir(alpha * 1_n) and cut that class's
//       shuffled rows at round(cumsum(p) * count).
// A client left empty receives one row from the currently largest client
// (lowest index on ties), repeated until no client is empty.
std::vector<LabeledDataset> Partition(const LabeledDataset& dataset,
                                      const PartitionConfig& config);

// Stratified sample of max(L, round(fraction * N)) rows holding at least one
// row of every class present in `dataset`. Rows keep the order of a seeded
// permutation, so fraction = 1 yields a permutation of the input.
LabeledDataset SampleSeed(const LabeledDataset& dataset, double fraction,
                          std::uint64_t seed);

// `times` back-to-back copies of `seed_dataset`.
LabeledDataset Replicate(const LabeledDataset& seed_dataset, int times);

}  // namespace fedguard::data

#endif  // FEDGUARD_DATA_H_
