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

#ifndef FEDGUARD_DATASET_H_
#define FEDGUARD_DATASET_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace fedguard {

// Channel-major image geometry (C x H x W).
struct Shape {
  int channels = 1;
  int height = 1;
  int width = 1;

  int Size() const { return channels * height * width; }
  bool operator==(const Shape&) const = default;
};

// Images in [0,1] stored row-major per sample, integer labels in [0, L), and a
// stable per-sample id so partitions and copies can be traced back to their
// source row.
class LabeledDataset {
 public:
  LabeledDataset() = default;
  // Validates sizes and label ranges; throws DataError / DimensionError.
  LabeledDataset(Shape shape, int class_count, std::vector<float> images,
                 std::vector<int> labels, std::vector<std::int64_t> ids = {});

  std::size_t size() const { return labels_.size(); }
  bool empty() const { return labels_.empty(); }
  const Shape& shape() const { return shape_; }
  int class_count() const { return class_count_; }
  int feature_size() const { return shape_.Size(); }

  std::span<const float> Image(std::size_t i) const;
  std::span<float> MutableImage(std::size_t i);
  int Label(std::size_t i) const { return labels_[i]; }
  void SetLabel(std::size_t i, int label);
  std::int64_t Id(std::size_t i) const { return ids_[i]; }

  const std::vector<float>& images() const { return images_; }
  const std::vector<int>& labels() const { return labels_; }
  const std::vector<std::int64_t>& ids() const { return ids_; }

  // Rows in the given order (repeats allowed).
  LabeledDataset Subset(std::span<const std::size_t> indices) const;
  // First min(n, size()) rows.
  LabeledDataset Head(std::size_t n) const;
  std::vector<std::size_t> ClassHistogram() const;

  // Rows of `a` followed by rows of `b`; shapes and class counts must agree.
  static LabeledDataset Concat(const LabeledDataset& a, const LabeledDataset& b);

  bool operator==(const LabeledDataset&) const = default;

 private:
  Shape shape_;
  int class_count_ = 0;
  std::vector<float> images_;
  std::vector<int> labels_;
  std::vector<std::int64_t> ids_;
};

// N x L matrix of softmax outputs, row-major.
class ConfidenceMatrix {
 public:
  ConfidenceMatrix() = default;
  ConfidenceMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), values_(rows * cols, 0.0f) {}
  ConfidenceMatrix(std::size_t rows, std::size_t cols, std::vector<float> values);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::span<const float> Row(std::size_t i) const {
    return {values_.data() + i * cols_, cols_};
  }
  std::span<float> MutableRow(std::size_t i) {
    return {values_.data() + i * cols_, cols_};
  }
  float at(std::size_t i, std::size_t j) const { return values_[i * cols_ + j]; }
  const std::vector<float>& values() const { return values_; }

  bool operator==(const ConfidenceMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<float> values_;
};

}  // namespace fedguard

#endif  // FEDGUARD_DATASET_H_
