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

#include "fedguard/dataset.h"

#include <algorithm>
#include <atomic>
#include <numeric>
#include <string>
#include <thread>

#include "fedguard/common.h"

namespace fedguard {

LabeledDataset::LabeledDataset(Shape shape, int class_count,
                               std::vector<float> images,
                               std::vector<int> labels,
                               std::vector<std::int64_t> ids)
    : shape_(shape),
      class_count_(class_count),
      images_(std::move(images)),
      labels_(std::move(labels)),
      ids_(std::move(ids)) {
  if (shape_.Size() < 1) throw DimensionError("image shape must be positive");
  if (class_count_ < 1) throw DataError("class count must be positive");
  if (images_.size() != labels_.size() * static_cast<std::size_t>(shape_.Size())) {
    throw DimensionError("image buffer holds " + std::to_string(images_.size()) +
                         " values, expected " + std::to_string(labels_.size()) +
                         " images of " + std::to_string(shape_.Size()));
  }
  for (int label : labels_) {
    if (label < 0 || label >= class_count_) {
      throw DataError("label " + std::to_string(label) + " outside [0, " +
                      std::to_string(class_count_) + ")");
    }
  }
  if (ids_.empty()) {
    ids_.resize(labels_.size());
    std::iota(ids_.begin(), ids_.end(), 0);
  } else if (ids_.size() != labels_.size()) {
    throw DimensionError("sample id count differs from label count");
  }
}

std::span<const float> LabeledDataset::Image(std::size_t i) const {
  const std::size_t d = static_cast<std::size_t>(shape_.Size());
  return {images_.data() + i * d, d};
}

std::span<float> LabeledDataset::MutableImage(std::size_t i) {
  const std::size_t d = static_cast<std::size_t>(shape_.Size());
  return {images_.data() + i * d, d};
}

void LabeledDataset::SetLabel(std::size_t i, int label) {
  if (label < 0 || label >= class_count_) {
    throw DataError("label " + std::to_string(label) + " outside [0, " +
                    std::to_string(class_count_) + ")");
  }
  labels_[i] = label;
}

LabeledDataset LabeledDataset::Subset(std::span<const std::size_t> indices) const {
  const std::size_t d = static_cast<std::size_t>(shape_.Size());
  std::vector<float> images;
  images.reserve(indices.size() * d);
  std::vector<int> labels;
  labels.reserve(indices.size());
  std::vector<std::int64_t> ids;
  ids.reserve(indices.size());
  for (std::size_t i : indices) {
    if (i >= size()) throw DimensionError("subset index out of range");
    auto img = Image(i);
    images.insert(images.end(), img.begin(), img.end());
    labels.push_back(labels_[i]);
    ids.push_back(ids_[i]);
  }
  LabeledDataset out;
  out.shape_ = shape_;
  out.class_count_ = class_count_;
  out.images_ = std::move(images);
  out.labels_ = std::move(labels);
  out.ids_ = std::move(ids);
  return out;
}

LabeledDataset LabeledDataset::Head(std::size_t n) const {
  std::vector<std::size_t> idx(std::min(n, size()));
  std::iota(idx.begin(), idx.end(), 0);
  return Subset(idx);
}

std::vector<std::size_t> LabeledDataset::ClassHistogram() const {
  std::vector<std::size_t> h(static_cast<std::size_t>(class_count_), 0);
  for (int l : labels_) ++h[static_cast<std::size_t>(l)];
  return h;
}

LabeledDataset LabeledDataset::Concat(const LabeledDataset& a,
                                      const LabeledDataset& b) {
  if (a.empty()) return b;
  if (b.empty()) return a;
  if (a.shape_ != b.shape_ || a.class_count_ != b.class_count_) {
    throw DimensionError("cannot concatenate datasets of different geometry");
  }
  LabeledDataset out = a;
  out.images_.insert(out.images_.end(), b.images_.begin(), b.images_.end());
  out.labels_.insert(out.labels_.end(), b.labels_.begin(), b.labels_.end());
  out.ids_.insert(out.ids_.end(), b.ids_.begin(), b.ids_.end());
  return out;
}

ConfidenceMatrix::ConfidenceMatrix(std::size_t rows, std::size_t cols,
                                   std::vector<float> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows_ * cols_) {
    throw DimensionError("confidence buffer does not match " +
                         std::to_string(rows_) + "x" + std::to_string(cols_));
  }
}

void ParallelFor(std::size_t count, int workers,
                 const std::function<void(std::size_t)>& body) {
  const std::size_t threads =
      std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, workers)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  auto run = [&]() {
    for (std::size_t i = next++; i < count; i = next++) {
      if (failed.load()) return;
      try {
        body(i);
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads - 1);
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(run);
  run();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace fedguard
