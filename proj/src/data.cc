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

#include "fedguard/data.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>
#include <numeric>
#include <random>

#include "fedguard/common.h"

namespace fedguard::data {
namespace {

constexpr std::uint32_t kIdxImageMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

std::vector<unsigned char> ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path + ": cannot open file");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t ReadBigEndian(const std::vector<unsigned char>& buf,
                            std::size_t offset, const std::string& path) {
  if (buf.size() < offset + 4) throw FormatError(path + ": truncated IDX header");
  return (std::uint32_t{buf[offset]} << 24) | (std::uint32_t{buf[offset + 1]} << 16) |
         (std::uint32_t{buf[offset + 2]} << 8) | std::uint32_t{buf[offset + 3]};
}

void WriteBigEndian(std::ofstream& out, std::uint32_t v) {
  const std::array<char, 4> bytes = {static_cast<char>(v >> 24),
                                     static_cast<char>(v >> 16),
                                     static_cast<char>(v >> 8),
                                     static_cast<char>(v)};
  out.write(bytes.data(), 4);
}

}  // namespace

LabeledDataset LoadIdx(const std::string& images_path,
                       const std::string& labels_path, int class_count) {
  const std::vector<unsigned char> img = ReadFile(images_path);
  const std::vector<unsigned char> lab = ReadFile(labels_path);

  if (ReadBigEndian(img, 0, images_path) != kIdxImageMagic) {
    throw FormatError(images_path + ": bad magic, expected 0x00000803");
  }
  if (ReadBigEndian(lab, 0, labels_path) != kIdxLabelMagic) {
    throw FormatError(labels_path + ": bad magic, expected 0x00000801");
  }
  const std::size_t n_images = ReadBigEndian(img, 4, images_path);
  const std::size_t rows = ReadBigEndian(img, 8, images_path);
  const std::size_t cols = ReadBigEndian(img, 12, images_path);
  const std::size_t n_labels = ReadBigEndian(lab, 4, labels_path);

  const std::size_t pixels = n_images * rows * cols;
  if (img.size() < 16 + pixels) {
    throw FormatError(images_path + ": truncated, expected " +
                      std::to_string(16 + pixels) + " bytes, found " +
                      std::to_string(img.size()));
  }
  if (lab.size() < 8 + n_labels) {
    throw FormatError(labels_path + ": truncated, expected " +
                      std::to_string(8 + n_labels) + " bytes, found " +
                      std::to_string(lab.size()));
  }
  if (n_images != n_labels) {
    throw FormatError(labels_path + ": holds " + std::to_string(n_labels) +
                      " labels but " + images_path + " holds " +
                      std::to_string(n_images) + " images");
  }
  if (n_images == 0) throw FormatError(images_path + ": contains no images");

  std::vector<float> images(pixels);
  for (std::size_t i = 0; i < pixels; ++i) {
    images[i] = static_cast<float>(img[16 + i]) / 255.0f;
  }
  std::vector<int> labels(n_labels);
  int max_label = 0;
  for (std::size_t i = 0; i < n_labels; ++i) {
    labels[i] = lab[8 + i];
    max_label = std::max(max_label, labels[i]);
  }
  const int classes = class_count > 0 ? class_count : max_label + 1;
  if (max_label >= classes) {
    throw FormatError(labels_path + ": label " + std::to_string(max_label) +
                      " exceeds class count " + std::to_string(classes));
  }
  return LabeledDataset(Shape{1, static_cast<int>(rows), static_cast<int>(cols)},
                        std::max(classes, 2), std::move(images), std::move(labels));
}

void WriteIdx(const LabeledDataset& data, const std::string& images_path,
              const std::string& labels_path) {
  if (data.shape().channels != 1) {
    throw ConfigError("IDX export supports single-channel images only");
  }
  std::ofstream img(images_path, std::ios::binary);
  if (!img) throw IoError(images_path + ": cannot open for writing");
  WriteBigEndian(img, kIdxImageMagic);
  WriteBigEndian(img, static_cast<std::uint32_t>(data.size()));
  WriteBigEndian(img, static_cast<std::uint32_t>(data.shape().height));
  WriteBigEndian(img, static_cast<std::uint32_t>(data.shape().width));
  for (float v : data.images()) {
    const long byte = std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f);
    img.put(static_cast<char>(static_cast<unsigned char>(byte)));
  }
  std::ofstream lab(labels_path, std::ios::binary);
  if (!lab) throw IoError(labels_path + ": cannot open for writing");
  WriteBigEndian(lab, kIdxLabelMagic);
  WriteBigEndian(lab, static_cast<std::uint32_t>(data.size()));
  for (int l : data.labels()) lab.put(static_cast<char>(l));
  if (!img || !lab) throw IoError(images_path + ": write failed");
}

LabeledDataset SynthDataset(const SynthSpec& spec, std::uint64_t seed) {
  if (spec.classes < 2) throw ConfigError("synthetic data needs >= 2 classes");
  if (spec.per_class < 1) throw ConfigError("synthetic data needs per_class >= 1");
  if (spec.shape.Size() < 1) throw ConfigError("synthetic image shape is empty");

  const int h = spec.shape.height;
  const int w = spec.shape.width;
  const int plane = h * w;
  const std::size_t n =
      static_cast<std::size_t>(spec.classes) * static_cast<std::size_t>(spec.per_class);
  std::vector<float> images(n * static_cast<std::size_t>(spec.shape.Size()));
  std::vector<int> labels(n);

  std::mt19937_64 rng(seed);
  std::normal_distribution<float> gauss(0.0f, 1.0f);
  std::uniform_real_distribution<float> amp(0.7f, 1.0f);
  const float cy0 = 0.5f * static_cast<float>(h - 1);
  const float cx0 = 0.5f * static_cast<float>(w - 1);
  const float two_sigma_sq = 2.0f * spec.blob_sigma * spec.blob_sigma;

  for (std::size_t i = 0; i < n; ++i) {
    const int c = static_cast<int>(i % static_cast<std::size_t>(spec.classes));
    labels[i] = c;
    const float angle = 2.0f * std::numbers::pi_v<float> * static_cast<float>(c) /
                        static_cast<float>(spec.classes);
    const float cy = cy0 + spec.ring_radius * static_cast<float>(h) * std::sin(angle) +
                     spec.jitter * gauss(rng);
    const float cx = cx0 + spec.ring_radius * static_cast<float>(w) * std::cos(angle) +
                     spec.jitter * gauss(rng);
    const float a = amp(rng);
    float* img = images.data() + i * static_cast<std::size_t>(spec.shape.Size());
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const float dy = static_cast<float>(y) - cy;
        const float dx = static_cast<float>(x) - cx;
        const float base = a * std::exp(-(dy * dy + dx * dx) / two_sigma_sq);
        for (int ch = 0; ch < spec.shape.channels; ++ch) {
          const float v = base + spec.pixel_noise * gauss(rng);
          img[ch * plane + y * w + x] = std::clamp(v, 0.0f, 1.0f);
        }
      }
    }
  }
  return LabeledDataset(spec.shape, spec.classes, std::move(images),
                        std::move(labels));
}

std::vector<std::vector<std::size_t>> PartitionIndices(
    const LabeledDataset& dataset, const PartitionConfig& config) {
  if (dataset.empty()) throw DataError("cannot partition an empty dataset");
  if (config.client_count < 1) throw ConfigError("client_count must be >= 1");
  const std::size_t n_clients = static_cast<std::size_t>(config.client_count);
  if (n_clients > dataset.size()) {
    throw InfeasibleError("cannot split " + std::to_string(dataset.size()) +
                          " samples across " + std::to_string(n_clients) +
                          " clients");
  }
  std::mt19937_64 rng(DeriveSeed(config.seed, SeedStream::kPartition));
  std::vector<std::vector<std::size_t>> parts(n_clients);

  if (config.mode == PartitionMode::kIid) {
    std::vector<std::size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    const std::size_t base = order.size() / n_clients;
    const std::size_t extra = order.size() % n_clients;
    std::size_t pos = 0;
    for (std::size_t c = 0; c < n_clients; ++c) {
      const std::size_t take = base + (c < extra ? 1 : 0);
      parts[c].assign(order.begin() + static_cast<long>(pos),
                      order.begin() + static_cast<long>(pos + take));
      pos += take;
    }
    return parts;
  }

  if (!(config.alpha > 0.0)) {
    throw ConfigError("dirichlet partitioning needs alpha > 0");
  }
  std::vector<std::vector<std::size_t>> by_class(
      static_cast<std::size_t>(dataset.class_count()));
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    by_class[static_cast<std::size_t>(dataset.Label(i))].push_back(i);
  }
  std::gamma_distribution<double> gamma(config.alpha, 1.0);
  std::vector<double> p(n_clients);
  for (auto& rows : by_class) {
    if (rows.empty()) continue;
    std::shuffle(rows.begin(), rows.end(), rng);
    double total = 0.0;
    for (double& v : p) {
      v = gamma(rng);
      total += v;
    }
    if (!(total > 0.0)) {
      // Every draw underflowed: the limit distribution is a point mass.
      std::fill(p.begin(), p.end(), 0.0);
      p[std::uniform_int_distribution<std::size_t>(0, n_clients - 1)(rng)] = 1.0;
      total = 1.0;
    }
    const double m = static_cast<double>(rows.size());
    double cum = 0.0;
    std::size_t prev = 0;
    for (std::size_t c = 0; c < n_clients; ++c) {
      cum += p[c] / total;
      std::size_t cut = c + 1 == n_clients
                            ? rows.size()
                            : static_cast<std::size_t>(std::llround(cum * m));
      cut = std::clamp(cut, prev, rows.size());
      parts[c].insert(parts[c].end(), rows.begin() + static_cast<long>(prev),
                      rows.begin() + static_cast<long>(cut));
      prev = cut;
    }
  }

  for (std::size_t c = 0; c < n_clients; ++c) {
    if (!parts[c].empty()) continue;
    std::size_t donor = 0;
    for (std::size_t j = 1; j < n_clients; ++j) {
      if (parts[j].size() > parts[donor].size()) donor = j;
    }
    parts[c].push_back(parts[donor].back());
    parts[donor].pop_back();
  }
  return parts;
}

std::vector<LabeledDataset> Partition(const LabeledDataset& dataset,
                                      const PartitionConfig& config) {
  std::vector<LabeledDataset> out;
  for (const auto& idx : PartitionIndices(dataset, config)) {
    out.push_back(dataset.Subset(idx));
  }
  return out;
}

LabeledDataset SampleSeed(const LabeledDataset& dataset, double fraction,
                          std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw ConfigError("seed fraction must lie in (0, 1]");
  }
  if (dataset.empty()) throw DataError("cannot sample from an empty dataset");
  const std::size_t n = dataset.size();
  const std::size_t target = std::min(
      n, std::max(static_cast<std::size_t>(dataset.class_count()),
                  static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)))));

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(DeriveSeed(seed, SeedStream::kSeedSample));
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<bool> taken(n, false);
  std::vector<bool> class_seen(static_cast<std::size_t>(dataset.class_count()), false);
  std::size_t count = 0;
  for (std::size_t pos = 0; pos < n; ++pos) {
    const auto label = static_cast<std::size_t>(dataset.Label(order[pos]));
    if (!class_seen[label]) {
      class_seen[label] = true;
      taken[pos] = true;
      ++count;
    }
  }
  for (std::size_t pos = 0; pos < n && count < target; ++pos) {
    if (!taken[pos]) {
      taken[pos] = true;
      ++count;
    }
  }
  std::vector<std::size_t> rows;
  rows.reserve(count);
  for (std::size_t pos = 0; pos < n; ++pos) {
    if (taken[pos]) rows.push_back(order[pos]);
  }
  return dataset.Subset(rows);
}

LabeledDataset Replicate(const LabeledDataset& seed_dataset, int times) {
  if (times < 1) throw ConfigError("replication count must be >= 1");
  std::vector<std::size_t> rows;
  rows.reserve(seed_dataset.size() * static_cast<std::size_t>(times));
  for (int t = 0; t < times; ++t) {
    for (std::size_t i = 0; i < seed_dataset.size(); ++i) rows.push_back(i);
  }
  return seed_dataset.Subset(rows);
}

}  // namespace fedguard::data
