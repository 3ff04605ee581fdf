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

// Minimal feed-forward network engine: forward pass, softmax cross-entropy
// backprop and plain SGD over a flat float32 parameter vector.
//
// Canonical flattening order: layers in order; within a layer the weight
// tensor precedes the bias; tensors are row-major. Conv weights are laid out
// [out][in][3][3], dense weights [out][in]. Layers without parameters (relu,
// maxpool, flatten) contribute nothing.

#ifndef FEDGUARD_NN_H_
#define FEDGUARD_NN_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fedguard/dataset.h"

namespace fedguard::nn {

enum class LayerKind {
  kConv3x3,   // 3x3 kernel, stride 1, zero padding 1
  kMaxPool2,  // 2x2 window, stride 2 (odd trailing row/col dropped)
  kRelu,
  kFlatten,
  kDense,
};

struct Layer {
  LayerKind kind = LayerKind::kRelu;
  int in = 0;   // conv in-channels or dense in-dim
  int out = 0;  // conv out-channels or dense out-dim

  static Layer Conv(int in_channels, int out_channels) {
    return {LayerKind::kConv3x3, in_channels, out_channels};
  }
  static Layer MaxPool() { return {LayerKind::kMaxPool2, 0, 0}; }
  static Layer Relu() { return {LayerKind::kRelu, 0, 0}; }
  static Layer Flatten() { return {LayerKind::kFlatten, 0, 0}; }
  static Layer Dense(int in_dim, int out_dim) {
    return {LayerKind::kDense, in_dim, out_dim};
  }
  bool operator==(const Layer&) const = default;
};

// A validated layer stack. The network always ends in an implicit softmax
// over the last layer's outputs.
class ModelArch {
 public:
  // Throws ConfigError when consecutive shapes do not line up or the final
  // width differs from `class_count`.
  ModelArch(Shape input, std::vector<Layer> layers, int class_count);

  // input -> Dense -> Relu -> ... -> Dense(class_count).
  static ModelArch Mlp(Shape input, const std::vector<int>& hidden,
                       int class_count);
  // Conv(C,c1) Relu Pool Conv(c1,c2) Relu Pool Flatten Dense(c2*H/4*W/4, dense)
  // Relu Dense(dense, classes). With c1=32, c2=64, dense=128 on 1x28x28 this
  // is the reference MNIST network.
  static ModelArch Cnn(Shape input, int class_count, int conv1 = 32,
                       int conv2 = 64, int dense = 128);

  const Shape& input_shape() const { return input_; }
  int class_count() const { return class_count_; }
  const std::vector<Layer>& layers() const { return layers_; }
  // Output geometry of layer i (dense outputs are 1x1xN).
  const Shape& OutputShape(std::size_t i) const { return shapes_[i + 1]; }
  const Shape& InputShape(std::size_t i) const { return shapes_[i]; }
  std::size_t ParamCount() const { return param_count_; }
  // Offset of layer i's first parameter in the flat vector.
  std::size_t ParamOffset(std::size_t i) const { return offsets_[i]; }
  std::size_t LayerParamCount(std::size_t i) const;
  // Stable textual identifier, e.g. "in1x4x4|dense16-8|relu|dense8-3".
  const std::string& id() const { return id_; }

  bool operator==(const ModelArch& o) const { return id_ == o.id_; }

 private:
  Shape input_;
  std::vector<Layer> layers_;
  int class_count_;
  std::vector<Shape> shapes_;
  std::vector<std::size_t> offsets_;
  std::size_t param_count_ = 0;
  std::string id_;
};

// A model's trainable parameters in canonical order, tagged with the id of
// the architecture that defines that order.
struct ParamVector {
  std::vector<float> values;
  std::string arch_id;

  std::size_t size() const { return values.size(); }
  bool operator==(const ParamVector&) const = default;
};

// Per-layer view produced by Unflatten.
struct LayerTensors {
  std::vector<float> weights;
  std::vector<float> bias;
  bool operator==(const LayerTensors&) const = default;
};

std::vector<LayerTensors> Unflatten(const ModelArch& arch,
                                    const ParamVector& params);
ParamVector Flatten(const ModelArch& arch,
                    const std::vector<LayerTensors>& tensors);

struct TrainConfig {
  int epochs = 10;
  int batch_size = 32;
  float learning_rate = 0.01f;
};

// He-uniform weights, U(-sqrt(6/fan_in), sqrt(6/fan_in)), and zero biases.
// fan_in is in-dim for dense layers and in_channels*9 for convolutions.
ParamVector InitModel(const ModelArch& arch, std::uint64_t seed);

// All-zero parameters (uniform softmax output for any input).
ParamVector ZeroModel(const ModelArch& arch);

// Softmax confidences for every row of `data`.
ConfidenceMatrix Forward(const ModelArch& arch, const ParamVector& params,
                         const LabeledDataset& data);
// Same for a raw batch of `count` images laid out back to back.
ConfidenceMatrix Forward(const ModelArch& arch, const ParamVector& params,
                         std::span<const float> images, std::size_t count);

// Mini-batch SGD on mean softmax cross-entropy. The epoch permutation is drawn
// from a generator seeded with `seed` only. When `epoch_losses` is non-null it
// receives the mean pre-update batch loss of each epoch.
ParamVector TrainLocal(const ModelArch& arch, const ParamVector& params,
                       const LabeledDataset& data, const TrainConfig& config,
                       std::uint64_t seed,
                       std::vector<double>* epoch_losses = nullptr);

// Fraction of rows whose argmax (lowest index on ties) equals the label.
double Evaluate(const ModelArch& arch, const ParamVector& params,
                const LabeledDataset& data);

// Mean cross-entropy over `data`. Non-finite outputs yield +infinity.
double MeanLoss(const ModelArch& arch, const ParamVector& params,
                const LabeledDataset& data);

// Argmax with lowest-index tie-break; NaN entries never win.
int Argmax(std::span<const float> row);

// Throws DimensionError unless params were built for `arch`.
void CheckParams(const ModelArch& arch, const ParamVector& params);

}  // namespace fedguard::nn

#endif  // FEDGUARD_NN_H_
