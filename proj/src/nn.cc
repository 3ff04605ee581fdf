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

#include "fedguard/nn.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "fedguard/common.h"
#include "fedguard/nn_engine.h"

namespace fedguard::nn {
namespace {

std::string ShapeString(const Shape& s) {
  return std::to_string(s.channels) + "x" + std::to_string(s.height) + "x" +
         std::to_string(s.width);
}

}  // namespace

ModelArch::ModelArch(Shape input, std::vector<Layer> layers, int class_count)
    : input_(input), layers_(std::move(layers)), class_count_(class_count) {
  if (input_.channels < 1 || input_.height < 1 || input_.width < 1) {
    throw ConfigError("model input shape must be positive, got " +
                      ShapeString(input_));
  }
  if (layers_.empty()) throw ConfigError("model has no layers");
  if (class_count_ < 2) throw ConfigError("model needs at least two classes");

  id_ = "in" + ShapeString(input_);
  shapes_.push_back(input_);
  Shape cur = input_;
  bool flat = false;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const Layer& l = layers_[i];
    offsets_.push_back(param_count_);
    const std::string where = "layer " + std::to_string(i) + ": ";
    switch (l.kind) {
      case LayerKind::kConv3x3:
        if (flat) throw ConfigError(where + "conv after flatten");
        if (l.in != cur.channels || l.out < 1) {
          throw ConfigError(where + "conv expects " + std::to_string(l.in) +
                            " channels, input has " +
                            std::to_string(cur.channels));
        }
        param_count_ += static_cast<std::size_t>(l.out) * l.in * 9 + l.out;
        cur.channels = l.out;
        id_ += "|conv" + std::to_string(l.in) + "-" + std::to_string(l.out);
        break;
      case LayerKind::kMaxPool2:
        if (flat) throw ConfigError(where + "maxpool after flatten");
        if (cur.height < 2 || cur.width < 2) {
          throw ConfigError(where + "maxpool on " + ShapeString(cur));
        }
        cur.height /= 2;
        cur.width /= 2;
        id_ += "|pool";
        break;
      case LayerKind::kRelu:
        id_ += "|relu";
        break;
      case LayerKind::kFlatten:
        cur = Shape{1, 1, cur.Size()};
        flat = true;
        id_ += "|flatten";
        break;
      case LayerKind::kDense:
        if (l.in != cur.Size() || l.out < 1) {
          throw ConfigError(where + "dense expects in-dim " +
                            std::to_string(l.in) + ", input has " +
                            std::to_string(cur.Size()));
        }
        param_count_ += static_cast<std::size_t>(l.out) * l.in + l.out;
        cur = Shape{1, 1, l.out};
        flat = true;
        id_ += "|dense" + std::to_string(l.in) + "-" + std::to_string(l.out);
        break;
    }
    shapes_.push_back(cur);
  }
  if (cur.Size() != class_count_) {
    throw ConfigError("final layer width " + std::to_string(cur.Size()) +
                      " differs from class count " +
                      std::to_string(class_count_));
  }
}

ModelArch ModelArch::Mlp(Shape input, const std::vector<int>& hidden,
                         int class_count) {
  std::vector<Layer> layers;
  int width = input.Size();
  for (int h : hidden) {
    layers.push_back(Layer::Dense(width, h));
    layers.push_back(Layer::Relu());
    width = h;
  }
  layers.push_back(Layer::Dense(width, class_count));
  return ModelArch(input, std::move(layers), class_count);
}

ModelArch ModelArch::Cnn(Shape input, int class_count, int conv1, int conv2,
                         int dense) {
  const int flat = conv2 * (input.height / 2 / 2) * (input.width / 2 / 2);
  return ModelArch(input,
                   {Layer::Conv(input.channels, conv1), Layer::Relu(),
                    Layer::MaxPool(), Layer::Conv(conv1, conv2), Layer::Relu(),
                    Layer::MaxPool(), Layer::Flatten(), Layer::Dense(flat, dense),
                    Layer::Relu(), Layer::Dense(dense, class_count)},
                   class_count);
}

std::size_t ModelArch::LayerParamCount(std::size_t i) const {
  const std::size_t end = i + 1 < offsets_.size() ? offsets_[i + 1] : param_count_;
  return end - offsets_[i];
}

void CheckParams(const ModelArch& arch, const ParamVector& params) {
  if (params.arch_id != arch.id() || params.values.size() != arch.ParamCount()) {
    throw DimensionError("parameter vector (" + params.arch_id + ", " +
                         std::to_string(params.values.size()) +
                         " values) does not belong to " + arch.id() + " (" +
                         std::to_string(arch.ParamCount()) + " values)");
  }
}

std::vector<LayerTensors> Unflatten(const ModelArch& arch,
                                    const ParamVector& params) {
  CheckParams(arch, params);
  std::vector<LayerTensors> out(arch.layers().size());
  for (std::size_t i = 0; i < arch.layers().size(); ++i) {
    const Layer& l = arch.layers()[i];
    std::size_t n_weights = 0;
    if (l.kind == LayerKind::kConv3x3) {
      n_weights = static_cast<std::size_t>(l.out) * l.in * 9;
    } else if (l.kind == LayerKind::kDense) {
      n_weights = static_cast<std::size_t>(l.out) * l.in;
    } else {
      continue;
    }
    auto begin = params.values.begin() + static_cast<long>(arch.ParamOffset(i));
    out[i].weights.assign(begin, begin + static_cast<long>(n_weights));
    out[i].bias.assign(begin + static_cast<long>(n_weights),
                       begin + static_cast<long>(n_weights + l.out));
  }
  return out;
}

ParamVector Flatten(const ModelArch& arch,
                    const std::vector<LayerTensors>& tensors) {
  if (tensors.size() != arch.layers().size()) {
    throw DimensionError("expected one tensor group per layer");
  }
  ParamVector p{{}, arch.id()};
  p.values.reserve(arch.ParamCount());
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    if (tensors[i].weights.size() + tensors[i].bias.size() !=
        arch.LayerParamCount(i)) {
      throw DimensionError("layer " + std::to_string(i) +
                           " tensor sizes do not match the architecture");
    }
    p.values.insert(p.values.end(), tensors[i].weights.begin(),
                    tensors[i].weights.end());
    p.values.insert(p.values.end(), tensors[i].bias.begin(),
                    tensors[i].bias.end());
  }
  return p;
}

ParamVector InitModel(const ModelArch& arch, std::uint64_t seed) {
  std::mt19937_64 rng(DeriveSeed(seed, SeedStream::kModelInit));
  ParamVector p = ZeroModel(arch);
  for (std::size_t i = 0; i < arch.layers().size(); ++i) {
    const Layer& l = arch.layers()[i];
    std::size_t n_weights = 0;
    int fan_in = 0;
    if (l.kind == LayerKind::kConv3x3) {
      n_weights = static_cast<std::size_t>(l.out) * l.in * 9;
      fan_in = l.in * 9;
    } else if (l.kind == LayerKind::kDense) {
      n_weights = static_cast<std::size_t>(l.out) * l.in;
      fan_in = l.in;
    } else {
      continue;
    }
    const float bound = std::sqrt(6.0f / static_cast<float>(fan_in));
    std::uniform_real_distribution<float> dist(-bound, bound);
    float* w = p.values.data() + arch.ParamOffset(i);
    for (std::size_t j = 0; j < n_weights; ++j) w[j] = dist(rng);
  }
  return p;
}

ParamVector ZeroModel(const ModelArch& arch) {
  return ParamVector{std::vector<float>(arch.ParamCount(), 0.0f), arch.id()};
}

ConfidenceMatrix Forward(const ModelArch& arch, const ParamVector& params,
                         std::span<const float> images, std::size_t count) {
  CheckParams(arch, params);
  const std::size_t dim = static_cast<std::size_t>(arch.input_shape().Size());
  if (images.size() != count * dim) {
    throw DimensionError("expected " + std::to_string(count) + " images of " +
                         std::to_string(dim) + " values, got " +
                         std::to_string(images.size()) + " values");
  }
  const std::size_t classes = static_cast<std::size_t>(arch.class_count());
  ConfidenceMatrix out(count, classes);
  internal::Engine<float> engine(arch);
  for (std::size_t i = 0; i < count; ++i) {
    engine.Forward(params.values, images.subspan(i * dim, dim),
                   out.MutableRow(i));
  }
  return out;
}

ConfidenceMatrix Forward(const ModelArch& arch, const ParamVector& params,
                         const LabeledDataset& data) {
  if (data.shape() != arch.input_shape()) {
    throw DimensionError("dataset images do not match the model input shape");
  }
  return Forward(arch, params, data.images(), data.size());
}

ParamVector TrainLocal(const ModelArch& arch, const ParamVector& params,
                       const LabeledDataset& data, const TrainConfig& config,
                       std::uint64_t seed, std::vector<double>* epoch_losses) {
  CheckParams(arch, params);
  if (data.empty()) throw DataError("cannot train on an empty dataset");
  if (data.shape() != arch.input_shape()) {
    throw DimensionError("dataset images do not match the model input shape");
  }
  if (config.epochs < 1 || config.batch_size < 1) {
    throw ConfigError("training needs epochs >= 1 and batch_size >= 1");
  }
  if (data.class_count() > arch.class_count()) {
    throw DimensionError("dataset has more classes than the model outputs");
  }

  ParamVector out = params;
  if (epoch_losses != nullptr) epoch_losses->clear();

  const std::size_t n = data.size();
  const std::size_t dim = static_cast<std::size_t>(data.feature_size());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  internal::Engine<float> engine(arch);
  std::vector<float> probs(static_cast<std::size_t>(arch.class_count()));
  std::vector<double> grad(arch.ParamCount());

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < n;
         start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end =
          std::min(n, start + static_cast<std::size_t>(config.batch_size));
      std::fill(grad.begin(), grad.end(), 0.0);
      double loss = 0.0;
      for (std::size_t k = start; k < end; ++k) {
        const std::size_t row = order[k];
        engine.Forward(out.values,
                       std::span<const float>(data.images()).subspan(row * dim, dim),
                       probs);
        loss += engine.Backward(out.values, data.Label(row), grad);
      }
      const double inv = 1.0 / static_cast<double>(end - start);
      epoch_loss += loss * inv;
      ++batches;
      if (config.learning_rate != 0.0f) {
        const double step = static_cast<double>(config.learning_rate) * inv;
        for (std::size_t j = 0; j < grad.size(); ++j) {
          out.values[j] -= static_cast<float>(step * grad[j]);
        }
      }
    }
    if (epoch_losses != nullptr) {
      epoch_losses->push_back(epoch_loss / static_cast<double>(batches));
    }
  }
  return out;
}

int Argmax(std::span<const float> row) {
  int best = -1;
  for (std::size_t j = 0; j < row.size(); ++j) {
    if (std::isnan(row[j])) continue;
    if (best < 0 || row[j] > row[static_cast<std::size_t>(best)]) {
      best = static_cast<int>(j);
    }
  }
  return best < 0 ? 0 : best;
}

double Evaluate(const ModelArch& arch, const ParamVector& params,
                const LabeledDataset& data) {
  if (data.empty()) throw DataError("cannot evaluate on an empty dataset");
  const ConfidenceMatrix conf = Forward(arch, params, data);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (Argmax(conf.Row(i)) == data.Label(i)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

double MeanLoss(const ModelArch& arch, const ParamVector& params,
                const LabeledDataset& data) {
  CheckParams(arch, params);
  if (data.empty()) throw DataError("cannot compute a loss on an empty dataset");
  if (data.shape() != arch.input_shape()) {
    throw DimensionError("dataset images do not match the model input shape");
  }
  const double loss = internal::BatchLoss<float>(
      arch, params.values, data.images(), data.labels());
  return std::isfinite(loss) ? loss : std::numeric_limits<double>::infinity();
}

}  // namespace fedguard::nn
