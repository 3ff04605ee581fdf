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

#include "fedguard/nn_engine.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fedguard/common.h"

namespace fedguard::nn::internal {
namespace {

template <typename T>
void ConvForward(const Shape& in_shape, int out_channels, const T* weights,
                 const T* bias, const T* in, T* out,
                 std::vector<double>& acc) {
  const int h = in_shape.height;
  const int w = in_shape.width;
  const int hw = h * w;
  acc.assign(static_cast<std::size_t>(hw), 0.0);
  for (int o = 0; o < out_channels; ++o) {
    std::fill(acc.begin(), acc.end(), static_cast<double>(bias[o]));
    for (int c = 0; c < in_shape.channels; ++c) {
      const T* plane = in + c * hw;
      const T* k = weights + (o * in_shape.channels + c) * 9;
      for (int ky = 0; ky < 3; ++ky) {
        for (int kx = 0; kx < 3; ++kx) {
          const double kv = static_cast<double>(k[ky * 3 + kx]);
          const int dy = ky - 1;
          const int dx = kx - 1;
          const int y0 = std::max(0, -dy);
          const int y1 = std::min(h, h - dy);
          const int x0 = std::max(0, -dx);
          const int x1 = std::min(w, w - dx);
          for (int y = y0; y < y1; ++y) {
            const T* src = plane + (y + dy) * w + dx;
            double* dst = acc.data() + y * w;
            for (int x = x0; x < x1; ++x) dst[x] += kv * src[x];
          }
        }
      }
    }
    T* dst = out + o * hw;
    for (int i = 0; i < hw; ++i) dst[i] = static_cast<T>(acc[i]);
  }
}

template <typename T>
void ConvBackward(const Shape& in_shape, int out_channels, const T* weights,
                  const T* in, const double* d_out, double* grad_w,
                  double* grad_b, double* d_in) {
  const int h = in_shape.height;
  const int w = in_shape.width;
  const int hw = h * w;
  std::fill(d_in, d_in + in_shape.channels * hw, 0.0);
  for (int o = 0; o < out_channels; ++o) {
    const double* g = d_out + o * hw;
    double gb = 0.0;
    for (int i = 0; i < hw; ++i) gb += g[i];
    grad_b[o] += gb;
    for (int c = 0; c < in_shape.channels; ++c) {
      const T* plane = in + c * hw;
      double* d_plane = d_in + c * hw;
      const int kbase = (o * in_shape.channels + c) * 9;
      for (int ky = 0; ky < 3; ++ky) {
        for (int kx = 0; kx < 3; ++kx) {
          const int dy = ky - 1;
          const int dx = kx - 1;
          const int y0 = std::max(0, -dy);
          const int y1 = std::min(h, h - dy);
          const int x0 = std::max(0, -dx);
          const int x1 = std::min(w, w - dx);
          const double kv = static_cast<double>(weights[kbase + ky * 3 + kx]);
          double gw = 0.0;
          for (int y = y0; y < y1; ++y) {
            const T* src = plane + (y + dy) * w + dx;
            double* dsrc = d_plane + (y + dy) * w + dx;
            const double* gr = g + y * w;
            for (int x = x0; x < x1; ++x) {
              gw += gr[x] * static_cast<double>(src[x]);
              dsrc[x] += kv * gr[x];
            }
          }
          grad_w[kbase + ky * 3 + kx] += gw;
        }
      }
    }
  }
}

}  // namespace

template <typename T>
Engine<T>::Engine(const ModelArch& arch) : arch_(arch) {
  const auto& layers = arch.layers();
  acts_.resize(layers.size() + 1);
  argmax_.resize(layers.size());
  acts_[0].resize(static_cast<std::size_t>(arch.input_shape().Size()));
  for (std::size_t i = 0; i < layers.size(); ++i) {
    acts_[i + 1].resize(static_cast<std::size_t>(arch.OutputShape(i).Size()));
    if (layers[i].kind == LayerKind::kMaxPool2) {
      argmax_[i].resize(acts_[i + 1].size());
    }
  }
  logits_.resize(static_cast<std::size_t>(arch.class_count()));
}

template <typename T>
void Engine<T>::Forward(std::span<const T> params, std::span<const T> input,
                        std::span<T> probs) {
  const auto& layers = arch_.layers();
  std::copy(input.begin(), input.end(), acts_[0].begin());
  for (std::size_t li = 0; li < layers.size(); ++li) {
    const Layer& layer = layers[li];
    const Shape& in_shape = arch_.InputShape(li);
    const Shape& out_shape = arch_.OutputShape(li);
    const T* p = params.data() + arch_.ParamOffset(li);
    const std::vector<T>& in = acts_[li];
    std::vector<T>& out = acts_[li + 1];
    switch (layer.kind) {
      case LayerKind::kConv3x3: {
        const T* weights = p;
        const T* bias = p + layer.out * layer.in * 9;
        ConvForward(in_shape, layer.out, weights, bias, in.data(), out.data(),
                    scratch_);
        break;
      }
      case LayerKind::kMaxPool2: {
        const int w_in = in_shape.width;
        const int hw_in = in_shape.height * w_in;
        for (int c = 0; c < out_shape.channels; ++c) {
          for (int y = 0; y < out_shape.height; ++y) {
            for (int x = 0; x < out_shape.width; ++x) {
              int best = c * hw_in + (2 * y) * w_in + 2 * x;
              for (int k = 1; k < 4; ++k) {
                const int idx = c * hw_in + (2 * y + k / 2) * w_in + 2 * x + k % 2;
                // Strict comparison keeps the first maximum; NaN never wins.
                if (in[idx] > in[best]) best = idx;
              }
              const int o = (c * out_shape.height + y) * out_shape.width + x;
              out[o] = in[best];
              argmax_[li][o] = best;
            }
          }
        }
        break;
      }
      case LayerKind::kRelu:
        for (std::size_t i = 0; i < in.size(); ++i) {
          out[i] = in[i] > T(0) ? in[i] : T(0);
        }
        break;
      case LayerKind::kFlatten:
        std::copy(in.begin(), in.end(), out.begin());
        break;
      case LayerKind::kDense: {
        const T* weights = p;
        const T* bias = p + layer.out * layer.in;
        for (int o = 0; o < layer.out; ++o) {
          const T* row = weights + o * layer.in;
          double acc = static_cast<double>(bias[o]);
          for (int i = 0; i < layer.in; ++i) {
            acc += static_cast<double>(row[i]) * static_cast<double>(in[i]);
          }
          out[o] = static_cast<T>(acc);
        }
        break;
      }
    }
  }
  const std::vector<T>& z = acts_.back();
  double max_z = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < z.size(); ++j) {
    logits_[j] = static_cast<double>(z[j]);
    max_z = std::max(max_z, logits_[j]);
  }
  double sum = 0.0;
  for (double v : logits_) sum += std::exp(v - max_z);
  for (std::size_t j = 0; j < z.size(); ++j) {
    probs[j] = static_cast<T>(std::exp(logits_[j] - max_z) / sum);
  }
}

template <typename T>
double Engine<T>::Loss(int label) const {
  double max_z = -std::numeric_limits<double>::infinity();
  for (double v : logits_) max_z = std::max(max_z, v);
  double sum = 0.0;
  for (double v : logits_) sum += std::exp(v - max_z);
  return max_z + std::log(sum) - logits_[static_cast<std::size_t>(label)];
}

template <typename T>
double Engine<T>::Backward(std::span<const T> params, int label,
                           std::span<double> grad) {
  const auto& layers = arch_.layers();
  const double loss = Loss(label);

  // d(loss)/d(logits) = softmax - onehot.
  double max_z = -std::numeric_limits<double>::infinity();
  for (double v : logits_) max_z = std::max(max_z, v);
  double sum = 0.0;
  for (double v : logits_) sum += std::exp(v - max_z);
  delta_.assign(logits_.size(), 0.0);
  for (std::size_t j = 0; j < logits_.size(); ++j) {
    delta_[j] = std::exp(logits_[j] - max_z) / sum;
  }
  delta_[static_cast<std::size_t>(label)] -= 1.0;

  for (std::size_t li = layers.size(); li-- > 0;) {
    const Layer& layer = layers[li];
    const Shape& in_shape = arch_.InputShape(li);
    const std::vector<T>& in = acts_[li];
    const std::vector<T>& out = acts_[li + 1];
    const std::size_t offset = arch_.ParamOffset(li);
    next_delta_.assign(in.size(), 0.0);
    switch (layer.kind) {
      case LayerKind::kConv3x3: {
        const T* weights = params.data() + offset;
        double* grad_w = grad.data() + offset;
        double* grad_b = grad_w + layer.out * layer.in * 9;
        ConvBackward(in_shape, layer.out, weights, in.data(), delta_.data(),
                     grad_w, grad_b, next_delta_.data());
        break;
      }
      case LayerKind::kMaxPool2:
        for (std::size_t o = 0; o < out.size(); ++o) {
          next_delta_[static_cast<std::size_t>(argmax_[li][o])] += delta_[o];
        }
        break;
      case LayerKind::kRelu:
        for (std::size_t i = 0; i < in.size(); ++i) {
          next_delta_[i] = in[i] > T(0) ? delta_[i] : 0.0;
        }
        break;
      case LayerKind::kFlatten:
        std::copy(delta_.begin(), delta_.end(), next_delta_.begin());
        break;
      case LayerKind::kDense: {
        const T* weights = params.data() + offset;
        double* grad_w = grad.data() + offset;
        double* grad_b = grad_w + layer.out * layer.in;
        for (int o = 0; o < layer.out; ++o) {
          const double d = delta_[static_cast<std::size_t>(o)];
          if (d == 0.0) continue;
          grad_b[o] += d;
          const T* row = weights + o * layer.in;
          double* grow = grad_w + o * layer.in;
          for (int i = 0; i < layer.in; ++i) {
            grow[i] += d * static_cast<double>(in[i]);
            next_delta_[i] += d * static_cast<double>(row[i]);
          }
        }
        break;
      }
    }
    std::swap(delta_, next_delta_);
  }
  return loss;
}

template <typename T>
double BatchLossAndGradient(const ModelArch& arch, std::span<const T> params,
                            std::span<const T> images,
                            std::span<const int> labels,
                            std::span<double> grad) {
  const std::size_t dim = static_cast<std::size_t>(arch.input_shape().Size());
  const std::size_t batch = labels.size();
  if (batch == 0 || images.size() != batch * dim) {
    throw DimensionError("batch images/labels do not match the input shape");
  }
  std::fill(grad.begin(), grad.end(), 0.0);
  Engine<T> engine(arch);
  std::vector<T> probs(static_cast<std::size_t>(arch.class_count()));
  double loss = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    engine.Forward(params, images.subspan(b * dim, dim), probs);
    loss += engine.Backward(params, labels[b], grad);
  }
  const double scale = 1.0 / static_cast<double>(batch);
  for (double& g : grad) g *= scale;
  return loss * scale;
}

template <typename T>
double BatchLoss(const ModelArch& arch, std::span<const T> params,
                 std::span<const T> images, std::span<const int> labels) {
  const std::size_t dim = static_cast<std::size_t>(arch.input_shape().Size());
  const std::size_t batch = labels.size();
  if (batch == 0 || images.size() != batch * dim) {
    throw DimensionError("batch images/labels do not match the input shape");
  }
  Engine<T> engine(arch);
  std::vector<T> probs(static_cast<std::size_t>(arch.class_count()));
  double loss = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    engine.Forward(params, images.subspan(b * dim, dim), probs);
    loss += engine.Loss(labels[b]);
  }
  return loss / static_cast<double>(batch);
}

template class Engine<float>;
template class Engine<double>;
template double BatchLossAndGradient<float>(const ModelArch&,
                                            std::span<const float>,
                                            std::span<const float>,
                                            std::span<const int>,
                                            std::span<double>);
template double BatchLossAndGradient<double>(const ModelArch&,
                                             std::span<const double>,
                                             std::span<const double>,
                                             std::span<const int>,
                                             std::span<double>);
template double BatchLoss<float>(const ModelArch&, std::span<const float>,
                                 std::span<const float>, std::span<const int>);
template double BatchLoss<double>(const ModelArch&, std::span<const double>,
                                  std::span<const double>,
                                  std::span<const int>);

}  // namespace fedguard::nn::internal
