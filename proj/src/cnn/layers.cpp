/*
 * Copyright 2026 The nocguard Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <algorithm>
#include <cmath>
#include <limits>

#include "nocguard/cnn/layers.hpp"
#include "nocguard/cnn/tensor.hpp"
#include "nocguard/error.hpp"

namespace nocguard::cnn {

std::string to_string(const Shape& s) {
  return std::to_string(s.channels) + "x" + std::to_string(s.height) + "x" + std::to_string(s.width);
}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(shape), data_(std::move(data)) {
  if (data_.size() != shape_.size()) {
    throw ShapeError("tensor data has " + std::to_string(data_.size()) + " values, shape " +
                     to_string(shape_) + " needs " + std::to_string(shape_.size()));
  }
}

bool Tensor::all_finite() const noexcept {
  for (const double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Conv2D::Conv2D(int out_ch, int in_ch, int k)
    : out_channels(out_ch),
      in_channels(in_ch),
      kernel(k),
      weight(static_cast<std::size_t>(out_ch * in_ch * k * k), 0.0),
      bias(static_cast<std::size_t>(out_ch), 0.0) {
  if (out_ch < 1 || in_ch < 1 || k < 1 || k % 2 == 0) throw ShapeError("conv layer needs odd kernel and >= 1 channels");
}

Dense::Dense(int in, int out)
    : inputs(in), outputs(out), weight(static_cast<std::size_t>(in * out), 0.0), bias(static_cast<std::size_t>(out), 0.0) {
  if (in < 1 || out < 1) throw ShapeError("dense layer needs >= 1 inputs and outputs");
}

Tensor conv2d(const Tensor& input, const Conv2D& layer) {
  const Shape in = input.shape();
  if (in.channels != layer.in_channels) {
    throw ShapeError("conv2d: input has " + std::to_string(in.channels) + " channels, filters expect " +
                     std::to_string(layer.in_channels));
  }
  const int H = in.height;
  const int W = in.width;
  const int pad = layer.kernel / 2;
  Tensor out({layer.out_channels, H, W});
  for (int o = 0; o < layer.out_channels; ++o) {
    auto dst = out.channel(o);
    for (auto& v : dst) v = layer.bias[static_cast<std::size_t>(o)];
    for (int i = 0; i < layer.in_channels; ++i) {
      const auto src = input.channel(i);
      for (int ky = 0; ky < layer.kernel; ++ky) {
        const int dy = ky - pad;
        const int y0 = dy < 0 ? -dy : 0;
        const int y1 = dy > 0 ? H - dy : H;
        for (int kx = 0; kx < layer.kernel; ++kx) {
          const int dx = kx - pad;
          const int x0 = dx < 0 ? -dx : 0;
          const int x1 = dx > 0 ? W - dx : W;
          const double wv = layer.w(o, i, ky, kx);
          if (wv == 0.0) continue;
          for (int y = y0; y < y1; ++y) {
            double* drow = dst.data() + static_cast<std::size_t>(y) * W;
            const double* srow = src.data() + static_cast<std::size_t>(y + dy) * W + dx;
            for (int x = x0; x < x1; ++x) drow[x] += wv * srow[x];
          }
        }
      }
    }
  }
  return out;
}

Tensor conv2d_backward(const Tensor& input, const Tensor& grad_out, const Conv2D& layer, Conv2D& grad,
                       bool want_input_grad) {
  const Shape in = input.shape();
  const int H = in.height;
  const int W = in.width;
  if (grad_out.shape() != Shape{layer.out_channels, H, W}) throw ShapeError("conv2d_backward: gradient shape");
  const int pad = layer.kernel / 2;
  Tensor dx;
  if (want_input_grad) dx = Tensor(in);
  for (int o = 0; o < layer.out_channels; ++o) {
    const auto g = grad_out.channel(o);
    double bsum = 0.0;
    for (const double v : g) bsum += v;
    grad.bias[static_cast<std::size_t>(o)] += bsum;
    for (int i = 0; i < layer.in_channels; ++i) {
      const auto src = input.channel(i);
      for (int ky = 0; ky < layer.kernel; ++ky) {
        const int dy = ky - pad;
        const int y0 = dy < 0 ? -dy : 0;
        const int y1 = dy > 0 ? H - dy : H;
        for (int kx = 0; kx < layer.kernel; ++kx) {
          const int ddx = kx - pad;
          const int x0 = ddx < 0 ? -ddx : 0;
          const int x1 = ddx > 0 ? W - ddx : W;
          double acc = 0.0;
          for (int y = y0; y < y1; ++y) {
            const double* grow = g.data() + static_cast<std::size_t>(y) * W;
            const double* srow = src.data() + static_cast<std::size_t>(y + dy) * W + ddx;
            for (int x = x0; x < x1; ++x) acc += grow[x] * srow[x];
          }
          grad.w(o, i, ky, kx) += acc;
          if (want_input_grad) {
            const double wv = layer.w(o, i, ky, kx);
            auto dplane = dx.channel(i);
            for (int y = y0; y < y1; ++y) {
              const double* grow = g.data() + static_cast<std::size_t>(y) * W;
              double* drow = dplane.data() + static_cast<std::size_t>(y + dy) * W + ddx;
              for (int x = x0; x < x1; ++x) drow[x] += wv * grow[x];
            }
          }
        }
      }
    }
  }
  return dx;
}

Tensor relu(const Tensor& x) {
  Tensor y = x;
  for (auto& v : y.values()) v = v > 0.0 ? v : 0.0;
  return y;
}

Tensor relu_backward(const Tensor& pre, const Tensor& grad_out) {
  if (pre.shape() != grad_out.shape()) throw ShapeError("relu_backward: shape mismatch");
  Tensor g = grad_out;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!(pre[i] > 0.0)) g[i] = 0.0;
  }
  return g;
}

PoolResult maxpool2(const Tensor& input) {
  const Shape in = input.shape();
  if (in.height < 2 || in.width < 2) throw ShapeError("maxpool2 needs height and width >= 2");
  const int oh = in.height / 2;
  const int ow = in.width / 2;
  PoolResult r{Tensor({in.channels, oh, ow}), {}};
  r.argmax.resize(r.output.size());
  std::size_t k = 0;
  for (int c = 0; c < in.channels; ++c) {
    for (int y = 0; y < oh; ++y) {
      for (int x = 0; x < ow; ++x, ++k) {
        int best = -1;
        double best_v = 0.0;
        for (int wy = 0; wy < 2; ++wy) {
          for (int wx = 0; wx < 2; ++wx) {
            const int idx = (c * in.height + 2 * y + wy) * in.width + 2 * x + wx;
            const double v = input[static_cast<std::size_t>(idx)];
            if (best < 0 || v > best_v) {
              best = idx;
              best_v = v;
            }
          }
        }
        r.output[k] = best_v;
        r.argmax[k] = best;
      }
    }
  }
  return r;
}

Tensor maxpool2_backward(const Shape& input_shape, const std::vector<std::int32_t>& argmax,
                         const Tensor& grad_out) {
  if (argmax.size() != grad_out.size()) throw ShapeError("maxpool2_backward: argmax size");
  Tensor dx(input_shape);
  for (std::size_t k = 0; k < argmax.size(); ++k) dx[static_cast<std::size_t>(argmax[k])] += grad_out[k];
  return dx;
}

std::vector<double> dense_forward(std::span<const double> input, const Dense& layer) {
  if (static_cast<int>(input.size()) != layer.inputs) {
    throw ShapeError("dense: got " + std::to_string(input.size()) + " inputs, layer expects " +
                     std::to_string(layer.inputs));
  }
  std::vector<double> out(layer.bias);
  for (int o = 0; o < layer.outputs; ++o) {
    const double* row = layer.weight.data() + static_cast<std::size_t>(o) * layer.inputs;
    double acc = 0.0;
    for (int i = 0; i < layer.inputs; ++i) acc += row[i] * input[static_cast<std::size_t>(i)];
    out[static_cast<std::size_t>(o)] += acc;
  }
  return out;
}

std::vector<double> dense_backward(std::span<const double> input, std::span<const double> grad_out,
                                   const Dense& layer, Dense& grad, bool want_input_grad) {
  if (static_cast<int>(input.size()) != layer.inputs || static_cast<int>(grad_out.size()) != layer.outputs) {
    throw ShapeError("dense_backward: shape mismatch");
  }
  std::vector<double> dx;
  if (want_input_grad) dx.assign(input.size(), 0.0);
  for (int o = 0; o < layer.outputs; ++o) {
    const double g = grad_out[static_cast<std::size_t>(o)];
    grad.bias[static_cast<std::size_t>(o)] += g;
    double* grow = grad.weight.data() + static_cast<std::size_t>(o) * layer.inputs;
    const double* wrow = layer.weight.data() + static_cast<std::size_t>(o) * layer.inputs;
    for (int i = 0; i < layer.inputs; ++i) {
      grow[i] += g * input[static_cast<std::size_t>(i)];
      if (want_input_grad) dx[static_cast<std::size_t>(i)] += g * wrow[i];
    }
  }
  return dx;
}

double sigmoid(double z) noexcept {
  // kept strictly inside (0,1) even where the exact value rounds to 0 or 1
  constexpr double lo = std::numeric_limits<double>::min();
  constexpr double hi = 1.0 - std::numeric_limits<double>::epsilon() / 2.0;
  double p;
  if (z >= 0.0) {
    p = 1.0 / (1.0 + std::exp(-z));
  } else {
    const double e = std::exp(z);
    p = e / (1.0 + e);
  }
  return std::clamp(p, lo, hi);
}

void glorot_init(Conv2D& layer, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(layer.fan_in() + layer.fan_out()));
  for (auto& v : layer.weight) v = rng.uniform(-limit, limit);
  for (auto& v : layer.bias) v = 0.0;
}

void glorot_init(Dense& layer, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(layer.inputs + layer.outputs));
  for (auto& v : layer.weight) v = rng.uniform(-limit, limit);
  for (auto& v : layer.bias) v = 0.0;
}

}  // namespace nocguard::cnn
