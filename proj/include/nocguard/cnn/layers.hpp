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

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "nocguard/cnn/tensor.hpp"
#include "nocguard/random.hpp"

namespace nocguard::cnn {

/// Square-kernel 2-D convolution, stride 1, zero "same" padding.
struct Conv2D {
  int out_channels = 0;
  int in_channels = 0;
  int kernel = 3;
  std::vector<double> weight;  // [out][in][ky][kx]
  std::vector<double> bias;    // [out]

  Conv2D() = default;
  Conv2D(int out_ch, int in_ch, int k);

  double& w(int o, int i, int ky, int kx) noexcept {
    return weight[((static_cast<std::size_t>(o) * in_channels + i) * kernel + ky) * kernel + kx];
  }
  double w(int o, int i, int ky, int kx) const noexcept {
    return weight[((static_cast<std::size_t>(o) * in_channels + i) * kernel + ky) * kernel + kx];
  }

  int fan_in() const noexcept { return in_channels * kernel * kernel; }
  int fan_out() const noexcept { return out_channels * kernel * kernel; }
};

/// Fully connected layer, weight stored [out][in].
struct Dense {
  int inputs = 0;
  int outputs = 0;
  std::vector<double> weight;
  std::vector<double> bias;

  Dense() = default;
  Dense(int in, int out);
};

/// Same-padded cross-correlation. Throws ShapeError when channel counts differ.
Tensor conv2d(const Tensor& input, const Conv2D& layer);

/// Accumulates weight/bias gradients into `grad` and returns dL/dinput when
/// `want_input_grad` is set (an empty tensor otherwise).
Tensor conv2d_backward(const Tensor& input, const Tensor& grad_out, const Conv2D& layer,
                       Conv2D& grad, bool want_input_grad);

Tensor relu(const Tensor& x);
/// dL/dx given the pre-activation x and dL/dy.
Tensor relu_backward(const Tensor& pre, const Tensor& grad_out);

struct PoolResult {
  Tensor output;
  std::vector<std::int32_t> argmax;  // flat input index per output element
};

/// 2x2 max pooling, stride 2; odd trailing rows/columns are dropped. Ties keep the
/// first element in row-major window order.
PoolResult maxpool2(const Tensor& input);
Tensor maxpool2_backward(const Shape& input_shape, const std::vector<std::int32_t>& argmax,
                         const Tensor& grad_out);

/// y = W x + b on the flattened input.
std::vector<double> dense_forward(std::span<const double> input, const Dense& layer);
/// Accumulates into `grad`; returns dL/dinput when requested.
std::vector<double> dense_backward(std::span<const double> input, std::span<const double> grad_out,
                                   const Dense& layer, Dense& grad, bool want_input_grad);

double sigmoid(double z) noexcept;

/// Uniform in +-sqrt(6 / (fan_in + fan_out)); biases start at zero.
void glorot_init(Conv2D& layer, Rng& rng);
void glorot_init(Dense& layer, Rng& rng);

}  // namespace nocguard::cnn
