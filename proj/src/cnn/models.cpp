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

#include "nocguard/cnn/models.hpp"

#include <algorithm>
#include <cmath>

#include "nocguard/error.hpp"

namespace nocguard::cnn {
namespace {

int pooled_size(int radix) { return kFilters * (radix / 2) * (radix / 2); }

void check_radix(int radix) {
  if (radix < 2) throw ShapeError("model radix must be >= 2");
}

}  // namespace

DetectorModel DetectorModel::zeros(int radix) {
  check_radix(radix);
  DetectorModel m;
  m.radix = radix;
  m.conv = Conv2D(kFilters, kDetectorChannels, 3);
  m.dense = Dense(pooled_size(radix), 1);
  return m;
}

DetectorModel DetectorModel::initialized(int radix, std::uint64_t seed) {
  auto m = zeros(radix);
  Rng rng(seed);
  glorot_init(m.conv, rng);
  glorot_init(m.dense, rng);
  return m;
}

std::vector<std::span<double>> DetectorModel::parameters() {
  return {conv.weight, conv.bias, dense.weight, dense.bias};
}
std::vector<std::span<const double>> DetectorModel::parameters() const {
  return {conv.weight, conv.bias, dense.weight, dense.bias};
}
std::size_t DetectorModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto p : parameters()) n += p.size();
  return n;
}

SegmentorModel SegmentorModel::zeros(int radix) {
  check_radix(radix);
  SegmentorModel m;
  m.radix = radix;
  m.conv1 = Conv2D(kFilters, 1, 3);
  m.conv2 = Conv2D(kFilters, kFilters, 3);
  m.head = Conv2D(1, kFilters, 1);
  return m;
}

SegmentorModel SegmentorModel::initialized(int radix, std::uint64_t seed) {
  auto m = zeros(radix);
  Rng rng(seed);
  glorot_init(m.conv1, rng);
  glorot_init(m.conv2, rng);
  glorot_init(m.head, rng);
  return m;
}

std::vector<std::span<double>> SegmentorModel::parameters() {
  return {conv1.weight, conv1.bias, conv2.weight, conv2.bias, head.weight, head.bias};
}
std::vector<std::span<const double>> SegmentorModel::parameters() const {
  return {conv1.weight, conv1.bias, conv2.weight, conv2.bias, head.weight, head.bias};
}
std::size_t SegmentorModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto p : parameters()) n += p.size();
  return n;
}

DetectorActivations detector_forward_full(const DetectorModel& model, const Tensor& frames) {
  const Shape want{kDetectorChannels, model.radix, model.radix};
  if (frames.shape() != want) {
    throw ShapeError("detector expects " + to_string(want) + " input, got " + to_string(frames.shape()));
  }
  if (model.dense.inputs != pooled_size(model.radix)) {
    throw ShapeError("detector dense layer does not match radix " + std::to_string(model.radix));
  }
  DetectorActivations a;
  a.input = frames;
  a.pre = conv2d(frames, model.conv);
  a.act = relu(a.pre);
  a.pooled = maxpool2(a.act);
  a.logit = dense_forward(a.pooled.output.values(), model.dense)[0];
  a.probability = sigmoid(a.logit);
  return a;
}

double detector_forward(const DetectorModel& model, const Tensor& frames) {
  return detector_forward_full(model, frames).probability;
}

void detector_backward(const DetectorModel& model, const DetectorActivations& acts, double grad_logit,
                       DetectorModel& grad) {
  const double g[1] = {grad_logit};
  const auto d_pool = dense_backward(acts.pooled.output.values(), g, model.dense, grad.dense, true);
  const Tensor d_pool_t(acts.pooled.output.shape(), d_pool);
  const Tensor d_act = maxpool2_backward(acts.act.shape(), acts.pooled.argmax, d_pool_t);
  const Tensor d_pre = relu_backward(acts.pre, d_act);
  conv2d_backward(acts.input, d_pre, model.conv, grad.conv, false);
}

SegmentorActivations segmentor_forward_full(const SegmentorModel& model, const Tensor& frame) {
  const Shape want{1, model.radix, model.radix};
  if (frame.shape() != want) {
    throw ShapeError("segmentor expects " + to_string(want) + " input, got " + to_string(frame.shape()));
  }
  SegmentorActivations a;
  a.input = frame;
  a.pre1 = conv2d(frame, model.conv1);
  a.act1 = relu(a.pre1);
  a.pre2 = conv2d(a.act1, model.conv2);
  a.act2 = relu(a.pre2);
  a.logits = conv2d(a.act2, model.head);
  a.probabilities = a.logits;
  for (auto& v : a.probabilities.values()) v = sigmoid(v);
  return a;
}

Tensor segmentor_forward(const SegmentorModel& model, const Tensor& frame) {
  return segmentor_forward_full(model, frame).probabilities;
}

void segmentor_backward(const SegmentorModel& model, const SegmentorActivations& acts,
                        const Tensor& grad_logits, SegmentorModel& grad) {
  const Tensor d_act2 = conv2d_backward(acts.act2, grad_logits, model.head, grad.head, true);
  const Tensor d_pre2 = relu_backward(acts.pre2, d_act2);
  const Tensor d_act1 = conv2d_backward(acts.act1, d_pre2, model.conv2, grad.conv2, true);
  const Tensor d_pre1 = relu_backward(acts.pre1, d_act1);
  conv2d_backward(acts.input, d_pre1, model.conv1, grad.conv1, false);
}

std::vector<std::uint8_t> activation_pattern(const DetectorActivations& acts) {
  std::vector<std::uint8_t> bits;
  bits.reserve(acts.pre.size() + acts.pooled.argmax.size() * 2);
  for (const double v : acts.pre.values()) bits.push_back(v > 0.0);
  for (const auto idx : acts.pooled.argmax) {
    // window-relative winner position: two bits per pooled cell
    const int w = acts.act.shape().width;
    bits.push_back(static_cast<std::uint8_t>((idx / w) & 1));
    bits.push_back(static_cast<std::uint8_t>((idx % w) & 1));
  }
  return bits;
}

std::vector<std::uint8_t> activation_pattern(const SegmentorActivations& acts) {
  std::vector<std::uint8_t> bits;
  bits.reserve(acts.pre1.size() + acts.pre2.size());
  for (const double v : acts.pre1.values()) bits.push_back(v > 0.0);
  for (const double v : acts.pre2.values()) bits.push_back(v > 0.0);
  return bits;
}

double bce_with_logit(double logit, double label) noexcept {
  return std::max(logit, 0.0) - logit * label + std::log1p(std::exp(-std::abs(logit)));
}

double bce_grad(double logit, double label) noexcept { return sigmoid(logit) - label; }

SoftDice soft_dice(std::span<const Tensor> probabilities, std::span<const Tensor> targets, double eps) {
  if (probabilities.size() != targets.size()) throw ShapeError("soft_dice: batch size mismatch");
  // Extended accumulators: the sums run over every pixel of the batch, and their
  // rounding noise otherwise swamps finite-difference probes of small gradients.
  long double inter_acc = 0.0L;
  long double total_acc = eps;
  for (std::size_t b = 0; b < probabilities.size(); ++b) {
    if (probabilities[b].shape() != targets[b].shape()) throw ShapeError("soft_dice: map shape mismatch");
    for (std::size_t i = 0; i < probabilities[b].size(); ++i) {
      inter_acc += static_cast<long double>(probabilities[b][i]) * targets[b][i];
      total_acc += static_cast<long double>(probabilities[b][i]) + targets[b][i];
    }
  }
  SoftDice out;
  out.loss = static_cast<double>(1.0L - 2.0L * inter_acc / total_acc);
  const double inter = static_cast<double>(inter_acc);
  const double total = static_cast<double>(total_acc);
  // dL/dp_i = (2 I - 2 t_i S) / S^2, chained through dp/dz = p (1 - p)
  const double s2 = total * total;
  out.grad_logits.reserve(probabilities.size());
  for (std::size_t b = 0; b < probabilities.size(); ++b) {
    Tensor g(probabilities[b].shape());
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double p = probabilities[b][i];
      const double dp = (2.0 * inter - 2.0 * targets[b][i] * total) / s2;
      g[i] = dp * p * (1.0 - p);
    }
    out.grad_logits.push_back(std::move(g));
  }
  return out;
}

double dice(std::span<const std::uint8_t> predicted, std::span<const std::uint8_t> truth) {
  if (predicted.size() != truth.size()) throw ShapeError("dice: mask size mismatch");
  std::size_t p = 0;
  std::size_t t = 0;
  std::size_t both = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    p += predicted[i] != 0;
    t += truth[i] != 0;
    both += predicted[i] != 0 && truth[i] != 0;
  }
  if (p + t == 0) return 1.0;
  return 2.0 * static_cast<double>(both) / static_cast<double>(p + t);
}

}  // namespace nocguard::cnn
