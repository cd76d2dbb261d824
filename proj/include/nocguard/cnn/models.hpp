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

#include "nocguard/cnn/layers.hpp"
#include "nocguard/cnn/tensor.hpp"

namespace nocguard::cnn {

inline constexpr int kFilters = 8;
inline constexpr int kDetectorChannels = 4;

/// Attack classifier over the four padded VCO frames:
/// conv(8 filters, 3x3) -> ReLU -> maxpool2 -> flatten -> dense(1) -> sigmoid.
/// For R = 16: 4x16x16 -> 8x16x16 -> 8x8x8 -> 512 -> 1.
struct DetectorModel {
  int radix = 0;
  Conv2D conv;
  Dense dense;

  static DetectorModel zeros(int radix);
  static DetectorModel initialized(int radix, std::uint64_t seed);

  std::vector<std::span<double>> parameters();
  std::vector<std::span<const double>> parameters() const;
  std::size_t parameter_count() const;
};

/// Per-pixel route segmentor over one padded BOC frame:
/// conv(8, 3x3) -> ReLU -> conv(8, 3x3) -> ReLU -> conv(1, 1x1) -> sigmoid.
struct SegmentorModel {
  int radix = 0;
  Conv2D conv1;
  Conv2D conv2;
  Conv2D head;

  static SegmentorModel zeros(int radix);
  static SegmentorModel initialized(int radix, std::uint64_t seed);

  std::vector<std::span<double>> parameters();
  std::vector<std::span<const double>> parameters() const;
  std::size_t parameter_count() const;
};

struct DetectorActivations {
  Tensor input;
  Tensor pre;  // conv output before ReLU
  Tensor act;
  PoolResult pooled;
  double logit = 0.0;
  double probability = 0.5;
};

struct SegmentorActivations {
  Tensor input;
  Tensor pre1;
  Tensor act1;
  Tensor pre2;
  Tensor act2;
  Tensor logits;
  Tensor probabilities;
};

/// Throws ShapeError unless `frames` is 4 x R x R for the model's R.
DetectorActivations detector_forward_full(const DetectorModel& model, const Tensor& frames);
double detector_forward(const DetectorModel& model, const Tensor& frames);
/// Accumulates dL/dparams into `grad` given dL/dlogit.
void detector_backward(const DetectorModel& model, const DetectorActivations& acts, double grad_logit,
                       DetectorModel& grad);

/// Throws ShapeError unless `frame` is 1 x R x R for the model's R.
SegmentorActivations segmentor_forward_full(const SegmentorModel& model, const Tensor& frame);
Tensor segmentor_forward(const SegmentorModel& model, const Tensor& frame);
void segmentor_backward(const SegmentorModel& model, const SegmentorActivations& acts,
                        const Tensor& grad_logits, SegmentorModel& grad);

/// ReLU on/off bits and pooling winners; constant on any region where the
/// loss is smooth in the parameters.
std::vector<std::uint8_t> activation_pattern(const DetectorActivations& acts);
std::vector<std::uint8_t> activation_pattern(const SegmentorActivations& acts);

/// Binary cross-entropy on a logit, computed without forming log(sigmoid).
double bce_with_logit(double logit, double label) noexcept;
/// dBCE/dlogit = sigmoid(logit) - label.
double bce_grad(double logit, double label) noexcept;

inline constexpr double kDiceEpsilon = 1e-7;

struct SoftDice {
  double loss = 0.0;
  std::vector<Tensor> grad_logits;  // one per input map, dL/dlogit
};

/// 1 - 2 sum(p t) / (sum p + sum t + eps), with the sums taken over every pixel of
/// every map passed in (batch-level Dice).
SoftDice soft_dice(std::span<const Tensor> probabilities, std::span<const Tensor> targets,
                   double eps = kDiceEpsilon);

/// 2|P n T| / (|P| + |T|) on binary masks; 1 when both are empty.
double dice(std::span<const std::uint8_t> predicted, std::span<const std::uint8_t> truth);

}  // namespace nocguard::cnn
