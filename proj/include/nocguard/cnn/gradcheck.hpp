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
#include <functional>
#include <span>
#include <vector>

#include "nocguard/cnn/models.hpp"
#include "nocguard/cnn/train.hpp"

namespace nocguard::cnn {

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t worst_parameter = 0;  // flat index
  std::size_t parameters_checked = 0;
  std::size_t refined_steps = 0;  // parameters whose step was shrunk to stay off a kink
};

/// Central finite differences of `loss` against `analytic`, one parameter at a time.
/// Error per parameter is |g_a - g_n| / max(|g_a|, |g_n|, 1e-8).
///
/// ReLU and max-pool make the loss piecewise smooth. When the +-eps probe changes
/// `pattern()` (a ReLU flips or a pool winner moves) the difference straddles a
/// kink, so the step is divided by 10 until the probe stays on one piece (at most
/// six times). `pattern` may be empty for smooth losses.
GradCheckResult grad_check(std::span<const std::span<double>> params, std::span<const double> analytic,
                           const std::function<double()>& loss,
                           const std::function<std::vector<std::uint8_t>()>& pattern, double eps = 1e-3);

/// Detector with mean BCE over `batch`.
GradCheckResult grad_check(const DetectorModel& model, std::span<const DetectorSample> batch, double eps = 1e-3);
/// Segmentor with batch soft Dice over `batch`.
GradCheckResult grad_check(const SegmentorModel& model, std::span<const SegmentorSample> batch,
                           double eps = 1e-3);
/// Dense layer + sigmoid + BCE on one input vector.
GradCheckResult grad_check(const Dense& layer, std::span<const double> input, double label, double eps = 1e-3);

}  // namespace nocguard::cnn
