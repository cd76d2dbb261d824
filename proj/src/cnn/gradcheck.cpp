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

#include "nocguard/cnn/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace nocguard::cnn {

GradCheckResult grad_check(std::span<const std::span<double>> params, std::span<const double> analytic,
                           const std::function<double()>& loss,
                           const std::function<std::vector<std::uint8_t>()>& pattern, double eps) {
  GradCheckResult result;
  const auto base = pattern ? pattern() : std::vector<std::uint8_t>{};
  std::size_t k = 0;
  for (const auto block : params) {
    for (auto& theta : block) {
      const double saved = theta;
      auto probe = [&](double h, bool& clean) {
        theta = saved + h;
        const double up = loss();
        clean = !pattern || pattern() == base;
        theta = saved - h;
        const double down = loss();
        clean = clean && (!pattern || pattern() == base);
        theta = saved;
        return (up - down) / (2.0 * h);
      };
      double h = eps;
      double numeric = 0.0;
      bool clean = false;
      for (int attempt = 0; attempt <= 6; ++attempt) {
        numeric = probe(h, clean);
        if (clean) break;
        if (attempt == 0) ++result.refined_steps;
        h /= 10.0;
      }
      // For gradients near the 1e-8 floor the O(h^2) truncation term of the plain
      // difference is itself ~1e-4 relative; one Richardson step removes it.
      if (clean && std::abs(analytic[k] - numeric) > 1e-6 * std::max(std::abs(numeric), 1e-8)) {
        bool half_clean = false;
        const double half = probe(h / 2.0, half_clean);
        if (half_clean) numeric = (4.0 * half - numeric) / 3.0;
      }
      const double a = analytic[k];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
      const double err = std::abs(a - numeric) / denom;
      if (err > result.max_relative_error) {
        result.max_relative_error = err;
        result.worst_parameter = k;
      }
      ++k;
    }
  }
  result.parameters_checked = k;
  return result;
}

GradCheckResult grad_check(const DetectorModel& model, std::span<const DetectorSample> batch, double eps) {
  DetectorModel work = model;
  std::vector<const DetectorSample*> ptrs;
  for (const auto& s : batch) ptrs.push_back(&s);
  auto grad = DetectorModel::zeros(model.radix);
  detector_batch_gradient(work, ptrs, grad);
  const auto analytic = flatten(std::as_const(grad).parameters());

  auto loss = [&] {
    double sum = 0.0;
    for (const auto* s : ptrs) sum += bce_with_logit(detector_forward_full(work, s->frames).logit, s->attack ? 1.0 : 0.0);
    return sum / static_cast<double>(ptrs.size());
  };
  auto pattern = [&] {
    std::vector<std::uint8_t> bits;
    for (const auto* s : ptrs) {
      const auto p = activation_pattern(detector_forward_full(work, s->frames));
      bits.insert(bits.end(), p.begin(), p.end());
    }
    return bits;
  };
  const auto params = work.parameters();
  return grad_check(params, analytic, loss, pattern, eps);
}

GradCheckResult grad_check(const SegmentorModel& model, std::span<const SegmentorSample> batch, double eps) {
  SegmentorModel work = model;
  std::vector<const SegmentorSample*> ptrs;
  for (const auto& s : batch) ptrs.push_back(&s);
  auto grad = SegmentorModel::zeros(model.radix);
  segmentor_batch_gradient(work, ptrs, grad);
  const auto analytic = flatten(std::as_const(grad).parameters());

  auto loss = [&] {
    std::vector<Tensor> probs;
    std::vector<Tensor> targets;
    for (const auto* s : ptrs) {
      probs.push_back(segmentor_forward(work, s->frame));
      targets.push_back(s->mask);
    }
    return soft_dice(probs, targets).loss;
  };
  auto pattern = [&] {
    std::vector<std::uint8_t> bits;
    for (const auto* s : ptrs) {
      const auto p = activation_pattern(segmentor_forward_full(work, s->frame));
      bits.insert(bits.end(), p.begin(), p.end());
    }
    return bits;
  };
  const auto params = work.parameters();
  return grad_check(params, analytic, loss, pattern, eps);
}

GradCheckResult grad_check(const Dense& layer, std::span<const double> input, double label, double eps) {
  Dense work = layer;
  auto grad = Dense(layer.inputs, layer.outputs);
  const auto logits = dense_forward(input, work);
  std::vector<double> g(logits.size());
  for (std::size_t o = 0; o < logits.size(); ++o) g[o] = bce_grad(logits[o], label);
  dense_backward(input, g, work, grad, false);
  std::vector<double> analytic(grad.weight);
  analytic.insert(analytic.end(), grad.bias.begin(), grad.bias.end());

  auto loss = [&] {
    double sum = 0.0;
    for (const double z : dense_forward(input, work)) sum += bce_with_logit(z, label);
    return sum;
  };
  const std::span<double> blocks[] = {work.weight, work.bias};
  return grad_check(blocks, analytic, loss, nullptr, eps);
}

}  // namespace nocguard::cnn
