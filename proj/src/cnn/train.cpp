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

#include "nocguard/cnn/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "nocguard/error.hpp"
#include "nocguard/random.hpp"

namespace nocguard::cnn {
namespace {

constexpr std::uint64_t kSplitStream = 0x73706c74;
constexpr std::uint64_t kShuffleStream = 0x73687566;

// Pairwise sum of equally sized vectors; consumes `parts`.
std::vector<double> pairwise_sum(std::vector<std::vector<double>>& parts, std::size_t lo, std::size_t hi) {
  if (hi - lo == 1) return std::move(parts[lo]);
  const std::size_t mid = lo + (hi - lo) / 2;
  auto left = pairwise_sum(parts, lo, mid);
  const auto right = pairwise_sum(parts, mid, hi);
  for (std::size_t i = 0; i < left.size(); ++i) left[i] += right[i];
  return left;
}

template <typename Model>
void unflatten_into(Model& model, std::span<const double> flat) {
  std::size_t off = 0;
  for (auto block : model.parameters()) {
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(off), block.size(), block.begin());
    off += block.size();
  }
}

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};

Split split_indices(std::size_t n, const TrainConfig& cfg) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(derive_seed(cfg.seed, kSplitStream));
  rng.shuffle(idx.begin(), idx.end());
  auto n_val = static_cast<std::size_t>(std::llround(cfg.validation_fraction * static_cast<double>(n)));
  if (n_val >= n) n_val = n - 1;
  Split s;
  s.validation.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_val));
  s.train.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_val), idx.end());
  std::sort(s.validation.begin(), s.validation.end());
  std::sort(s.train.begin(), s.train.end());
  return s;
}

template <typename Sample>
std::vector<const Sample*> pick(std::span<const Sample> data, const std::vector<std::size_t>& idx) {
  std::vector<const Sample*> out;
  out.reserve(idx.size());
  for (const auto i : idx) out.push_back(&data[i]);
  return out;
}

// Shared mini-batch loop. `batch_grad(model, batch, grad)` returns the batch loss,
// `metric(model, samples)` scores validation (higher is better).
template <typename Model, typename Sample, typename BatchGrad, typename Metric>
TrainResult<Model> fit(const Model& init, std::span<const Sample> data, const TrainConfig& cfg,
                       BatchGrad batch_grad, Metric metric) {
  validate(cfg);
  const Split split = split_indices(data.size(), cfg);
  auto train_set = pick(data, split.train);
  const auto val_set = split.validation.empty() ? train_set : pick(data, split.validation);

  TrainResult<Model> result{init, {}, 0};
  Model model = init;
  Adam adam(cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.adam_epsilon);
  Rng shuffle_rng(derive_seed(cfg.seed, kShuffleStream));

  double best = metric(model, std::span<const Sample* const>(val_set));
  int since_best = 0;
  const auto bs = static_cast<std::size_t>(cfg.batch_size);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(train_set.begin(), train_set.end());
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < train_set.size(); start += bs) {
      const std::size_t end = std::min(train_set.size(), start + bs);
      std::span<const Sample* const> batch(train_set.data() + start, end - start);
      Model grad = Model::zeros(model.radix);
      loss_sum += batch_grad(model, batch, grad);
      ++batches;
      const auto flat = flatten(std::as_const(grad).parameters());
      const auto params = model.parameters();
      adam.step(params, flat);
    }
    const double val = metric(model, std::span<const Sample* const>(val_set));
    result.log.push_back({epoch, loss_sum / static_cast<double>(std::max<std::size_t>(batches, 1)), val});
    if (val > best) {
      best = val;
      result.model = model;
      result.best_epoch = epoch;
      since_best = 0;
    } else if (cfg.patience > 0 && ++since_best >= cfg.patience) {
      break;
    }
  }
  return result;
}

}  // namespace

void validate(const TrainConfig& cfg) {
  if (!(cfg.learning_rate >= 0.0) || !std::isfinite(cfg.learning_rate)) {
    throw ConfigError("learning_rate must be finite and >= 0");
  }
  if (cfg.epochs < 0) throw ConfigError("epochs must be >= 0");
  if (cfg.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (cfg.train_fraction <= 0.0 || cfg.validation_fraction < 0.0 ||
      std::abs(cfg.train_fraction + cfg.validation_fraction - 1.0) > 1e-9) {
    throw ConfigError("train/validation fractions must be non-negative and sum to 1");
  }
  if (cfg.patience < 0) throw ConfigError("patience must be >= 0");
}

std::string training_log_csv(const std::vector<EpochLog>& log) {
  std::string out = "epoch,loss,val_metric\n";
  char buf[96];
  for (const auto& e : log) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g\n", e.epoch, e.train_loss, e.validation_metric);
    out += buf;
  }
  return out;
}

std::vector<double> flatten(std::span<const std::span<const double>> blocks) {
  std::vector<double> out;
  for (const auto b : blocks) out.insert(out.end(), b.begin(), b.end());
  return out;
}

void Adam::step(std::span<const std::span<double>> params, std::span<const double> flat_grad) {
  if (m_.empty()) {
    m_.assign(flat_grad.size(), 0.0);
    v_.assign(flat_grad.size(), 0.0);
  }
  if (m_.size() != flat_grad.size()) throw ShapeError("Adam: gradient size changed between steps");
  ++step_;
  const double c1 = 1.0 - std::pow(b1_, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(b2_, static_cast<double>(step_));
  std::size_t k = 0;
  for (const auto block : params) {
    for (auto& w : block) {
      const double g = flat_grad[k];
      m_[k] = b1_ * m_[k] + (1.0 - b1_) * g;
      v_[k] = b2_ * v_[k] + (1.0 - b2_) * g * g;
      w -= lr_ * (m_[k] / c1) / (std::sqrt(v_[k] / c2) + eps_);
      ++k;
    }
  }
}

double detector_batch_gradient(const DetectorModel& model, std::span<const DetectorSample* const> batch,
                               DetectorModel& grad) {
  if (batch.empty()) return 0.0;
  std::vector<std::vector<double>> parts;
  parts.reserve(batch.size());
  std::vector<double> losses;
  losses.reserve(batch.size());
  for (const auto* s : batch) {
    const auto acts = detector_forward_full(model, s->frames);
    const double y = s->attack ? 1.0 : 0.0;
    losses.push_back(bce_with_logit(acts.logit, y));
    auto g = DetectorModel::zeros(model.radix);
    detector_backward(model, acts, bce_grad(acts.logit, y), g);
    parts.push_back(flatten(std::as_const(g).parameters()));
  }
  auto total = pairwise_sum(parts, 0, parts.size());
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (auto& v : total) v *= inv;
  unflatten_into(grad, total);
  std::vector<std::vector<double>> loss_parts;
  for (const double l : losses) loss_parts.push_back({l});
  return pairwise_sum(loss_parts, 0, loss_parts.size())[0] * inv;
}

double segmentor_batch_gradient(const SegmentorModel& model, std::span<const SegmentorSample* const> batch,
                                SegmentorModel& grad) {
  if (batch.empty()) return 0.0;
  std::vector<SegmentorActivations> acts;
  acts.reserve(batch.size());
  std::vector<Tensor> probs;
  std::vector<Tensor> targets;
  for (const auto* s : batch) {
    acts.push_back(segmentor_forward_full(model, s->frame));
    probs.push_back(acts.back().probabilities);
    targets.push_back(s->mask);
  }
  const SoftDice sd = soft_dice(probs, targets);
  std::vector<std::vector<double>> parts;
  parts.reserve(batch.size());
  for (std::size_t b = 0; b < batch.size(); ++b) {
    auto g = SegmentorModel::zeros(model.radix);
    segmentor_backward(model, acts[b], sd.grad_logits[b], g);
    parts.push_back(flatten(std::as_const(g).parameters()));
  }
  unflatten_into(grad, pairwise_sum(parts, 0, parts.size()));
  return sd.loss;
}

double detector_accuracy(const DetectorModel& model, std::span<const DetectorSample* const> data,
                         double threshold) {
  if (data.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto* s : data) correct += (detector_forward(model, s->frames) >= threshold) == s->attack;
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

double segmentor_mean_dice(const SegmentorModel& model, std::span<const SegmentorSample* const> data,
                           double threshold) {
  if (data.empty()) return 0.0;
  double sum = 0.0;
  for (const auto* s : data) {
    const Tensor p = segmentor_forward(model, s->frame);
    std::vector<std::uint8_t> pred(p.size());
    std::vector<std::uint8_t> truth(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
      pred[i] = p[i] >= threshold;
      truth[i] = s->mask[i] >= 0.5;
    }
    sum += dice(pred, truth);
  }
  return sum / static_cast<double>(data.size());
}

TrainResult<DetectorModel> train_detector(const DetectorModel& init, std::span<const DetectorSample> data,
                                          const TrainConfig& cfg) {
  if (data.empty()) throw ConfigError("detector training set is empty");
  const auto positives = std::count_if(data.begin(), data.end(), [](const auto& s) { return s.attack; });
  if (positives == 0 || positives == static_cast<std::ptrdiff_t>(data.size())) {
    throw ConfigError("detector training set holds a single class");
  }
  // validation score: accuracy, with mean BCE as a small tie-breaker
  auto metric = [](const DetectorModel& m, std::span<const DetectorSample* const> set) {
    double loss = 0.0;
    std::size_t correct = 0;
    for (const auto* s : set) {
      const auto a = detector_forward_full(m, s->frames);
      loss += bce_with_logit(a.logit, s->attack ? 1.0 : 0.0);
      correct += (a.probability >= 0.5) == s->attack;
    }
    const double n = static_cast<double>(std::max<std::size_t>(set.size(), 1));
    return static_cast<double>(correct) / n - 1e-6 * std::min(loss / n, 100.0);
  };
  return fit<DetectorModel, DetectorSample>(init, data, cfg, detector_batch_gradient, metric);
}

TrainResult<SegmentorModel> train_segmentor(const SegmentorModel& init, std::span<const SegmentorSample> data,
                                            const TrainConfig& cfg) {
  if (data.empty()) throw ConfigError("segmentor training set is empty");
  // validation score: mean binarised Dice, soft Dice loss as a small tie-breaker
  auto metric = [](const SegmentorModel& m, std::span<const SegmentorSample* const> set) {
    std::vector<Tensor> probs;
    std::vector<Tensor> targets;
    double dice_sum = 0.0;
    for (const auto* s : set) {
      probs.push_back(segmentor_forward(m, s->frame));
      targets.push_back(s->mask);
      std::vector<std::uint8_t> pred(probs.back().size());
      std::vector<std::uint8_t> truth(pred.size());
      for (std::size_t i = 0; i < pred.size(); ++i) {
        pred[i] = probs.back()[i] >= 0.5;
        truth[i] = s->mask[i] >= 0.5;
      }
      dice_sum += dice(pred, truth);
    }
    const double n = static_cast<double>(std::max<std::size_t>(set.size(), 1));
    return dice_sum / n - 1e-6 * soft_dice(probs, targets).loss;
  };
  return fit<SegmentorModel, SegmentorSample>(init, data, cfg, segmentor_batch_gradient, metric);
}

}  // namespace nocguard::cnn
