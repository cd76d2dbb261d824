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
#include <string>
#include <vector>

#include "nocguard/cnn/models.hpp"

namespace nocguard::cnn {

struct TrainConfig {
  double learning_rate = 1e-3;
  int epochs = 200;
  int batch_size = 32;
  std::uint64_t seed = 1;
  double train_fraction = 0.85;       // of the samples handed to the trainer
  double validation_fraction = 0.15;  // held back for early stopping / model choice
  int patience = 30;                  // epochs without improvement; 0 runs every epoch
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
};

/// Throws ConfigError on negative rates, empty batches, or fractions not summing to 1.
void validate(const TrainConfig& cfg);

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double validation_metric = 0.0;  // accuracy (detector) or mean Dice (segmentor)
};

std::string training_log_csv(const std::vector<EpochLog>& log);

struct DetectorSample {
  Tensor frames;  // 4 x R x R padded VCO frames
  bool attack = false;
};

struct SegmentorSample {
  Tensor frame;  // 1 x R x R padded, normalised BOC frame
  Tensor mask;   // 1 x R x R ground truth in {0,1}
};

template <typename Model>
struct TrainResult {
  Model model;
  std::vector<EpochLog> log;
  int best_epoch = 0;
};

/// Minimal Adam over a list of parameter blocks.
class Adam {
 public:
  Adam(double lr, double beta1, double beta2, double eps) : lr_(lr), b1_(beta1), b2_(beta2), eps_(eps) {}
  void step(std::span<const std::span<double>> params, std::span<const double> flat_grad);

 private:
  double lr_, b1_, b2_, eps_;
  long step_ = 0;
  std::vector<double> m_, v_;
};

/// Mean BCE over the batch; `grad` receives the mean gradient. Per-sample
/// gradients are combined by pairwise summation, so batch order barely matters.
double detector_batch_gradient(const DetectorModel& model, std::span<const DetectorSample* const> batch,
                               DetectorModel& grad);
/// Batch-level soft Dice and its gradient.
double segmentor_batch_gradient(const SegmentorModel& model, std::span<const SegmentorSample* const> batch,
                                SegmentorModel& grad);

/// Throws ConfigError on an empty or single-class dataset.
TrainResult<DetectorModel> train_detector(const DetectorModel& init, std::span<const DetectorSample> data,
                                          const TrainConfig& cfg);
TrainResult<SegmentorModel> train_segmentor(const SegmentorModel& init, std::span<const SegmentorSample> data,
                                            const TrainConfig& cfg);

/// Fraction of samples classified correctly at `threshold`.
double detector_accuracy(const DetectorModel& model, std::span<const DetectorSample* const> data,
                         double threshold = 0.5);
/// Mean Dice of the binarised prediction against each mask.
double segmentor_mean_dice(const SegmentorModel& model, std::span<const SegmentorSample* const> data,
                           double threshold = 0.5);

std::vector<double> flatten(std::span<const std::span<const double>> blocks);

}  // namespace nocguard::cnn
