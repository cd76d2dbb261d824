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


#include <gtest/gtest.h>

#include <algorithm>

#include "nocguard/cnn/train.hpp"
#include "nocguard/error.hpp"
#include "nocguard/random.hpp"

namespace nocguard::cnn {
namespace {

std::vector<DetectorSample> separable(int r, int n) {
  std::vector<DetectorSample> out;
  for (int i = 0; i < n; ++i) out.push_back({Tensor({4, r, r}, i % 2 ? 1.0 : 0.0), i % 2 == 1});
  return out;
}

std::vector<DetectorSample> noisy(int r, int n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<DetectorSample> out;
  for (int i = 0; i < n; ++i) {
    DetectorSample s{Tensor({4, r, r}), i % 2 == 0};
    for (auto& v : s.frames.values()) v = rng.uniform() * (s.attack ? 1.0 : 0.6);
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<double> weights(const DetectorModel& m) { return flatten(m.parameters()); }

TEST(Train, ZeroLearningRateLeavesWeights) {
  const auto init = DetectorModel::initialized(4, 3);
  TrainConfig cfg;
  cfg.learning_rate = 0.0;
  cfg.epochs = 5;
  cfg.patience = 0;
  const auto data = noisy(4, 20, 1);
  const auto r = train_detector(init, data, cfg);
  EXPECT_EQ(weights(r.model), weights(init));
  EXPECT_EQ(r.log.size(), 5u);
}

TEST(Train, MemorizesOneSample) {
  Rng rng(8);
  SegmentorSample s{Tensor({1, 6, 6}), Tensor({1, 6, 6})};
  for (auto& v : s.frame.values()) v = rng.uniform();
  for (int i = 0; i < 6; ++i) s.mask.at(0, 2, i) = 1.0;
  TrainConfig cfg;
  cfg.epochs = 3000;
  cfg.patience = 0;
  const SegmentorSample one[] = {s};
  const auto r = train_segmentor(SegmentorModel::initialized(6, 1), one, cfg);
  EXPECT_LT(r.log.back().train_loss, 0.01);
  const SegmentorSample* p[] = {&s};
  EXPECT_EQ(segmentor_mean_dice(r.model, p), 1.0);
}

TEST(Train, SeparableSetReachesFullAccuracy) {
  const auto data = separable(8, 40);
  TrainConfig cfg;
  cfg.epochs = 50;
  cfg.patience = 0;
  const auto r = train_detector(DetectorModel::initialized(8, 5), data, cfg);
  std::vector<const DetectorSample*> all;
  for (const auto& s : data) all.push_back(&s);
  EXPECT_EQ(detector_accuracy(r.model, all), 1.0);
  bool reached = false;
  for (const auto& e : r.log) reached = reached || e.validation_metric > 0.99;
  EXPECT_TRUE(reached);
}

TEST(Train, DeterministicForSeed) {
  const auto data = noisy(4, 40, 2);
  TrainConfig cfg;
  cfg.epochs = 8;
  const auto a = train_detector(DetectorModel::initialized(4, 1), data, cfg);
  const auto b = train_detector(DetectorModel::initialized(4, 1), data, cfg);
  EXPECT_EQ(weights(a.model), weights(b.model));
  EXPECT_EQ(training_log_csv(a.log), training_log_csv(b.log));
  cfg.seed = 2;
  const auto c = train_detector(DetectorModel::initialized(4, 1), data, cfg);
  EXPECT_NE(training_log_csv(c.log), training_log_csv(a.log));
}

TEST(Train, BatchGradientIgnoresOrder) {
  const auto data = noisy(8, 32, 4);
  const auto model = DetectorModel::initialized(8, 9);
  std::vector<const DetectorSample*> batch;
  for (const auto& s : data) batch.push_back(&s);
  auto g1 = DetectorModel::zeros(8);
  const double l1 = detector_batch_gradient(model, batch, g1);
  Rng rng(3);
  rng.shuffle(batch.begin(), batch.end());
  auto g2 = DetectorModel::zeros(8);
  const double l2 = detector_batch_gradient(model, batch, g2);
  EXPECT_NEAR(l1, l2, 1e-12);
  const auto w1 = weights(g1), w2 = weights(g2);
  for (std::size_t i = 0; i < w1.size(); ++i) EXPECT_NEAR(w1[i], w2[i], 1e-12);

  std::vector<SegmentorSample> segs;
  for (int i = 0; i < 8; ++i) {
    SegmentorSample s{Tensor({1, 4, 4}), Tensor({1, 4, 4})};
    for (auto& v : s.frame.values()) v = rng.uniform();
    for (auto& v : s.mask.values()) v = rng.bernoulli(0.4);
    segs.push_back(s);
  }
  const auto seg = SegmentorModel::initialized(4, 2);
  std::vector<const SegmentorSample*> sb;
  for (const auto& s : segs) sb.push_back(&s);
  auto h1 = SegmentorModel::zeros(4);
  segmentor_batch_gradient(seg, sb, h1);
  std::reverse(sb.begin(), sb.end());
  auto h2 = SegmentorModel::zeros(4);
  segmentor_batch_gradient(seg, sb, h2);
  const auto a = flatten(std::as_const(h1).parameters()), b = flatten(std::as_const(h2).parameters());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
}

TEST(Train, RejectsDegenerateData) {
  TrainConfig cfg;
  EXPECT_THROW(train_detector(DetectorModel::zeros(4), std::vector<DetectorSample>{}, cfg), ConfigError);
  std::vector<DetectorSample> one_class(4, DetectorSample{Tensor({4, 4, 4}), true});
  EXPECT_THROW(train_detector(DetectorModel::zeros(4), one_class, cfg), ConfigError);
  EXPECT_THROW(train_segmentor(SegmentorModel::zeros(4), std::vector<SegmentorSample>{}, cfg), ConfigError);
}

TEST(Train, ValidatesConfig) {
  TrainConfig cfg;
  EXPECT_NO_THROW(validate(cfg));
  cfg.learning_rate = -1;
  EXPECT_THROW(validate(cfg), ConfigError);
  cfg = {};
  cfg.batch_size = 0;
  EXPECT_THROW(validate(cfg), ConfigError);
  cfg = {};
  cfg.train_fraction = 0.7;
  EXPECT_THROW(validate(cfg), ConfigError);
}

TEST(Train, LogCsv) {
  const std::vector<EpochLog> log = {{1, 0.5, 0.75}, {2, 0.25, 1.0}};
  EXPECT_EQ(training_log_csv(log), "epoch,loss,val_metric\n1,0.5,0.75\n2,0.25,1\n");
}

}  // namespace
}  // namespace nocguard::cnn
