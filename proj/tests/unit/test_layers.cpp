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

#include <cmath>

#include "nocguard/cnn/layers.hpp"
#include "nocguard/error.hpp"
#include "nocguard/random.hpp"

namespace nocguard::cnn {
namespace {

Tensor random_tensor(Shape s, Rng& rng) {
  Tensor t(s);
  for (auto& v : t.values()) v = rng.uniform(-1.0, 1.0);
  return t;
}

// Straight from the definition: out[o][y][x] = b[o] + sum over i, ky, kx of
// w[o][i][ky][kx] * in[i][y + ky - k/2][x + kx - k/2], zero outside the input.
double naive_conv(const Tensor& in, const Conv2D& l, int o, int y, int x) {
  double s = l.bias[static_cast<std::size_t>(o)];
  const int h = l.kernel / 2;
  for (int i = 0; i < l.in_channels; ++i)
    for (int ky = 0; ky < l.kernel; ++ky)
      for (int kx = 0; kx < l.kernel; ++kx) {
        const int yy = y + ky - h, xx = x + kx - h;
        if (yy < 0 || xx < 0 || yy >= in.shape().height || xx >= in.shape().width) continue;
        s += l.w(o, i, ky, kx) * in.at(i, yy, xx);
      }
  return s;
}

TEST(Layers, ConvOnesGivesWindowCounts) {
  Conv2D l(1, 1, 3);
  for (auto& w : l.weight) w = 1.0;
  const auto out = conv2d(Tensor({1, 3, 3}, 1.0), l);
  EXPECT_EQ(out.at(0, 1, 1), 9.0);
  EXPECT_EQ(out.at(0, 0, 1), 6.0);
  EXPECT_EQ(out.at(0, 1, 2), 6.0);
  EXPECT_EQ(out.at(0, 0, 0), 4.0);
  EXPECT_EQ(out.at(0, 2, 2), 4.0);
}

TEST(Layers, ConvIdentityAndBias) {
  Rng rng(3);
  const auto in = random_tensor({1, 5, 7}, rng);
  Conv2D id(1, 1, 3);
  id.w(0, 0, 1, 1) = 1.0;
  const auto out = conv2d(in, id);
  for (std::size_t i = 0; i < in.size(); ++i) EXPECT_EQ(out[i], in[i]);

  Conv2D b(3, 2, 3);
  for (auto& w : b.weight) w = rng.uniform(-1, 1);
  b.bias = {0.5, -1.0, 2.0};
  const auto z = conv2d(Tensor({2, 4, 4}), b);
  for (int o = 0; o < 3; ++o)
    for (double v : z.channel(o)) EXPECT_EQ(v, b.bias[static_cast<std::size_t>(o)]);
}

TEST(Layers, ConvMatchesNaiveOracle) {
  Rng rng(11);
  for (int k : {1, 3, 5}) {
    Conv2D l(4, 3, k);
    for (auto& w : l.weight) w = rng.uniform(-1, 1);
    for (auto& b : l.bias) b = rng.uniform(-1, 1);
    const auto in = random_tensor({3, 6, 5}, rng);
    const auto out = conv2d(in, l);
    ASSERT_EQ(out.shape(), (Shape{4, 6, 5}));
    for (int o = 0; o < 4; ++o)
      for (int y = 0; y < 6; ++y)
        for (int x = 0; x < 5; ++x) EXPECT_NEAR(out.at(o, y, x), naive_conv(in, l, o, y, x), 1e-12);
  }
}

TEST(Layers, ConvRejectsChannelMismatch) {
  EXPECT_THROW(conv2d(Tensor({2, 4, 4}), Conv2D(1, 3, 3)), ShapeError);
}

TEST(Layers, MaxPoolExamples) {
  const auto r = maxpool2(Tensor({1, 2, 2}, {1, 2, 3, 4}));
  EXPECT_EQ(r.output.shape(), (Shape{1, 1, 1}));
  EXPECT_EQ(r.output[0], 4.0);
  EXPECT_EQ(r.argmax[0], 3);

  const auto c = maxpool2(Tensor({2, 6, 6}, 0.25));
  for (double v : c.output.values()) EXPECT_EQ(v, 0.25);

  EXPECT_EQ(maxpool2(Tensor({8, 16, 16})).output.shape(), (Shape{8, 8, 8}));
  EXPECT_EQ(maxpool2(Tensor({1, 16, 15})).output.shape(), (Shape{1, 8, 7}));
}

TEST(Layers, MaxPoolBackwardRoutesToWinner) {
  Rng rng(5);
  const auto in = random_tensor({2, 5, 4}, rng);
  const auto r = maxpool2(in);
  Tensor g(r.output.shape(), 1.0);
  const auto back = maxpool2_backward(in.shape(), r.argmax, g);
  double total = 0;
  for (double v : back.values()) total += v;
  EXPECT_EQ(total, static_cast<double>(r.output.size()));
  for (std::size_t i = 0; i < r.output.size(); ++i) EXPECT_EQ(in[static_cast<std::size_t>(r.argmax[i])], r.output[i]);
  // Trailing odd row is never a winner.
  for (int c = 0; c < 2; ++c)
    for (int x = 0; x < 4; ++x) EXPECT_EQ(back.at(c, 4, x), 0.0);
}

TEST(Layers, DenseForward) {
  Dense d(3, 2);
  d.weight = {1, 2, 3, -1, 0, 1};
  d.bias = {0.5, -0.5};
  const double x[] = {1, 1, 2};
  const auto y = dense_forward(x, d);
  EXPECT_EQ(y, (std::vector<double>{9.5, 0.5}));
  const double bad[] = {1, 2};
  EXPECT_THROW(dense_forward(bad, d), ShapeError);
}

TEST(Layers, ReluAndSigmoid) {
  const auto r = relu(Tensor({1, 1, 4}, {-2, 0, 0.5, 3}));
  EXPECT_EQ(r[0], 0.0);
  EXPECT_EQ(r[1], 0.0);
  EXPECT_EQ(r[3], 3.0);
  const auto g = relu_backward(Tensor({1, 1, 3}, {-1, 2, 3}), Tensor({1, 1, 3}, {5, 6, 7}));
  EXPECT_EQ(g[0], 0.0);
  EXPECT_EQ(g[1], 6.0);
  EXPECT_EQ(sigmoid(0.0), 0.5);
  EXPECT_NEAR(sigmoid(2.0), 1.0 / (1.0 + std::exp(-2.0)), 1e-15);
  for (double z : {-800.0, -40.0, 40.0, 800.0}) {
    EXPECT_GE(sigmoid(z), 0.0);
    EXPECT_LE(sigmoid(z), 1.0);
    EXPECT_TRUE(std::isfinite(sigmoid(z)));
  }
}

TEST(Layers, GlorotBounds) {
  Rng rng(9);
  Conv2D l(8, 4, 3);
  glorot_init(l, rng);
  const double limit = std::sqrt(6.0 / (36 + 72));
  for (double w : l.weight) EXPECT_LE(std::abs(w), limit);
  for (double b : l.bias) EXPECT_EQ(b, 0.0);
  Rng again(9);
  Conv2D m(8, 4, 3);
  glorot_init(m, again);
  EXPECT_EQ(l.weight, m.weight);
}

}  // namespace
}  // namespace nocguard::cnn
