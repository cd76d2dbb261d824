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

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace nocguard::cnn {

struct Shape {
  int channels = 0;
  int height = 0;
  int width = 0;

  std::size_t size() const noexcept {
    return static_cast<std::size_t>(channels) * static_cast<std::size_t>(height) *
           static_cast<std::size_t>(width);
  }
  bool operator==(const Shape&) const = default;
};

std::string to_string(const Shape& s);

/// Dense channels x height x width array of doubles. A flat vector is 1 x 1 x n.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0) : shape_(shape), data_(shape.size(), fill) {}
  Tensor(Shape shape, std::vector<double> data);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t size() const noexcept { return data_.size(); }

  double& at(int c, int y, int x) noexcept {
    return data_[(static_cast<std::size_t>(c) * shape_.height + y) * shape_.width + x];
  }
  double at(int c, int y, int x) const noexcept {
    return data_[(static_cast<std::size_t>(c) * shape_.height + y) * shape_.width + x];
  }
  double& operator[](std::size_t i) noexcept { return data_[i]; }
  double operator[](std::size_t i) const noexcept { return data_[i]; }

  std::span<double> channel(int c) noexcept {
    return {data_.data() + static_cast<std::size_t>(c) * plane(), plane()};
  }
  std::span<const double> channel(int c) const noexcept {
    return {data_.data() + static_cast<std::size_t>(c) * plane(), plane()};
  }
  std::size_t plane() const noexcept {
    return static_cast<std::size_t>(shape_.height) * static_cast<std::size_t>(shape_.width);
  }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

  bool all_finite() const noexcept;

 private:
  Shape shape_;
  std::vector<double> data_;
};

}  // namespace nocguard::cnn
