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

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace nocguard {

/// Router index on an R x R mesh: id = row * R + col. Columns grow eastward and
/// rows grow northward, so the east neighbour is id + 1 and the north one id + R.
using NodeId = std::int32_t;

/// Router port. E/N/W/S name *input* ports by the side the flit enters from:
/// a flit travelling west arrives on the receiver's E port.
enum class Direction : std::uint8_t { E = 0, N = 1, W = 2, S = 3, Local = 4 };

inline constexpr std::array<Direction, 4> kDirections = {Direction::E, Direction::N,
                                                         Direction::W, Direction::S};
inline constexpr int kPortCount = 5;

constexpr int index_of(Direction d) noexcept { return static_cast<int>(d); }

constexpr Direction opposite(Direction d) noexcept {
  switch (d) {
    case Direction::E: return Direction::W;
    case Direction::W: return Direction::E;
    case Direction::N: return Direction::S;
    case Direction::S: return Direction::N;
    default: return Direction::Local;
  }
}

constexpr bool is_horizontal(Direction d) noexcept {
  return d == Direction::E || d == Direction::W;
}

std::string_view to_string(Direction d) noexcept;
Direction parse_direction(std::string_view s);

/// Geometry of a square mesh.
class Mesh {
 public:
  explicit Mesh(int radix);

  int radix() const noexcept { return radix_; }
  int node_count() const noexcept { return radix_ * radix_; }
  bool contains(NodeId id) const noexcept { return id >= 0 && id < node_count(); }

  int row(NodeId id) const noexcept { return id / radix_; }
  int col(NodeId id) const noexcept { return id % radix_; }
  NodeId id(int row, int col) const noexcept { return row * radix_ + col; }

  /// Router on side `d` of `id`, if the mesh has one.
  std::optional<NodeId> neighbor(NodeId id, Direction d) const noexcept;

  /// True when router `id` has an input port facing `d` (edge routers lack one).
  bool has_port(NodeId id, Direction d) const noexcept {
    return d == Direction::Local || neighbor(id, d).has_value();
  }

  int manhattan(NodeId a, NodeId b) const noexcept;

 private:
  int radix_;
};

struct RouteHop {
  NodeId node;
  Direction entry;  // Local for the source

  bool operator==(const RouteHop&) const = default;
};

/// Dimension-ordered (X then Y) route from src to dst, source included.
/// Throws std::out_of_range on ids outside the mesh.
std::vector<RouteHop> xy_route(NodeId src, NodeId dst, int radix);

/// Output port a router at `at` uses for a packet headed to `dst` under XY.
/// Local when at == dst. Output port naming follows travel direction:
/// output W leads to the west neighbour's E input.
Direction xy_output(const Mesh& mesh, NodeId at, NodeId dst) noexcept;

}  // namespace nocguard
