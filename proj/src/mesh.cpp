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

#include "nocguard/mesh.hpp"

#include <cstdlib>
#include <stdexcept>

#include "nocguard/error.hpp"

namespace nocguard {

std::string_view to_string(Direction d) noexcept {
  switch (d) {
    case Direction::E: return "E";
    case Direction::N: return "N";
    case Direction::W: return "W";
    case Direction::S: return "S";
    case Direction::Local: return "L";
  }
  return "?";
}

Direction parse_direction(std::string_view s) {
  if (s == "E" || s == "e") return Direction::E;
  if (s == "N" || s == "n") return Direction::N;
  if (s == "W" || s == "w") return Direction::W;
  if (s == "S" || s == "s") return Direction::S;
  if (s == "L" || s == "l" || s == "LOCAL") return Direction::Local;
  throw ConfigError("unknown direction '" + std::string(s) + "'");
}

Mesh::Mesh(int radix) : radix_(radix) {
  if (radix < 2) throw ConfigError("mesh radix must be >= 2");
}

std::optional<NodeId> Mesh::neighbor(NodeId id, Direction d) const noexcept {
  const int r = row(id);
  const int c = col(id);
  switch (d) {
    case Direction::E:
      if (c + 1 < radix_) return id + 1;
      break;
    case Direction::W:
      if (c > 0) return id - 1;
      break;
    case Direction::N:
      if (r + 1 < radix_) return id + radix_;
      break;
    case Direction::S:
      if (r > 0) return id - radix_;
      break;
    case Direction::Local:
      return id;
  }
  return std::nullopt;
}

int Mesh::manhattan(NodeId a, NodeId b) const noexcept {
  return std::abs(row(a) - row(b)) + std::abs(col(a) - col(b));
}

Direction xy_output(const Mesh& mesh, NodeId at, NodeId dst) noexcept {
  const int dc = mesh.col(dst) - mesh.col(at);
  if (dc > 0) return Direction::E;
  if (dc < 0) return Direction::W;
  const int dr = mesh.row(dst) - mesh.row(at);
  if (dr > 0) return Direction::N;
  if (dr < 0) return Direction::S;
  return Direction::Local;
}

std::vector<RouteHop> xy_route(NodeId src, NodeId dst, int radix) {
  const Mesh mesh(radix);
  if (!mesh.contains(src) || !mesh.contains(dst)) {
    throw std::out_of_range("xy_route: node id outside " + std::to_string(radix) + "x" +
                            std::to_string(radix) + " mesh");
  }
  std::vector<RouteHop> path;
  path.reserve(static_cast<std::size_t>(mesh.manhattan(src, dst)) + 1);
  path.push_back({src, Direction::Local});
  NodeId at = src;
  while (at != dst) {
    const Direction out = xy_output(mesh, at, dst);
    at = *mesh.neighbor(at, out);
    path.push_back({at, opposite(out)});
  }
  return path;
}

}  // namespace nocguard
