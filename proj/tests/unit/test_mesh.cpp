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

#include <set>
#include <stdexcept>

#include "nocguard/mesh.hpp"

namespace nocguard {
namespace {

// Independent walk: step through (row, col) pairs, columns first, and name the
// receiving port from the step's travel direction.
std::vector<RouteHop> walk(NodeId src, NodeId dst, int R) {
  int r = src / R, c = src % R;
  const int tr = dst / R, tc = dst % R;
  std::vector<RouteHop> out{{src, Direction::Local}};
  while (c != tc) {
    const bool east = tc > c;
    c += east ? 1 : -1;
    out.push_back({r * R + c, east ? Direction::W : Direction::E});
  }
  while (r != tr) {
    const bool north = tr > r;
    r += north ? 1 : -1;
    out.push_back({r * R + c, north ? Direction::S : Direction::N});
  }
  return out;
}

TEST(XyRoute, ZeroDistance) {
  const auto p = xy_route(5, 5, 4);
  ASSERT_EQ(p.size(), 1u);
  EXPECT_EQ(p[0], (RouteHop{5, Direction::Local}));
}

TEST(XyRoute, WestboundEntersEastPorts) {
  const std::vector<RouteHop> want{{7, Direction::Local}, {6, Direction::E}, {5, Direction::E}, {4, Direction::E}};
  EXPECT_EQ(xy_route(7, 4, 4), want);
}

TEST(XyRoute, LShapedRouteOn16) {
  const std::vector<RouteHop> want{{39, Direction::Local}, {38, Direction::E}, {37, Direction::E},
                                   {36, Direction::E},     {35, Direction::E}, {19, Direction::N},
                                   {3, Direction::N}};
  EXPECT_EQ(xy_route(39, 3, 16), want);
  EXPECT_EQ(walk(39, 3, 16), want);
}

TEST(XyRoute, MatchesIndependentWalkForAllPairs) {
  for (int R : {2, 3, 4, 5, 8}) {
    const Mesh mesh(R);
    for (NodeId s = 0; s < R * R; ++s) {
      for (NodeId d = 0; d < R * R; ++d) {
        const auto p = xy_route(s, d, R);
        ASSERT_EQ(p, walk(s, d, R)) << "R=" << R << " " << s << "->" << d;
        EXPECT_EQ(static_cast<int>(p.size()), mesh.manhattan(s, d) + 1);
        std::set<NodeId> uniq;
        for (const auto& h : p) uniq.insert(h.node);
        EXPECT_EQ(uniq.size(), p.size());
      }
    }
  }
}

TEST(XyRoute, EveryEntryPortExists) {
  const int R = 6;
  const Mesh mesh(R);
  for (NodeId s = 0; s < R * R; ++s) {
    for (NodeId d = 0; d < R * R; ++d) {
      for (const auto& h : xy_route(s, d, R)) EXPECT_TRUE(mesh.has_port(h.node, h.entry));
    }
  }
}

TEST(XyRoute, RejectsOutOfRangeIds) {
  EXPECT_THROW(xy_route(-1, 3, 4), std::out_of_range);
  EXPECT_THROW(xy_route(0, 16, 4), std::out_of_range);
}

TEST(Mesh, NeighboursAndEdges) {
  const Mesh m(4);
  EXPECT_EQ(m.neighbor(5, Direction::E), 6);
  EXPECT_EQ(m.neighbor(5, Direction::N), 9);
  EXPECT_EQ(m.neighbor(5, Direction::W), 4);
  EXPECT_EQ(m.neighbor(5, Direction::S), 1);
  EXPECT_FALSE(m.neighbor(3, Direction::E).has_value());
  EXPECT_FALSE(m.neighbor(4, Direction::W).has_value());
  EXPECT_FALSE(m.neighbor(13, Direction::N).has_value());
  EXPECT_FALSE(m.neighbor(2, Direction::S).has_value());
  EXPECT_EQ(opposite(Direction::E), Direction::W);
  EXPECT_EQ(parse_direction("N"), Direction::N);
}

TEST(XyOutput, NamesTravelDirection) {
  const Mesh m(4);
  EXPECT_EQ(xy_output(m, 7, 4), Direction::W);
  EXPECT_EQ(xy_output(m, 4, 7), Direction::E);
  EXPECT_EQ(xy_output(m, 1, 13), Direction::N);
  EXPECT_EQ(xy_output(m, 13, 13), Direction::Local);
}

}  // namespace
}  // namespace nocguard
