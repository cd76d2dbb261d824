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

#include "nocguard/traffic.hpp"

#include <bit>
#include <cstdint>

#include "nocguard/error.hpp"

namespace nocguard {

std::string_view to_string(TrafficPattern p) noexcept {
  switch (p) {
    case TrafficPattern::UniformRandom: return "uniform_random";
    case TrafficPattern::Tornado: return "tornado";
    case TrafficPattern::Shuffle: return "shuffle";
    case TrafficPattern::Neighbor: return "neighbor";
    case TrafficPattern::BitRotation: return "bit_rotation";
    case TrafficPattern::BitComplement: return "bit_complement";
  }
  return "?";
}

TrafficPattern parse_pattern(std::string_view name) {
  for (const auto p : kAllPatterns) {
    if (to_string(p) == name) return p;
  }
  throw ConfigError("unknown traffic pattern '" + std::string(name) + "'");
}

bool is_bit_pattern(TrafficPattern p) noexcept {
  return p == TrafficPattern::Shuffle || p == TrafficPattern::BitRotation ||
         p == TrafficPattern::BitComplement;
}

void check_pattern_radix(TrafficPattern pattern, int radix) {
  if (radix < 2) throw ConfigError("mesh radix must be >= 2");
  if (is_bit_pattern(pattern) && !std::has_single_bit(static_cast<unsigned>(radix))) {
    throw ConfigError(std::string(to_string(pattern)) + " needs a power-of-two radix, got " +
                      std::to_string(radix));
  }
}

NodeId stp_destination(TrafficPattern pattern, NodeId src, int radix, Rng& rng) {
  const int nodes = radix * radix;
  const int row = src / radix;
  const int col = src % radix;
  const auto bits = static_cast<unsigned>(std::countr_zero(static_cast<unsigned>(nodes)));
  const auto mask = static_cast<std::uint32_t>(nodes - 1);
  const auto s = static_cast<std::uint32_t>(src);

  switch (pattern) {
    case TrafficPattern::UniformRandom: {
      // draw over the other nodes so src is never picked
      const auto pick = static_cast<NodeId>(rng.below(static_cast<std::uint64_t>(nodes - 1)));
      return pick >= src ? pick + 1 : pick;
    }
    case TrafficPattern::BitComplement:
      check_pattern_radix(pattern, radix);
      return static_cast<NodeId>(~s & mask);
    case TrafficPattern::Shuffle:
      check_pattern_radix(pattern, radix);
      return static_cast<NodeId>(((s << 1) | (s >> (bits - 1))) & mask);
    case TrafficPattern::BitRotation:
      check_pattern_radix(pattern, radix);
      return static_cast<NodeId>(((s >> 1) | ((s & 1U) << (bits - 1))) & mask);
    case TrafficPattern::Neighbor:
      return row * radix + (col + 1) % radix;
    case TrafficPattern::Tornado:
      return row * radix + (col + (radix + 1) / 2 - 1) % radix;
  }
  return src;
}

}  // namespace nocguard
