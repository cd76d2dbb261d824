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

#include <string>
#include <string_view>

#include "nocguard/mesh.hpp"
#include "nocguard/random.hpp"

namespace nocguard {

/// Synthetic background traffic patterns.
enum class TrafficPattern {
  UniformRandom,
  Tornado,
  Shuffle,
  Neighbor,
  BitRotation,
  BitComplement,
};

inline constexpr TrafficPattern kAllPatterns[] = {
    TrafficPattern::UniformRandom, TrafficPattern::Tornado,     TrafficPattern::Shuffle,
    TrafficPattern::Neighbor,      TrafficPattern::BitRotation, TrafficPattern::BitComplement,
};

std::string_view to_string(TrafficPattern p) noexcept;
TrafficPattern parse_pattern(std::string_view name);

/// Patterns that permute address bits need a power-of-two radix.
bool is_bit_pattern(TrafficPattern p) noexcept;

/// Throws ConfigError when `pattern` cannot run on a radix x radix mesh.
void check_pattern_radix(TrafficPattern pattern, int radix);

/// Destination of a packet generated at `src`. Only UniformRandom draws from `rng`.
/// Deterministic patterns may map a node onto itself (e.g. shuffle of 0); callers
/// skip such injections.
NodeId stp_destination(TrafficPattern pattern, NodeId src, int radix, Rng& rng);

}  // namespace nocguard
