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
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nocguard/mesh.hpp"
#include "nocguard/scenario.hpp"
#include "nocguard/simulator.hpp"

namespace nocguard {

enum class FeatureKind {
  VCO,   // virtual-channel occupancy ratio, sampled at window end
  BOC,   // buffer writes + reads over the window
  Mask,  // binary ground-truth or predicted route mask
};

std::string_view to_string(FeatureKind k) noexcept;
FeatureKind parse_feature_kind(std::string_view s);

struct PortCounters {
  int occupied_vcs = 0;
  int total_vcs = 1;
  std::int64_t boc_window = 0;
};

/// occupied / total at the sampling instant.
double sample_vco(const PortCounters& port);

/// Global matrix of one feature for one input-port direction.
///
/// E and W frames are R x (R-1): every mesh row, minus the edge column that has no
/// such port (east column for E, west column for W). N and S frames are (R-1) x R,
/// minus the north row for N and the south row for S. Frame row 0 is the southern
/// mesh row, frame column 0 the western one.
struct FeatureFrame {
  Direction direction = Direction::E;
  FeatureKind kind = FeatureKind::VCO;
  std::int64_t window_index = 0;
  int radix = 0;
  int rows = 0;
  int cols = 0;
  std::vector<double> values;  // row-major

  static FeatureFrame zeros(Direction d, FeatureKind kind, int radix, std::int64_t window = 0);

  double at(int r, int c) const { return values[static_cast<std::size_t>(r * cols + c)]; }
  double& at(int r, int c) { return values[static_cast<std::size_t>(r * cols + c)]; }

  /// Router whose `direction` input port backs entry (r, c).
  NodeId node_at(int r, int c) const noexcept;
};

using FrameSet = std::array<FeatureFrame, 4>;  // indexed by index_of(E/N/W/S)

/// Per-port counters for every directional input port, [node * 4 + dir].
std::vector<PortCounters> port_counters(const TelemetrySnapshot& snap);

/// Four frames (E, N, W, S) of the requested kind. Throws IntegrityError when the
/// snapshot does not carry a counter for every port. BOC values are raw counts.
FrameSet build_frames(const TelemetrySnapshot& snap, FeatureKind kind);

/// Per-frame min-max scaling to [0,1]; an all-equal frame maps to all zeros.
FeatureFrame normalize_boc(const FeatureFrame& frame);

/// R x R grid indexed by node id, with the missing edge line filled with zeros
/// (east column for E, west for W, north row for N, south row for S).
std::vector<double> pad_to_square(const FeatureFrame& frame);

/// Inverse of pad_to_square: drops the padded line.
FeatureFrame crop_from_square(std::span<const double> grid, Direction d, FeatureKind kind,
                              int radix, std::int64_t window = 0);

/// R x R binary masks, one per direction, indexed by node id.
using DirMasks = std::array<std::vector<std::uint8_t>, 4>;

struct GroundTruth {
  bool attack = false;
  DirMasks masks;
  std::vector<NodeId> victims;    // route nodes minus attackers, sorted
  std::vector<NodeId> attackers;  // active ones, sorted
  NodeId target_victim = 0;
};

/// Masks from replaying xy_route(attacker, target) for every attacker with FIR > 0
/// that is not in `inactive`.
GroundTruth ground_truth_masks(const ScenarioConfig& scenario,
                               std::span<const NodeId> inactive = {});

/// Window label: attack iff a malicious flit touched any router buffer.
bool window_is_attack(const TelemetrySnapshot& snap);

// CSV layout: a header line `R,direction,kind,window,rows,cols`, one line with those
// values, then `rows` lines of comma-separated values (full double precision).
std::string frame_to_csv(const FeatureFrame& frame);
FeatureFrame frame_from_csv(const std::string& text);
/// Several frame blocks concatenated back to back.
std::vector<FeatureFrame> frames_from_csv(const std::string& text);
void write_frame_csv(const FeatureFrame& frame, const std::string& path);
FeatureFrame read_frame_csv(const std::string& path);

/// Binary 8-bit PGM, values clamped to [0,1] then round-half-up of v * 255.
/// Image rows run north to south so the picture matches the mesh layout.
std::string frame_to_pgm(const FeatureFrame& frame);
void write_frame_pgm(const FeatureFrame& frame, const std::string& path);
std::uint8_t pgm_level(double v) noexcept;

}  // namespace nocguard
