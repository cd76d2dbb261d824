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
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "nocguard/mesh.hpp"

namespace nocguard {

inline constexpr double kDefaultBinarizeThreshold = 0.5;

/// Binary R x R route mask for one input-port direction, indexed by node id. The
/// line that has no such port (east column for E, and so on) is always zero.
struct DirMask {
  Direction direction = Direction::E;
  int radix = 0;
  std::vector<std::uint8_t> mask;
};

/// Victim ids per direction, sorted, indexed by index_of(E/N/W/S).
using DirSets = std::array<std::vector<NodeId>, 4>;

enum class AttackerEstimate { One, TwoOrMore };

std::string to_string(AttackerEstimate e);

struct LocalizationReport {
  std::int64_t window_index = 0;
  std::vector<NodeId> victims;  // sorted, includes the target victim
  NodeId target_victim = -1;
  std::vector<Direction> abnormal_dirs;
  std::vector<NodeId> attackers;  // sorted
  AttackerEstimate estimate = AttackerEstimate::One;
  int rounds_used = 1;
  bool vce_applied = false;
};

/// Raised by identify_tv when no single sink exists and by the steps that depend on it.
class LocalizationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// entry >= theta -> 1, else 0. No padding is applied.
std::vector<std::uint8_t> binarize(std::span<const double> probabilities,
                                   double theta = kDefaultBinarizeThreshold);

/// Wraps binary values as a DirMask, zeroing the padded edge line. Throws ShapeError
/// unless `bits` has R * R entries.
DirMask make_dir_mask(Direction d, int radix, std::vector<std::uint8_t> bits);

/// binarize followed by make_dir_mask.
DirMask binarize_frame(std::span<const double> probabilities, Direction d, int radix,
                       double theta = kDefaultBinarizeThreshold);

struct Fusion {
  std::vector<std::uint8_t> sum;  // per node, number of masks marking it
  std::vector<NodeId> victims;    // nodes with sum >= 1, sorted
};

/// Pixel-wise sum of the masks; a node is a victim when at least one mask marks it.
/// Throws ShapeError when the masks disagree on R.
Fusion fuse(std::span<const DirMask> masks);

DirSets dir_sets(std::span<const DirMask> masks);

/// Target victim: the victim whose flow has nowhere further to go. Flow leaves an
/// E-marked router westward, a W-marked one eastward, an N-marked one southward and
/// an S-marked one northward. The strict rule looks only at the adjacent router;
/// when it does not single out one victim, a gap-tolerant rule looks along the row
/// (and at vertical victims the flow could turn into) or along the column.
/// Throws LocalizationError when zero or several candidates remain.
NodeId identify_tv(std::span<const NodeId> victims, const DirSets& sets, int radix);

struct VceResult {
  std::vector<NodeId> victims;
  DirSets sets;
  bool applied = false;
  std::string diagnostic;  // set when VCE was skipped
};

/// Fills route gaps by replaying xy_route from a pseudo source to the target victim.
/// Each row's extreme upstream E (max id) or W (min id) victim and the extreme N/S
/// victim in the target's column act as pseudo sources. Segments whose extreme lies
/// on the wrong side of the target are ignored. With `tv` unset the target is found
/// by identify_tv; if that fails the input is returned unchanged with a diagnostic.
VceResult vce(std::span<const NodeId> victims, const DirSets& sets, int radix,
              std::optional<NodeId> tv = std::nullopt);

struct TlmResult {
  std::vector<NodeId> candidates;  // sorted, unique, on-mesh
  AttackerEstimate estimate = AttackerEstimate::One;
  bool multi_round = false;        // more rounds expected to be needed
  int off_mesh_rejections = 0;     // formula results that fell off the mesh edge
};

/// Attacker candidates from the per-direction extremes: one past max(E) to the east,
/// one past min(W) to the west, one past max(N) to the north, one past min(S) to the
/// south. Horizontal formulas are applied per row, vertical ones per column. Throws
/// ConfigError when every set is empty.
TlmResult tlm_localize(const DirSets& sets, int radix);

/// Keeps candidate a iff it is on the mesh, is not a victim, and every router of
/// xy_route(a, tv) after a is a victim or the target. Result is sorted.
std::vector<NodeId> validate_attackers(std::span<const NodeId> candidates, NodeId tv,
                                       std::span<const NodeId> victims, int radix);

enum class LocalizeStatus { Ok, NoVictims, AmbiguousTarget, Inconclusive };

std::string to_string(LocalizeStatus s);

struct LocalizeOutcome {
  LocalizeStatus status = LocalizeStatus::Ok;
  LocalizationReport report;  // victims/target filled as far as the chain got
  std::string diagnostic;
};

/// fuse -> identify_tv -> (vce) -> tlm_localize -> validate_attackers.
LocalizeOutcome localize(std::span<const DirMask> masks, int radix, bool vce_enabled,
                         std::int64_t window_index = 0);

std::string to_text(const LocalizationReport& report);
std::string report_csv_header();
std::string to_csv_line(const LocalizationReport& report);

}  // namespace nocguard
