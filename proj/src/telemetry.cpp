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

#include "nocguard/telemetry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "nocguard/error.hpp"

namespace nocguard {
namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::stringstream ss(line);
  while (std::getline(ss, item, sep)) {
    if (!item.empty() && item.back() == '\r') item.pop_back();
    out.push_back(item);
  }
  return out;
}

double to_double(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') throw IntegrityError("bad number '" + s + "' in frame CSV");
  return v;
}

}  // namespace

std::string_view to_string(FeatureKind k) noexcept {
  switch (k) {
    case FeatureKind::VCO: return "VCO";
    case FeatureKind::BOC: return "BOC";
    case FeatureKind::Mask: return "MASK";
  }
  return "?";
}

FeatureKind parse_feature_kind(std::string_view s) {
  if (s == "VCO" || s == "vco") return FeatureKind::VCO;
  if (s == "BOC" || s == "boc") return FeatureKind::BOC;
  if (s == "MASK" || s == "mask") return FeatureKind::Mask;
  throw ConfigError("unknown feature kind '" + std::string(s) + "'");
}

double sample_vco(const PortCounters& port) {
  return static_cast<double>(port.occupied_vcs) / static_cast<double>(port.total_vcs);
}

FeatureFrame FeatureFrame::zeros(Direction d, FeatureKind kind, int radix, std::int64_t window) {
  FeatureFrame f;
  f.direction = d;
  f.kind = kind;
  f.window_index = window;
  f.radix = radix;
  f.rows = is_horizontal(d) ? radix : radix - 1;
  f.cols = is_horizontal(d) ? radix - 1 : radix;
  f.values.assign(static_cast<std::size_t>(f.rows * f.cols), 0.0);
  return f;
}

NodeId FeatureFrame::node_at(int r, int c) const noexcept {
  switch (direction) {
    case Direction::W: return r * radix + c + 1;
    case Direction::S: return (r + 1) * radix + c;
    default: return r * radix + c;
  }
}

std::vector<PortCounters> port_counters(const TelemetrySnapshot& snap) {
  const auto cells = static_cast<std::size_t>(snap.radix) * static_cast<std::size_t>(snap.radix) * 4;
  if (snap.radix < 2 || snap.occupied_vcs.size() != cells || snap.boc.size() != cells) {
    throw IntegrityError("snapshot does not cover every input port of the mesh");
  }
  std::vector<PortCounters> out(cells);
  for (std::size_t i = 0; i < cells; ++i) {
    out[i] = {snap.occupied_vcs[i], snap.vcs_per_port, snap.boc[i]};
    if (out[i].occupied_vcs < 0 || out[i].occupied_vcs > out[i].total_vcs || out[i].boc_window < 0) {
      throw IntegrityError("snapshot counter out of range");
    }
  }
  return out;
}

FrameSet build_frames(const TelemetrySnapshot& snap, FeatureKind kind) {
  if (kind == FeatureKind::Mask) throw ConfigError("build_frames needs VCO or BOC");
  if (snap.vcs_per_port < 1) throw IntegrityError("snapshot has no VCs per port");
  const auto counters = port_counters(snap);
  FrameSet frames;
  for (const auto d : kDirections) {
    auto f = FeatureFrame::zeros(d, kind, snap.radix, snap.window_index);
    for (int r = 0; r < f.rows; ++r) {
      for (int c = 0; c < f.cols; ++c) {
        const auto& pc = counters[static_cast<std::size_t>(f.node_at(r, c)) * 4 +
                                  static_cast<std::size_t>(index_of(d))];
        f.at(r, c) = kind == FeatureKind::VCO ? sample_vco(pc) : static_cast<double>(pc.boc_window);
      }
    }
    frames[static_cast<std::size_t>(index_of(d))] = std::move(f);
  }
  return frames;
}

FeatureFrame normalize_boc(const FeatureFrame& frame) {
  FeatureFrame out = frame;
  if (frame.values.empty()) return out;
  const auto [lo, hi] = std::minmax_element(frame.values.begin(), frame.values.end());
  const double min = *lo;
  const double span = *hi - *lo;
  for (auto& v : out.values) v = span > 0.0 ? (v - min) / span : 0.0;
  return out;
}

std::vector<double> pad_to_square(const FeatureFrame& frame) {
  const int R = frame.radix;
  std::vector<double> grid(static_cast<std::size_t>(R * R), 0.0);
  for (int r = 0; r < frame.rows; ++r) {
    for (int c = 0; c < frame.cols; ++c) grid[static_cast<std::size_t>(frame.node_at(r, c))] = frame.at(r, c);
  }
  return grid;
}

FeatureFrame crop_from_square(std::span<const double> grid, Direction d, FeatureKind kind, int radix,
                              std::int64_t window) {
  if (grid.size() != static_cast<std::size_t>(radix * radix)) throw ShapeError("grid is not R x R");
  auto f = FeatureFrame::zeros(d, kind, radix, window);
  for (int r = 0; r < f.rows; ++r) {
    for (int c = 0; c < f.cols; ++c) f.at(r, c) = grid[static_cast<std::size_t>(f.node_at(r, c))];
  }
  return f;
}

GroundTruth ground_truth_masks(const ScenarioConfig& scenario, std::span<const NodeId> inactive) {
  const int R = scenario.mesh.radix;
  GroundTruth gt;
  gt.target_victim = scenario.target_victim;
  for (auto& m : gt.masks) m.assign(static_cast<std::size_t>(R * R), 0);
  std::set<NodeId> victims;
  for (const auto& a : scenario.attackers) {
    if (a.fir <= 0.0) continue;
    if (std::find(inactive.begin(), inactive.end(), a.node) != inactive.end()) continue;
    gt.attackers.push_back(a.node);
    for (const auto& hop : xy_route(a.node, scenario.target_victim, R)) {
      if (hop.entry == Direction::Local) continue;
      gt.masks[static_cast<std::size_t>(index_of(hop.entry))][static_cast<std::size_t>(hop.node)] = 1;
      victims.insert(hop.node);
    }
  }
  for (const auto a : gt.attackers) victims.erase(a);
  std::sort(gt.attackers.begin(), gt.attackers.end());
  gt.victims.assign(victims.begin(), victims.end());
  gt.attack = !gt.attackers.empty();
  return gt;
}

bool window_is_attack(const TelemetrySnapshot& snap) { return snap.any_malicious_traffic(); }

std::string frame_to_csv(const FeatureFrame& frame) {
  std::string out = "R,direction,kind,window,rows,cols\n";
  out += std::to_string(frame.radix) + ',' + std::string(to_string(frame.direction)) + ',' +
         std::string(to_string(frame.kind)) + ',' + std::to_string(frame.window_index) + ',' +
         std::to_string(frame.rows) + ',' + std::to_string(frame.cols) + '\n';
  char buf[32];
  for (int r = 0; r < frame.rows; ++r) {
    for (int c = 0; c < frame.cols; ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", frame.at(r, c));
      if (c) out += ',';
      out += buf;
    }
    out += '\n';
  }
  return out;
}

namespace {

// Reads one frame block; false when the stream is exhausted before a header line.
bool read_frame_block(std::istream& in, FeatureFrame& f) {
  std::string line;
  if (!std::getline(in, line) || line.empty()) return false;
  if (split(line, ',').size() != 6) throw IntegrityError("frame CSV: bad header");
  if (!std::getline(in, line)) throw IntegrityError("frame CSV: missing metadata line");
  const auto meta = split(line, ',');
  if (meta.size() != 6) throw IntegrityError("frame CSV: bad metadata line");
  f = FeatureFrame{};
  try {
    f.radix = std::stoi(meta[0]);
    f.direction = parse_direction(meta[1]);
    f.kind = parse_feature_kind(meta[2]);
    f.window_index = std::stoll(meta[3]);
    f.rows = std::stoi(meta[4]);
    f.cols = std::stoi(meta[5]);
  } catch (const std::logic_error& e) {
    throw IntegrityError(std::string("frame CSV: bad metadata: ") + e.what());
  }
  if (f.rows < 1 || f.cols < 1) throw IntegrityError("frame CSV: bad dimensions");
  f.values.reserve(static_cast<std::size_t>(f.rows * f.cols));
  for (int r = 0; r < f.rows; ++r) {
    if (!std::getline(in, line)) throw IntegrityError("frame CSV: truncated");
    const auto cells = split(line, ',');
    if (static_cast<int>(cells.size()) != f.cols) throw IntegrityError("frame CSV: ragged row");
    for (const auto& cell : cells) f.values.push_back(to_double(cell));
  }
  return true;
}

}  // namespace

FeatureFrame frame_from_csv(const std::string& text) {
  std::istringstream in(text);
  FeatureFrame f;
  if (!read_frame_block(in, f)) throw IntegrityError("frame CSV: empty document");
  return f;
}

std::vector<FeatureFrame> frames_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::vector<FeatureFrame> out;
  FeatureFrame f;
  while (read_frame_block(in, f)) out.push_back(std::move(f));
  return out;
}

void write_frame_csv(const FeatureFrame& frame, const std::string& path) {
  write_text_file(path, frame_to_csv(frame));
}

FeatureFrame read_frame_csv(const std::string& path) { return frame_from_csv(read_text_file(path)); }

std::uint8_t pgm_level(double v) noexcept {
  const double clamped = std::clamp(v, 0.0, 1.0);
  return static_cast<std::uint8_t>(std::floor(clamped * 255.0 + 0.5));
}

std::string frame_to_pgm(const FeatureFrame& frame) {
  std::string out = "P5\n" + std::to_string(frame.cols) + ' ' + std::to_string(frame.rows) + "\n255\n";
  for (int r = frame.rows - 1; r >= 0; --r) {
    for (int c = 0; c < frame.cols; ++c) out.push_back(static_cast<char>(pgm_level(frame.at(r, c))));
  }
  return out;
}

void write_frame_pgm(const FeatureFrame& frame, const std::string& path) {
  write_text_file(path, frame_to_pgm(frame));
}

}  // namespace nocguard
