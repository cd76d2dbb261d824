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

#include "nocguard/localization.hpp"

#include <algorithm>
#include <set>

#include "nocguard/error.hpp"

namespace nocguard {
namespace {

bool has(std::span<const NodeId> sorted, NodeId n) {
  return std::binary_search(sorted.begin(), sorted.end(), n);
}

std::vector<std::vector<NodeId>> by_line(const std::vector<NodeId>& ids, const Mesh& mesh,
                                         bool rows) {
  std::vector<std::vector<NodeId>> out(static_cast<std::size_t>(mesh.radix()));
  for (NodeId n : ids) out[static_cast<std::size_t>(rows ? mesh.row(n) : mesh.col(n))].push_back(n);
  return out;
}

std::string join(const std::vector<NodeId>& ids, char sep) {
  std::string s;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) s += sep;
    s += std::to_string(ids[i]);
  }
  return s;
}

std::string join_dirs(const std::vector<Direction>& dirs) {
  std::string s;
  for (auto d : dirs) s += to_string(d);
  return s.empty() ? "-" : s;
}

// Gap-tolerant: is there a victim the flow through n (marked in direction d) could
// still reach?
bool has_downstream(NodeId n, Direction d, const DirSets& sets, const Mesh& mesh) {
  const int r = mesh.row(n), c = mesh.col(n);
  const auto& e = sets[index_of(Direction::E)];
  const auto& w = sets[index_of(Direction::W)];
  const auto& no = sets[index_of(Direction::N)];
  const auto& so = sets[index_of(Direction::S)];
  // Vertical victims reachable after a turn at column `ok(col)`.
  auto vertical = [&](auto col_ok) {
    for (NodeId m : no) if (col_ok(mesh.col(m)) && mesh.row(m) < r) return true;
    for (NodeId m : so) if (col_ok(mesh.col(m)) && mesh.row(m) > r) return true;
    return false;
  };
  switch (d) {
    case Direction::E:
      for (NodeId m : e) if (mesh.row(m) == r && mesh.col(m) < c) return true;
      return vertical([c](int mc) { return mc <= c; });
    case Direction::W:
      for (NodeId m : w) if (mesh.row(m) == r && mesh.col(m) > c) return true;
      return vertical([c](int mc) { return mc >= c; });
    case Direction::N:
      for (NodeId m : no) if (mesh.col(m) == c && mesh.row(m) < r) return true;
      return false;
    case Direction::S:
      for (NodeId m : so) if (mesh.col(m) == c && mesh.row(m) > r) return true;
      return false;
    default:
      return false;
  }
}

}  // namespace

std::string to_string(AttackerEstimate e) { return e == AttackerEstimate::One ? "1" : ">=2"; }

std::string to_string(LocalizeStatus s) {
  switch (s) {
    case LocalizeStatus::Ok: return "ok";
    case LocalizeStatus::NoVictims: return "no-victims";
    case LocalizeStatus::AmbiguousTarget: return "ambiguous-tv";
    case LocalizeStatus::Inconclusive: return "inconclusive";
  }
  return "?";
}

std::vector<std::uint8_t> binarize(std::span<const double> probabilities, double theta) {
  std::vector<std::uint8_t> out(probabilities.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = probabilities[i] >= theta ? 1 : 0;
  return out;
}

DirMask make_dir_mask(Direction d, int radix, std::vector<std::uint8_t> bits) {
  if (d == Direction::Local) throw ConfigError("direction masks exist only for E/N/W/S");
  const Mesh mesh(radix);
  if (bits.size() != static_cast<std::size_t>(mesh.node_count())) {
    throw ShapeError("mask has " + std::to_string(bits.size()) + " entries, expected " +
                     std::to_string(mesh.node_count()));
  }
  for (NodeId n = 0; n < mesh.node_count(); ++n) {
    if (!mesh.has_port(n, d)) bits[static_cast<std::size_t>(n)] = 0;
    else bits[static_cast<std::size_t>(n)] = bits[static_cast<std::size_t>(n)] ? 1 : 0;
  }
  return DirMask{d, radix, std::move(bits)};
}

DirMask binarize_frame(std::span<const double> probabilities, Direction d, int radix, double theta) {
  return make_dir_mask(d, radix, binarize(probabilities, theta));
}

Fusion fuse(std::span<const DirMask> masks) {
  Fusion f;
  if (masks.empty()) return f;
  const int radix = masks.front().radix;
  const auto n = static_cast<std::size_t>(radix) * static_cast<std::size_t>(radix);
  f.sum.assign(n, 0);
  for (const auto& m : masks) {
    if (m.radix != radix || m.mask.size() != n) throw ShapeError("fuse: masks disagree on mesh size");
    for (std::size_t i = 0; i < n; ++i) f.sum[i] = static_cast<std::uint8_t>(f.sum[i] + (m.mask[i] ? 1 : 0));
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (f.sum[i] >= 1) f.victims.push_back(static_cast<NodeId>(i));
  }
  return f;
}

DirSets dir_sets(std::span<const DirMask> masks) {
  DirSets sets;
  for (const auto& m : masks) {
    auto& s = sets[static_cast<std::size_t>(index_of(m.direction))];
    for (std::size_t i = 0; i < m.mask.size(); ++i) {
      if (m.mask[i]) s.push_back(static_cast<NodeId>(i));
    }
  }
  for (auto& s : sets) {
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
  }
  return sets;
}

NodeId identify_tv(std::span<const NodeId> victims, const DirSets& sets, int radix) {
  if (victims.empty()) throw LocalizationError("ambiguous TV: no victims");
  const Mesh mesh(radix);
  auto marked = [&](NodeId n, Direction d) { return has(sets[index_of(d)], n); };

  std::vector<NodeId> strict;
  for (NodeId n : victims) {
    bool out = false;
    for (auto d : kDirections) {
      // The neighbour on side d receives n's flow on its opposite-side port.
      const auto m = mesh.neighbor(n, d);
      if (m && marked(*m, opposite(d))) out = true;
    }
    if (!out) strict.push_back(n);
  }
  if (strict.size() == 1) return strict.front();

  std::vector<NodeId> tolerant;
  for (NodeId n : victims) {
    bool out = false;
    for (auto d : kDirections) {
      if (marked(n, d) && has_downstream(n, d, sets, mesh)) out = true;
    }
    if (!out) tolerant.push_back(n);
  }
  if (tolerant.size() == 1) return tolerant.front();
  throw LocalizationError("ambiguous TV: " + std::to_string(tolerant.size()) + " sink candidates");
}

VceResult vce(std::span<const NodeId> victims, const DirSets& sets, int radix, std::optional<NodeId> tv) {
  VceResult res;
  res.victims.assign(victims.begin(), victims.end());
  res.sets = sets;
  if (victims.empty()) {
    res.diagnostic = "VCE skipped: no victims";
    return res;
  }
  if (!tv) {
    try {
      tv = identify_tv(victims, sets, radix);
    } catch (const LocalizationError& e) {
      res.diagnostic = std::string("VCE skipped: ") + e.what();
      return res;
    }
  }
  const Mesh mesh(radix);
  const int tr = mesh.row(*tv), tc = mesh.col(*tv);

  std::vector<NodeId> sources;
  for (const auto& row : by_line(sets[index_of(Direction::E)], mesh, true)) {
    if (!row.empty() && mesh.col(row.back()) >= tc) sources.push_back(row.back());
  }
  for (const auto& row : by_line(sets[index_of(Direction::W)], mesh, true)) {
    if (!row.empty() && mesh.col(row.front()) <= tc) sources.push_back(row.front());
  }
  const auto n_col = by_line(sets[index_of(Direction::N)], mesh, false)[static_cast<std::size_t>(tc)];
  if (!n_col.empty() && mesh.row(n_col.back()) >= tr) sources.push_back(n_col.back());
  const auto s_col = by_line(sets[index_of(Direction::S)], mesh, false)[static_cast<std::size_t>(tc)];
  if (!s_col.empty() && mesh.row(s_col.front()) <= tr) sources.push_back(s_col.front());

  std::set<NodeId> all(victims.begin(), victims.end());
  all.insert(*tv);
  std::array<std::set<NodeId>, 4> per(
      {std::set<NodeId>(sets[0].begin(), sets[0].end()), std::set<NodeId>(sets[1].begin(), sets[1].end()),
       std::set<NodeId>(sets[2].begin(), sets[2].end()), std::set<NodeId>(sets[3].begin(), sets[3].end())});
  for (NodeId src : sources) {
    for (const auto& hop : xy_route(src, *tv, radix)) {
      all.insert(hop.node);
      if (hop.entry != Direction::Local) per[static_cast<std::size_t>(index_of(hop.entry))].insert(hop.node);
    }
  }
  res.victims.assign(all.begin(), all.end());
  for (std::size_t d = 0; d < 4; ++d) res.sets[d].assign(per[d].begin(), per[d].end());
  res.applied = true;
  return res;
}

TlmResult tlm_localize(const DirSets& sets, int radix) {
  const Mesh mesh(radix);
  const auto& e = sets[index_of(Direction::E)];
  const auto& n = sets[index_of(Direction::N)];
  const auto& w = sets[index_of(Direction::W)];
  const auto& s = sets[index_of(Direction::S)];
  const bool has_e = !e.empty(), has_n = !n.empty(), has_w = !w.empty(), has_s = !s.empty();
  const int count = has_e + has_n + has_w + has_s;
  if (count == 0) throw ConfigError("tlm_localize: every direction set is empty");

  TlmResult res;
  std::set<NodeId> cands;
  auto emit = [&](NodeId from, Direction side) {
    if (const auto a = mesh.neighbor(from, side)) cands.insert(*a);
    else ++res.off_mesh_rejections;
  };
  auto horizontal = [&](Direction d) {
    for (const auto& row : by_line(sets[index_of(d)], mesh, true)) {
      if (row.empty()) continue;
      if (d == Direction::E) emit(row.back(), Direction::E);   // Max(E) + 1
      else emit(row.front(), Direction::W);                    // Min(W) - 1
    }
  };
  auto vertical = [&](Direction d) {
    for (const auto& col : by_line(sets[index_of(d)], mesh, false)) {
      if (col.empty()) continue;
      if (d == Direction::N) emit(col.back(), Direction::N);   // Max(N) + R
      else emit(col.front(), Direction::S);                    // Min(S) - R
    }
  };
  auto all_candidates = [&] {
    if (has_e) horizontal(Direction::E);
    if (has_w) horizontal(Direction::W);
    if (has_n) vertical(Direction::N);
    if (has_s) vertical(Direction::S);
  };

  if (count == 1) {
    res.estimate = AttackerEstimate::One;
    all_candidates();
  } else if (count == 2 && ((has_e && has_w) || (has_n && has_s))) {
    res.estimate = AttackerEstimate::TwoOrMore;
    all_candidates();
  } else if (count == 2) {
    const auto& h = has_e ? e : w;
    const auto& v = has_n ? n : s;
    const bool collinear = (v.back() - v.front()) % radix == 0;
    const bool one_row = h.back() - h.front() < radix - 1;
    if (collinear && one_row) {
      res.estimate = AttackerEstimate::One;
      horizontal(has_e ? Direction::E : Direction::W);
    } else {
      res.estimate = AttackerEstimate::TwoOrMore;
      res.multi_round = true;
      all_candidates();
    }
  } else {
    res.estimate = AttackerEstimate::TwoOrMore;
    res.multi_round = true;
    all_candidates();
  }
  if (res.off_mesh_rejections > 0) res.multi_round = true;
  res.candidates.assign(cands.begin(), cands.end());
  return res;
}

std::vector<NodeId> validate_attackers(std::span<const NodeId> candidates, NodeId tv,
                                       std::span<const NodeId> victims, int radix) {
  const Mesh mesh(radix);
  std::vector<NodeId> sorted(victims.begin(), victims.end());
  std::sort(sorted.begin(), sorted.end());
  std::set<NodeId> out;
  if (!mesh.contains(tv)) return {};
  for (NodeId a : candidates) {
    if (!mesh.contains(a) || has(sorted, a) || a == tv) continue;
    bool ok = true;
    for (const auto& hop : xy_route(a, tv, radix)) {
      if (hop.node == a) continue;
      if (hop.node != tv && !has(sorted, hop.node)) {
        ok = false;
        break;
      }
    }
    if (ok) out.insert(a);
  }
  return {out.begin(), out.end()};
}

LocalizeOutcome localize(std::span<const DirMask> masks, int radix, bool vce_enabled, std::int64_t window_index) {
  LocalizeOutcome out;
  auto& rep = out.report;
  rep.window_index = window_index;
  for (const auto& m : masks) {
    if (m.radix != radix) throw ShapeError("localize: mask radix does not match the mesh");
  }

  const auto fusion = fuse(masks);
  auto sets = dir_sets(masks);
  for (auto d : kDirections) {
    if (!sets[index_of(d)].empty()) rep.abnormal_dirs.push_back(d);
  }
  rep.victims = fusion.victims;
  if (fusion.victims.empty()) {
    out.status = LocalizeStatus::NoVictims;
    out.diagnostic = "segmentation marked no routers";
    return out;
  }

  NodeId tv = -1;
  try {
    tv = identify_tv(fusion.victims, sets, radix);
  } catch (const LocalizationError& e) {
    out.status = LocalizeStatus::AmbiguousTarget;
    out.diagnostic = e.what();
    return out;
  }
  rep.target_victim = tv;

  if (vce_enabled) {
    auto v = vce(fusion.victims, sets, radix, tv);
    rep.victims = std::move(v.victims);
    sets = std::move(v.sets);
    rep.vce_applied = v.applied;
  }

  const auto tlm = tlm_localize(sets, radix);
  rep.attackers = validate_attackers(tlm.candidates, tv, rep.victims, radix);
  rep.estimate = tlm.estimate;
  if (rep.attackers.size() >= 2) rep.estimate = AttackerEstimate::TwoOrMore;
  if (rep.attackers.empty()) {
    out.status = LocalizeStatus::Inconclusive;
    out.diagnostic = "localization inconclusive, re-sample: " + std::to_string(tlm.candidates.size()) +
                     " candidate(s) failed route replay";
  }
  return out;
}

std::string to_text(const LocalizationReport& r) {
  std::string s;
  s += "window " + std::to_string(r.window_index) + "\n";
  s += "rounds_used " + std::to_string(r.rounds_used) + "\n";
  s += "abnormal_dirs " + join_dirs(r.abnormal_dirs) + "\n";
  s += "target_victim " + std::to_string(r.target_victim) + "\n";
  s += "victims " + join(r.victims, ' ') + "\n";
  s += "attackers " + (r.attackers.empty() ? std::string("none") : join(r.attackers, ' ')) + "\n";
  s += "estimated_attackers " + to_string(r.estimate) + "\n";
  s += std::string("vce_applied ") + (r.vce_applied ? "yes" : "no") + "\n";
  return s;
}

std::string report_csv_header() { return "window,dirs,victims,tv,attackers,estimate,rounds,vce"; }

std::string to_csv_line(const LocalizationReport& r) {
  return std::to_string(r.window_index) + "," + join_dirs(r.abnormal_dirs) + "," + join(r.victims, ' ') + "," +
         std::to_string(r.target_victim) + "," + join(r.attackers, ' ') + "," + to_string(r.estimate) + "," +
         std::to_string(r.rounds_used) + "," + (r.vce_applied ? "1" : "0");
}

}  // namespace nocguard
