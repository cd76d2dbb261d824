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

#include "nocguard/simulator.hpp"

#include <algorithm>
#include <sstream>

#include "nocguard/error.hpp"

namespace nocguard {
namespace {

constexpr std::uint64_t kNormalStream = 0x6e6f726d;    // "norm"
constexpr std::uint64_t kAttackerStream = 0x61747461;  // "atta"
constexpr int kLocal = index_of(Direction::Local);

}  // namespace

bool TelemetrySnapshot::any_malicious_traffic() const noexcept {
  return std::any_of(malicious_boc.begin(), malicious_boc.end(), [](auto v) { return v > 0; });
}

Simulator::Simulator(const ScenarioConfig& cfg, SimOptions options)
    : cfg_(cfg),
      options_(options),
      mesh_(cfg.mesh.radix),
      vcs_(cfg.mesh.vcs_per_port),
      depth_(cfg.mesh.buffer_depth_flits),
      flits_per_packet_(cfg.mesh.flits_per_packet) {
  validate(cfg_);
  if (vcs_ > 12) throw ConfigError("vcs_per_port above 12 is not supported");
  if (depth_ > 255) throw ConfigError("buffer_depth_flits above 255 is not supported");
  if (flits_per_packet_ > 65535) throw ConfigError("flits_per_packet above 65535 is not supported");

  const int nodes = mesh_.node_count();
  normal_rng_.reserve(static_cast<std::size_t>(nodes));
  for (NodeId n = 0; n < nodes; ++n) {
    normal_rng_.emplace_back(derive_seed(cfg_.mesh.seed, static_cast<std::uint64_t>(n), kNormalStream));
  }
  for (const auto& a : cfg_.attackers) {
    attacker_rng_.emplace_back(derive_seed(cfg_.mesh.seed, static_cast<std::uint64_t>(a.node), kAttackerStream));
  }
  quarantined_.assign(cfg_.attackers.size(), false);

  queues_.resize(static_cast<std::size_t>(nodes));
  injectors_.resize(static_cast<std::size_t>(nodes));

  const auto vc_slots = static_cast<std::size_t>(nodes) * kPortCount * static_cast<std::size_t>(vcs_);
  buffers_.resize(vc_slots * static_cast<std::size_t>(depth_));
  head_.assign(vc_slots, 0);
  count_.assign(vc_slots, 0);
  out_port_.assign(vc_slots, -1);
  out_vc_.assign(vc_slots, -1);
  active_.assign(vc_slots, 0);
  credits_.assign(vc_slots, static_cast<std::int16_t>(depth_));
  allocated_.assign(vc_slots, 0);

  const auto ports = static_cast<std::size_t>(nodes) * kPortCount;
  rr_pointer_.assign(ports, vcs_ * kPortCount - 1);
  router_flits_.assign(static_cast<std::size_t>(nodes), 0);
  boc_.assign(ports, 0);
  malicious_boc_.assign(ports, 0);
  link_flits_.assign(ports, 0);
  malicious_started_.assign(static_cast<std::size_t>(nodes), 0);
}

PacketId Simulator::new_packet(NodeId src, NodeId dst, bool malicious) {
  const auto id = static_cast<PacketId>(packets_.size());
  packets_.push_back({src, dst, cycle_, -1, malicious, flits_per_packet_});
  if (!malicious) ++outstanding_normal_;
  queues_[static_cast<std::size_t>(src)].push_back(id);
  if (options_.verify_routes) {
    hop_log_.emplace_back();
    ejected_seq_.push_back(0);
  }
  return id;
}

PacketId Simulator::inject_packet(NodeId src, NodeId dst, bool malicious) {
  if (!mesh_.contains(src) || !mesh_.contains(dst) || src == dst) {
    throw ConfigError("inject_packet: bad endpoints");
  }
  return new_packet(src, dst, malicious);
}

void Simulator::generate_traffic() {
  const int nodes = mesh_.node_count();
  const double rate = cfg_.normal_injection_rate;
  if (rate > 0.0) {
    for (NodeId n = 0; n < nodes; ++n) {
      auto& rng = normal_rng_[static_cast<std::size_t>(n)];
      if (!rng.bernoulli(rate)) continue;
      const NodeId dst = stp_destination(cfg_.pattern, n, mesh_.radix(), rng);
      if (dst != n) new_packet(n, dst, false);
    }
  }
  for (std::size_t i = 0; i < cfg_.attackers.size(); ++i) {
    const auto& a = cfg_.attackers[i];
    // draw even when quarantined so the stream does not depend on quarantine timing
    const bool fire = attacker_rng_[i].bernoulli(a.fir);
    if (fire && !quarantined_[i]) new_packet(a.node, cfg_.target_victim, true);
  }
}

void Simulator::count_port_op(NodeId node, int port, PacketId packet) {
  const auto idx = static_cast<std::size_t>(node) * kPortCount + static_cast<std::size_t>(port);
  ++boc_[idx];
  if (packets_[static_cast<std::size_t>(packet)].malicious) ++malicious_boc_[idx];
}

void Simulator::eject(NodeId node, const Flit& flit) {
  auto& pkt = packets_[static_cast<std::size_t>(flit.packet)];
  ++delivered_flits_;
  ++current_counts_.delivered_flits;
  if (options_.verify_routes) {
    auto& seq = ejected_seq_[static_cast<std::size_t>(flit.packet)];
    if (flit.seq != seq) throw IntegrityError("flits of a packet arrived out of order");
    ++seq;
  }
  if (!flit.tail) return;
  if (node != pkt.dst) throw IntegrityError("packet ejected away from its destination");
  pkt.deliver_cycle = cycle_;
  if (!pkt.malicious) --outstanding_normal_;
  if (options_.verify_routes) {
    const auto route = xy_route(pkt.src, pkt.dst, mesh_.radix());
    const auto& hops = hop_log_[static_cast<std::size_t>(flit.packet)];
    bool same = hops.size() == route.size();
    for (std::size_t i = 0; same && i < hops.size(); ++i) same = hops[i] == route[i].node;
    if (!same) throw IntegrityError("packet strayed from its XY route");
  }
  fresh_deliveries_.push_back(pkt);
}

void Simulator::allocate_router(NodeId node) {
  const int slots = kPortCount * vcs_;
  const int base = vc_index(node, 0, 0);

  // which output each occupied input VC wants this cycle
  std::uint64_t requests[kPortCount] = {0, 0, 0, 0, 0};
  for (int s = 0; s < slots; ++s) {
    const int vc = base + s;
    if (count_[vc] == 0) continue;
    if (out_port_[vc] < 0) {
      const Flit& f = front(vc);
      out_port_[vc] = static_cast<std::int8_t>(
          index_of(xy_output(mesh_, node, packets_[static_cast<std::size_t>(f.packet)].dst)));
    }
    requests[out_port_[vc]] |= std::uint64_t{1} << s;
  }

  unsigned inputs_used = 0;
  const int first_out = static_cast<int>(cycle_ % kPortCount);
  for (int k = 0; k < kPortCount; ++k) {
    const int out = (first_out + k) % kPortCount;
    if (requests[out] == 0) continue;
    const auto rr_idx = static_cast<std::size_t>(node) * kPortCount + static_cast<std::size_t>(out);
    const int last = rr_pointer_[rr_idx];

    int down_port_base = -1;
    if (out != kLocal) {
      const NodeId next = *mesh_.neighbor(node, static_cast<Direction>(out));
      down_port_base = vc_index(next, index_of(opposite(static_cast<Direction>(out))), 0);
    }

    for (int step = 1; step <= slots; ++step) {
      const int s = (last + step) % slots;
      if (!((requests[out] >> s) & 1U)) continue;
      const int in_port = s / vcs_;
      if (inputs_used & (1U << in_port)) continue;
      const int vc = base + s;

      int target = -1;
      if (out != kLocal) {
        if (out_vc_[vc] < 0) {
          for (int w = 0; w < vcs_; ++w) {
            const int cand = down_port_base + w;
            if (!allocated_[cand] && credits_[cand] > 0) {
              target = cand;
              break;
            }
          }
          if (target < 0) continue;
        } else {
          target = down_port_base + out_vc_[vc];
          if (credits_[target] <= 0) continue;
        }
      }

      // grant
      inputs_used |= 1U << in_port;
      rr_pointer_[rr_idx] = s;
      const Flit flit = front(vc);
      head_[vc] = static_cast<std::uint8_t>((head_[vc] + 1) % depth_);
      --count_[vc];
      --router_flits_[static_cast<std::size_t>(node)];
      count_port_op(node, in_port, flit.packet);
      credit_returns_.push_back({vc, flit.tail});

      if (out == kLocal) {
        eject(node, flit);
      } else {
        if (out_vc_[vc] < 0) {
          allocated_[target] = 1;
          out_vc_[vc] = static_cast<std::int8_t>(target - down_port_base);
        }
        --credits_[target];
        arrivals_.push_back({target, flit});
      }
      if (flit.tail) {
        out_port_[vc] = -1;
        out_vc_[vc] = -1;
        active_[vc] = 0;
      }
      break;
    }
  }
}

void Simulator::inject_from_interface(NodeId node) {
  auto& inj = injectors_[static_cast<std::size_t>(node)];
  auto& queue = queues_[static_cast<std::size_t>(node)];
  if (inj.packet < 0) {
    if (queue.empty()) return;
    const int base = vc_index(node, kLocal, 0);
    int free_vc = -1;
    for (int w = 0; w < vcs_; ++w) {
      if (!allocated_[base + w] && credits_[base + w] > 0) {
        free_vc = w;
        break;
      }
    }
    if (free_vc < 0) {
      ++stalled_injections_;
      return;
    }
    inj.packet = queue.front();
    inj.vc = free_vc;
    inj.next_seq = 0;
    allocated_[base + free_vc] = 1;
  }
  const int vc = vc_index(node, kLocal, inj.vc);
  if (credits_[vc] <= 0) {
    ++stalled_injections_;
    return;
  }
  const auto& pkt = packets_[static_cast<std::size_t>(inj.packet)];
  Flit flit;
  flit.packet = inj.packet;
  flit.seq = static_cast<std::uint16_t>(inj.next_seq);
  flit.head = inj.next_seq == 0;
  flit.tail = inj.next_seq == pkt.flit_count - 1;
  --credits_[vc];
  arrivals_.push_back({vc, flit});
  ++injected_flits_;
  ++current_counts_.injected_flits;
  if (flit.head && pkt.malicious) ++malicious_started_[static_cast<std::size_t>(node)];
  if (flit.tail) {
    queue.pop_front();
    inj.packet = -1;
    inj.vc = -1;
  } else {
    ++inj.next_seq;
  }
}

void Simulator::apply_transfers() {
  for (const auto& a : arrivals_) {
    const int vc = a.vc;
    const int slot = (head_[vc] + count_[vc]) % depth_;
    buffers_[static_cast<std::size_t>(vc) * depth_ + slot] = a.flit;
    ++count_[vc];
    const int port_slot = vc / vcs_;  // node * kPortCount + port
    const NodeId node = port_slot / kPortCount;
    const int port = port_slot % kPortCount;
    ++router_flits_[static_cast<std::size_t>(node)];
    count_port_op(node, port, a.flit.packet);
    if (a.flit.head) {
      active_[vc] = 1;
      if (options_.verify_routes) hop_log_[static_cast<std::size_t>(a.flit.packet)].push_back(node);
    }
    if (port != kLocal) ++link_flits_[static_cast<std::size_t>(port_slot)];
  }
  for (const auto& c : credit_returns_) {
    ++credits_[c.vc];
    if (c.tail) allocated_[c.vc] = 0;
  }
  arrivals_.clear();
  credit_returns_.clear();
}

void Simulator::step() {
  current_counts_ = {};
  if (generation_enabled_) generate_traffic();
  const int nodes = mesh_.node_count();
  for (NodeId n = 0; n < nodes; ++n) {
    if (router_flits_[static_cast<std::size_t>(n)] > 0) allocate_router(n);
  }
  for (NodeId n = 0; n < nodes; ++n) inject_from_interface(n);
  apply_transfers();
  per_cycle_.push_back(current_counts_);
  ++cycle_;
}

TelemetrySnapshot Simulator::snapshot(std::int64_t window_index) const {
  const int nodes = mesh_.node_count();
  TelemetrySnapshot snap;
  snap.window_index = window_index;
  snap.end_cycle = cycle_;
  snap.radix = mesh_.radix();
  snap.vcs_per_port = vcs_;
  const auto cells = static_cast<std::size_t>(nodes) * 4;
  snap.occupied_vcs.assign(cells, 0);
  snap.boc.assign(cells, 0);
  snap.malicious_boc.assign(cells, 0);
  for (NodeId n = 0; n < nodes; ++n) {
    for (const auto d : kDirections) {
      const auto cell = static_cast<std::size_t>(n) * 4 + static_cast<std::size_t>(index_of(d));
      const auto port_slot = static_cast<std::size_t>(n) * kPortCount + static_cast<std::size_t>(index_of(d));
      int occupied = 0;
      for (int v = 0; v < vcs_; ++v) occupied += active_[static_cast<std::size_t>(vc_index(n, index_of(d), v))];
      snap.occupied_vcs[cell] = occupied;
      snap.boc[cell] = boc_[port_slot];
      snap.malicious_boc[cell] = malicious_boc_[port_slot];
    }
  }
  snap.malicious_packets_started = malicious_started_;
  return snap;
}

void Simulator::reset_window_counters() {
  std::fill(boc_.begin(), boc_.end(), 0);
  std::fill(malicious_boc_.begin(), malicious_boc_.end(), 0);
  std::fill(malicious_started_.begin(), malicious_started_.end(), 0);
}

void Simulator::quarantine(NodeId node) {
  bool found = false;
  for (std::size_t i = 0; i < cfg_.attackers.size(); ++i) {
    if (cfg_.attackers[i].node == node) {
      quarantined_[i] = true;
      found = true;
    }
  }
  if (!found || !mesh_.contains(node)) return;
  auto& queue = queues_[static_cast<std::size_t>(node)];
  const PacketId in_progress = injectors_[static_cast<std::size_t>(node)].packet;
  const auto before = queue.size();
  queue.erase(std::remove_if(queue.begin(), queue.end(),
                             [&](PacketId p) {
                               return p != in_progress && packets_[static_cast<std::size_t>(p)].malicious;
                             }),
              queue.end());
  dropped_packets_ += static_cast<std::int64_t>(before - queue.size());
}

bool Simulator::is_quarantined(NodeId node) const {
  for (std::size_t i = 0; i < cfg_.attackers.size(); ++i) {
    if (cfg_.attackers[i].node == node) return quarantined_[i];
  }
  return false;
}

std::vector<PacketRecord> Simulator::take_delivered() {
  std::vector<PacketRecord> out;
  out.swap(fresh_deliveries_);
  return out;
}

std::int64_t Simulator::buffered_flits() const noexcept {
  std::int64_t total = 0;
  for (const auto c : count_) total += c;
  return total;
}

std::int64_t Simulator::link_flits(NodeId to, Direction port) const {
  return link_flits_.at(static_cast<std::size_t>(to) * kPortCount + static_cast<std::size_t>(index_of(port)));
}

int Simulator::recount_occupied_vcs(NodeId node, Direction port) const {
  // Grants and arrivals happen in the same cycle, so between cycles a VC holds a
  // packet exactly when its buffer is non-empty or the upstream still reserves it.
  int occupied = 0;
  for (int v = 0; v < vcs_; ++v) {
    const auto vc = static_cast<std::size_t>(vc_index(node, index_of(port), v));
    if (count_[vc] > 0 || allocated_[vc]) ++occupied;
  }
  return occupied;
}

void Simulator::verify_invariants() const {
  const std::int64_t buffered = buffered_flits();
  if (injected_flits_ != buffered + delivered_flits_) {
    throw IntegrityError("flit conservation violated: injected " + std::to_string(injected_flits_) +
                         " != buffered " + std::to_string(buffered) + " + delivered " +
                         std::to_string(delivered_flits_));
  }
  for (std::size_t vc = 0; vc < count_.size(); ++vc) {
    if (count_[vc] > depth_) throw IntegrityError("VC occupancy exceeds buffer depth");
    if (credits_[vc] < 0 || credits_[vc] + count_[vc] != depth_) {
      throw IntegrityError("credit accounting broken at VC slot " + std::to_string(vc));
    }
    if (active_[vc] != allocated_[vc]) throw IntegrityError("VC state disagrees with upstream reservation");
  }
  std::int64_t per_router = 0;
  for (const auto f : router_flits_) per_router += f;
  if (per_router != buffered) throw IntegrityError("router flit tally out of sync");
}

SimTrace run_scenario(const ScenarioConfig& cfg, SimOptions options) {
  validate(cfg);
  Simulator sim(cfg, options);
  SimTrace trace;
  trace.config = cfg;
  sim.run(cfg.warmup_cycles);
  sim.reset_window_counters();
  const std::int64_t windows = cfg.run_cycles / cfg.sample_period_cycles;
  for (std::int64_t w = 0; w < windows; ++w) {
    sim.run(cfg.sample_period_cycles);
    trace.windows.push_back(sim.snapshot(w));
    sim.reset_window_counters();
  }
  sim.run(cfg.run_cycles - windows * cfg.sample_period_cycles);
  if (cfg.drain_cycles > 0) {
    sim.set_generation(false);
    for (std::int64_t i = 0; i < cfg.drain_cycles && sim.outstanding_normal_packets() > 0; ++i) sim.step();
  }
  trace.delivered = sim.take_delivered();
  trace.per_cycle = sim.per_cycle();
  return trace;
}

std::optional<double> average_latency(const std::vector<PacketRecord>& packets,
                                      std::int64_t warmup_cycles, TrafficClass cls) {
  double sum = 0.0;
  std::int64_t n = 0;
  for (const auto& p : packets) {
    if (p.deliver_cycle < 0 || p.inject_cycle < warmup_cycles) continue;
    if (cls == TrafficClass::Normal && p.malicious) continue;
    if (cls == TrafficClass::Malicious && !p.malicious) continue;
    sum += static_cast<double>(p.latency());
    ++n;
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

std::optional<double> average_latency(const SimTrace& trace, TrafficClass cls) {
  return average_latency(trace.delivered, trace.config.warmup_cycles, cls);
}

std::string trace_to_csv(const SimTrace& trace) {
  std::ostringstream out;
  out << "src,dst,inject_cycle,deliver_cycle,malicious\n";
  for (const auto& p : trace.delivered) {
    out << p.src << ',' << p.dst << ',' << p.inject_cycle << ',' << p.deliver_cycle << ','
        << (p.malicious ? 1 : 0) << '\n';
  }
  return out.str();
}

}  // namespace nocguard
