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

#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "nocguard/mesh.hpp"
#include "nocguard/random.hpp"
#include "nocguard/scenario.hpp"

namespace nocguard {

using PacketId = std::int32_t;

struct PacketRecord {
  NodeId src = 0;
  NodeId dst = 0;
  std::int64_t inject_cycle = 0;   // cycle the packet was generated
  std::int64_t deliver_cycle = -1; // cycle the tail flit was ejected, -1 while in transit
  bool malicious = false;
  int flit_count = 0;

  std::int64_t latency() const noexcept { return deliver_cycle - inject_cycle; }
};

/// Counters captured at the end of one sampling window. Port arrays are indexed
/// [node * 4 + index_of(direction)] over E/N/W/S; ports missing on edge routers
/// hold zero and are never touched by traffic.
struct TelemetrySnapshot {
  std::int64_t window_index = 0;
  std::int64_t end_cycle = 0;
  int radix = 0;
  int vcs_per_port = 0;
  std::vector<int> occupied_vcs;
  std::vector<std::int64_t> boc;            // buffer writes + reads this window
  std::vector<std::int64_t> malicious_boc;  // the subset caused by malicious flits
  std::vector<std::int64_t> malicious_packets_started;  // per node, heads injected this window

  bool any_malicious_traffic() const noexcept;
};

struct CycleCounts {
  std::int32_t injected_flits = 0;
  std::int32_t delivered_flits = 0;
};

struct SimTrace {
  ScenarioConfig config;
  std::vector<TelemetrySnapshot> windows;
  std::vector<PacketRecord> delivered;  // in delivery order, warmup included
  std::vector<CycleCounts> per_cycle;
};

struct SimOptions {
  /// Log every head's router sequence and check it against xy_route on delivery,
  /// plus per-packet flit ordering. Costs memory; meant for tests.
  bool verify_routes = false;
};

/// Single-cycle-per-hop wormhole mesh with credit-based virtual-channel flow control.
///
/// One cycle runs four steps:
///   1. traffic generation into per-node FIFO source queues (normal then malicious);
///   2. each router's switch allocator grants at most one flit per output port and per
///      input port, round-robin over input VCs; a head also needs an idle downstream VC;
///   3. each network interface pushes one flit of its current packet into a local VC;
///   4. granted flits land in downstream buffers and credits return upstream.
/// Flits moved in step 2 or 3 become eligible again next cycle, so an uncontended
/// packet of F flits crossing H hops is delivered F + H cycles after generation.
class Simulator {
 public:
  explicit Simulator(const ScenarioConfig& cfg, SimOptions options = {});

  void step();
  void run(std::int64_t cycles) {
    for (std::int64_t i = 0; i < cycles; ++i) step();
  }

  std::int64_t cycle() const noexcept { return cycle_; }
  const ScenarioConfig& config() const noexcept { return cfg_; }
  const Mesh& mesh() const noexcept { return mesh_; }

  /// Telemetry at the current instant; window counters accumulate since the last reset.
  TelemetrySnapshot snapshot(std::int64_t window_index) const;
  void reset_window_counters();

  /// Halt an attacker: no further malicious packets, queued-but-unsent ones dropped.
  /// A malicious packet already partly injected finishes so wormhole state stays sound.
  void quarantine(NodeId node);
  bool is_quarantined(NodeId node) const;

  /// Stop (or resume) generating normal and malicious traffic; queued packets still drain.
  void set_generation(bool enabled) noexcept { generation_enabled_ = enabled; }
  /// Normal packets generated but not yet fully delivered.
  std::int64_t outstanding_normal_packets() const noexcept { return outstanding_normal_; }

  /// Packets delivered since the last call, in delivery order.
  std::vector<PacketRecord> take_delivered();

  const std::vector<CycleCounts>& per_cycle() const noexcept { return per_cycle_; }

  std::int64_t injected_flits() const noexcept { return injected_flits_; }
  std::int64_t delivered_flits() const noexcept { return delivered_flits_; }
  std::int64_t buffered_flits() const noexcept;
  std::size_t source_queue_length(NodeId node) const { return queues_.at(node).size(); }
  std::int64_t dropped_packets() const noexcept { return dropped_packets_; }
  std::int64_t stalled_injections() const noexcept { return stalled_injections_; }

  /// Flits that crossed the link into router `to` through input port `port` so far.
  std::int64_t link_flits(NodeId to, Direction port) const;

  /// Throws IntegrityError on flit conservation, credit, or VC-state violations.
  void verify_invariants() const;

  /// Recount of occupied VCs at one input port straight from the buffers and
  /// in-progress packets; independent of the counters snapshot() reads.
  int recount_occupied_vcs(NodeId node, Direction port) const;

  /// Inject a packet by hand (tests and examples). Returns its id.
  PacketId inject_packet(NodeId src, NodeId dst, bool malicious);

 private:
  struct Flit {
    PacketId packet = -1;
    std::uint16_t seq = 0;
    bool head = false;
    bool tail = false;
  };
  struct Arrival {
    std::int32_t vc;  // global downstream VC slot
    Flit flit;
  };
  struct CreditReturn {
    std::int32_t vc;
    bool tail;
  };
  struct Injector {
    PacketId packet = -1;
    int vc = -1;
    int next_seq = 0;
  };

  int vc_index(NodeId node, int port, int vc) const noexcept {
    return (node * kPortCount + port) * vcs_ + vc;
  }
  Flit& front(int vc) noexcept { return buffers_[static_cast<std::size_t>(vc) * depth_ + head_[vc]]; }

  void generate_traffic();
  void allocate_router(NodeId node);
  void inject_from_interface(NodeId node);
  void apply_transfers();
  PacketId new_packet(NodeId src, NodeId dst, bool malicious);
  void eject(NodeId node, const Flit& flit);
  void count_port_op(NodeId node, int port, PacketId packet);

  ScenarioConfig cfg_;
  SimOptions options_;
  Mesh mesh_;
  int vcs_;
  int depth_;
  int flits_per_packet_;
  std::int64_t cycle_ = 0;

  std::vector<Rng> normal_rng_;    // one stream per node
  std::vector<Rng> attacker_rng_;  // one stream per attacker
  std::vector<bool> quarantined_;  // per attacker entry

  std::vector<PacketRecord> packets_;
  std::vector<std::deque<PacketId>> queues_;
  std::vector<Injector> injectors_;

  // per input VC (node, port, vc)
  std::vector<Flit> buffers_;
  std::vector<std::uint8_t> head_;
  std::vector<std::uint8_t> count_;
  std::vector<std::int8_t> out_port_;
  std::vector<std::int8_t> out_vc_;
  std::vector<std::uint8_t> active_;     // holds a packet whose tail has not left
  std::vector<std::int16_t> credits_;    // upstream view of free slots
  std::vector<std::uint8_t> allocated_;  // upstream view: reserved for a packet

  // per (node, output port)
  std::vector<std::int32_t> rr_pointer_;
  std::vector<std::int32_t> router_flits_;

  // per (node, input port)
  std::vector<std::int64_t> boc_;
  std::vector<std::int64_t> malicious_boc_;
  std::vector<std::int64_t> link_flits_;
  std::vector<std::int64_t> malicious_started_;

  std::vector<Arrival> arrivals_;
  std::vector<CreditReturn> credit_returns_;
  std::vector<PacketRecord> fresh_deliveries_;
  std::vector<CycleCounts> per_cycle_;
  CycleCounts current_counts_;

  std::int64_t injected_flits_ = 0;
  std::int64_t delivered_flits_ = 0;
  std::int64_t dropped_packets_ = 0;
  std::int64_t stalled_injections_ = 0;
  std::int64_t outstanding_normal_ = 0;
  bool generation_enabled_ = true;

  std::vector<std::vector<NodeId>> hop_log_;
  std::vector<int> ejected_seq_;
};

/// Warm up, then run `run_cycles` emitting one snapshot per sampling window.
/// Throws ConfigError before simulating when the config is invalid.
SimTrace run_scenario(const ScenarioConfig& cfg, SimOptions options = {});

enum class TrafficClass { Normal, Malicious, All };

/// Mean latency over packets generated at or after warmup. nullopt when the class
/// has no delivered samples.
std::optional<double> average_latency(const SimTrace& trace, TrafficClass cls);
std::optional<double> average_latency(const std::vector<PacketRecord>& packets,
                                      std::int64_t warmup_cycles, TrafficClass cls);

/// CSV with header src,dst,inject_cycle,deliver_cycle,malicious.
std::string trace_to_csv(const SimTrace& trace);

}  // namespace nocguard
