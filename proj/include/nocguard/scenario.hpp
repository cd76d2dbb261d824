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
#include <map>
#include <string>
#include <vector>

#include "nocguard/mesh.hpp"
#include "nocguard/traffic.hpp"

namespace nocguard {

struct MeshConfig {
  int radix = 16;
  int vcs_per_port = 4;
  int buffer_depth_flits = 4;
  int flits_per_packet = 5;
  std::uint64_t seed = 1;
};

struct Attacker {
  NodeId node = 0;
  double fir = 0.0;  // Bernoulli packet-injection probability per cycle

  bool operator==(const Attacker&) const = default;
};

struct ScenarioConfig {
  MeshConfig mesh;
  TrafficPattern pattern = TrafficPattern::UniformRandom;
  double normal_injection_rate = 0.02;
  std::vector<Attacker> attackers;
  NodeId target_victim = 0;
  std::int64_t warmup_cycles = 1000;
  std::int64_t run_cycles = 10000;
  std::int64_t sample_period_cycles = 1000;
  /// After the run, stop generating traffic and keep stepping (at most this many
  /// cycles) until every normal packet has been delivered. 0 disables draining, in
  /// which case packets still queued at the end are missing from latency stats.
  std::int64_t drain_cycles = 0;
};

/// Throws ConfigError describing the first violated constraint.
void validate(const ScenarioConfig& cfg);

/// Flat `key = value` text. Unknown keys are rejected; missing keys keep defaults.
/// `#` starts a comment. `attackers` is a comma list of `node:fir` pairs or `none`.
ScenarioConfig parse_scenario(const std::string& text);
ScenarioConfig load_scenario(const std::string& path);

/// Apply a single `key`/`value` override (used by the CLI flags).
void set_scenario_key(ScenarioConfig& cfg, const std::string& key, const std::string& value);

std::string to_text(const ScenarioConfig& cfg);
void save_scenario(const ScenarioConfig& cfg, const std::string& path);

/// Generic flat key-value reader shared by the scenario and pipeline configs.
std::map<std::string, std::string> parse_key_values(const std::string& text);
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace nocguard
