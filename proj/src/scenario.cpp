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

#include "nocguard/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "nocguard/error.hpp"
#include "detail/parse.hpp"

namespace nocguard {
namespace {

using detail::parse_number;
using detail::trim;

std::vector<Attacker> parse_attackers(const std::string& value) {
  std::vector<Attacker> out;
  if (value.empty() || value == "none") return out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw ConfigError("attacker entry needs node:fir, got " + item);
    out.push_back({parse_number<NodeId>("attackers", trim(item.substr(0, colon))),
                   parse_number<double>("attackers", trim(item.substr(colon + 1)))});
  }
  return out;
}

}  // namespace

void validate(const ScenarioConfig& cfg) {
  const auto& m = cfg.mesh;
  if (m.radix < 2) throw ConfigError("radix must be >= 2");
  if (m.vcs_per_port < 1) throw ConfigError("vcs_per_port must be >= 1");
  if (m.buffer_depth_flits < 1) throw ConfigError("buffer_depth_flits must be >= 1");
  if (m.flits_per_packet < 1) throw ConfigError("flits_per_packet must be >= 1");
  check_pattern_radix(cfg.pattern, m.radix);
  if (!(cfg.normal_injection_rate >= 0.0 && cfg.normal_injection_rate <= 1.0)) {
    throw ConfigError("normal_injection_rate must lie in [0,1]");
  }
  const Mesh mesh(m.radix);
  if (!mesh.contains(cfg.target_victim)) throw ConfigError("target_victim outside the mesh");
  std::set<NodeId> seen;
  for (const auto& a : cfg.attackers) {
    if (!mesh.contains(a.node)) throw ConfigError("attacker " + std::to_string(a.node) + " outside the mesh");
    if (a.node == cfg.target_victim) throw ConfigError("attacker equals target_victim");
    if (!seen.insert(a.node).second) throw ConfigError("duplicate attacker " + std::to_string(a.node));
    if (!(a.fir >= 0.0 && a.fir <= 1.0)) throw ConfigError("FIR must lie in [0,1]");
  }
  if (cfg.warmup_cycles < 0) throw ConfigError("warmup_cycles must be >= 0");
  if (cfg.run_cycles < 0) throw ConfigError("run_cycles must be >= 0");
  if (cfg.sample_period_cycles < 1) throw ConfigError("sample_period_cycles must be >= 1");
  if (cfg.drain_cycles < 0) throw ConfigError("drain_cycles must be >= 0");
}

std::map<std::string, std::string> parse_key_values(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    }
    out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return out;
}

void set_scenario_key(ScenarioConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "radix") cfg.mesh.radix = parse_number<int>(key, value);
  else if (key == "vcs_per_port") cfg.mesh.vcs_per_port = parse_number<int>(key, value);
  else if (key == "buffer_depth_flits") cfg.mesh.buffer_depth_flits = parse_number<int>(key, value);
  else if (key == "flits_per_packet") cfg.mesh.flits_per_packet = parse_number<int>(key, value);
  else if (key == "seed") cfg.mesh.seed = parse_number<std::uint64_t>(key, value);
  else if (key == "pattern") cfg.pattern = parse_pattern(value);
  else if (key == "normal_injection_rate") cfg.normal_injection_rate = parse_number<double>(key, value);
  else if (key == "attackers") cfg.attackers = parse_attackers(value);
  else if (key == "target_victim") cfg.target_victim = parse_number<NodeId>(key, value);
  else if (key == "warmup_cycles") cfg.warmup_cycles = parse_number<std::int64_t>(key, value);
  else if (key == "run_cycles") cfg.run_cycles = parse_number<std::int64_t>(key, value);
  else if (key == "sample_period_cycles") cfg.sample_period_cycles = parse_number<std::int64_t>(key, value);
  else if (key == "drain_cycles") cfg.drain_cycles = parse_number<std::int64_t>(key, value);
  else throw ConfigError("unknown scenario key '" + key + "'");
}

ScenarioConfig parse_scenario(const std::string& text) {
  ScenarioConfig cfg;
  for (const auto& [k, v] : parse_key_values(text)) set_scenario_key(cfg, k, v);
  validate(cfg);
  return cfg;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path, "cannot open for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path, "cannot open for writing");
  out << text;
  if (!out) throw IoError(path, "write failed");
}

ScenarioConfig load_scenario(const std::string& path) { return parse_scenario(read_text_file(path)); }

std::string to_text(const ScenarioConfig& cfg) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "radix = " << cfg.mesh.radix << '\n'
      << "vcs_per_port = " << cfg.mesh.vcs_per_port << '\n'
      << "buffer_depth_flits = " << cfg.mesh.buffer_depth_flits << '\n'
      << "flits_per_packet = " << cfg.mesh.flits_per_packet << '\n'
      << "seed = " << cfg.mesh.seed << '\n'
      << "pattern = " << to_string(cfg.pattern) << '\n'
      << "normal_injection_rate = " << cfg.normal_injection_rate << '\n'
      << "attackers = ";
  if (cfg.attackers.empty()) out << "none";
  for (std::size_t i = 0; i < cfg.attackers.size(); ++i) {
    out << (i ? "," : "") << cfg.attackers[i].node << ':' << cfg.attackers[i].fir;
  }
  out << '\n'
      << "target_victim = " << cfg.target_victim << '\n'
      << "warmup_cycles = " << cfg.warmup_cycles << '\n'
      << "run_cycles = " << cfg.run_cycles << '\n'
      << "sample_period_cycles = " << cfg.sample_period_cycles << '\n'
      << "drain_cycles = " << cfg.drain_cycles << '\n';
  return out.str();
}

void save_scenario(const ScenarioConfig& cfg, const std::string& path) {
  write_text_file(path, to_text(cfg));
}

}  // namespace nocguard
