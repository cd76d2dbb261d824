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

#include <gtest/gtest.h>

#include <filesystem>

#include "nocguard/error.hpp"
#include "nocguard/scenario.hpp"

namespace nocguard {
namespace {

TEST(Scenario, ParsesKeysAndComments) {
  const auto cfg = parse_scenario(
      "# flood from the corner\n"
      "radix = 8\n"
      "pattern = tornado   # background\n"
      "attackers = 63:0.8, 7:0.25\n"
      "target_victim = 0\n"
      "seed = 99\n"
      "drain_cycles = 500\n");
  EXPECT_EQ(cfg.mesh.radix, 8);
  EXPECT_EQ(cfg.pattern, TrafficPattern::Tornado);
  ASSERT_EQ(cfg.attackers.size(), 2u);
  EXPECT_EQ(cfg.attackers[0], (Attacker{63, 0.8}));
  EXPECT_EQ(cfg.attackers[1], (Attacker{7, 0.25}));
  EXPECT_EQ(cfg.mesh.seed, 99u);
  EXPECT_EQ(cfg.drain_cycles, 500);
  EXPECT_EQ(cfg.run_cycles, 10000);  // default kept
}

TEST(Scenario, TextRoundTrip) {
  ScenarioConfig cfg;
  cfg.mesh.radix = 4;
  cfg.attackers = {{15, 0.5}};
  cfg.target_victim = 2;
  cfg.pattern = TrafficPattern::BitComplement;
  const auto back = parse_scenario(to_text(cfg));
  EXPECT_EQ(to_text(back), to_text(cfg));
  EXPECT_EQ(back.attackers, cfg.attackers);
  EXPECT_TRUE(parse_scenario("attackers = none\n").attackers.empty());
}

TEST(Scenario, RejectsBadInput) {
  EXPECT_THROW(parse_scenario("radix = 8\nbogus = 1\n"), ConfigError);
  EXPECT_THROW(parse_scenario("radix = eight\n"), ConfigError);
  EXPECT_THROW(parse_scenario("attackers = 3:1.5\n"), ConfigError);

  ScenarioConfig cfg;
  cfg.mesh.radix = 4;
  cfg.attackers = {{2, 0.5}};
  cfg.target_victim = 2;
  EXPECT_THROW(validate(cfg), ConfigError);  // attacker is the target
  cfg.target_victim = 16;
  EXPECT_THROW(validate(cfg), ConfigError);
  cfg.target_victim = 0;
  cfg.pattern = TrafficPattern::Shuffle;
  cfg.mesh.radix = 6;
  EXPECT_THROW(validate(cfg), ConfigError);
}

TEST(Scenario, MissingFileIsIoError) {
  EXPECT_THROW(load_scenario("/nonexistent/dir/x.scenario"), IoError);
}

}  // namespace
}  // namespace nocguard
