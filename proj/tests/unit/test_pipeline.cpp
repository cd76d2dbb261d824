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
#include <fstream>
#include <sstream>

#include "nocguard/bench/dataset.hpp"
#include "nocguard/bench/pipeline.hpp"
#include "nocguard/cnn/model_io.hpp"
#include "nocguard/error.hpp"

namespace nocguard {
namespace {

namespace fs = std::filesystem;

// Hand-set detector: filter c copies VCO channel c, and the dense layer fires once the
// pooled occupancy summed over the mesh reaches 0.2.
cnn::DetectorModel threshold_detector(int radix) {
  auto m = cnn::DetectorModel::zeros(radix);
  for (int c = 0; c < 4; ++c) m.conv.w(c, c, 1, 1) = 1.0;
  for (auto& w : m.dense.weight) w = 10.0;
  m.dense.bias[0] = -2.0;
  return m;
}

// Hand-set segmentor: marks pixels whose normalised BOC is at least 0.5.
cnn::SegmentorModel threshold_segmentor(int radix) {
  auto m = cnn::SegmentorModel::zeros(radix);
  m.conv1.w(0, 0, 1, 1) = 1.0;
  m.conv1.bias[0] = -0.3;
  m.conv2.w(0, 0, 1, 1) = 1.0;
  m.head.w(0, 0, 0, 0) = 40.0;
  m.head.bias[0] = -8.0;
  return m;
}

PipelineConfig flood_config(NodeId attacker, NodeId tv) {
  PipelineConfig cfg;
  cfg.scenario.mesh.radix = 8;
  cfg.scenario.normal_injection_rate = 0.0;
  cfg.scenario.attackers = {{attacker, 0.8}};
  cfg.scenario.target_victim = tv;
  cfg.scenario.warmup_cycles = 300;
  cfg.scenario.run_cycles = 3000;
  return cfg;
}

std::string read_all(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

TEST(Pipeline, ConfigParsing) {
  const auto cfg = parse_pipeline_config(
      "radix = 8\n"
      "detector_model = d.model\n"
      "segmentor_model = s.model\n"
      "detection_threshold = 0.7\n"
      "vce = false\n"
      "quarantine = no\n"
      "max_rounds = 5\n"
      "attackers = 63:0.8\n"
      "target_victim = 0\n");
  EXPECT_EQ(cfg.scenario.mesh.radix, 8);
  EXPECT_EQ(cfg.detector_model_path, "d.model");
  EXPECT_EQ(cfg.detection_threshold, 0.7);
  EXPECT_FALSE(cfg.vce_enabled);
  EXPECT_FALSE(cfg.quarantine_enabled);
  EXPECT_EQ(cfg.max_rounds, 5);
  EXPECT_EQ(to_text(parse_pipeline_config(to_text(cfg))), to_text(cfg));
  EXPECT_THROW(parse_pipeline_config("colour = red\n"), ConfigError);
  auto bad = cfg;
  bad.max_rounds = 0;
  EXPECT_THROW(validate(bad), ConfigError);
  bad = cfg;
  bad.detection_threshold = 1.5;
  EXPECT_THROW(validate(bad), ConfigError);
}

TEST(Pipeline, AbnormalDirectionsFollowChannels) {
  const auto det = threshold_detector(8);
  cnn::Tensor in({4, 8, 8});
  for (int x = 1; x < 6; ++x) in.at(index_of(Direction::E), 3, x) = 1.0;
  EXPECT_EQ(abnormal_directions(det, in, 0.5), (std::vector<Direction>{Direction::E}));
  for (int y = 0; y < 5; ++y) in.at(index_of(Direction::S), y, 2) = 1.0;
  EXPECT_EQ(abnormal_directions(det, in, 0.5), (std::vector<Direction>{Direction::E, Direction::S}));
}

TEST(Pipeline, NamesAndQuarantinesASingleAttacker) {
  const auto det = threshold_detector(8);
  const auto seg = threshold_segmentor(8);
  for (auto [a, tv] : std::vector<std::pair<NodeId, NodeId>>{{63, 0}, {7, 56}, {20, 23}, {45, 13}}) {
    const auto r = pipeline_run(flood_config(a, tv), det, seg);
    EXPECT_EQ(r.named_attackers, (std::vector<NodeId>{a})) << a << "->" << tv;
    ASSERT_FALSE(r.reports.empty());
    EXPECT_EQ(r.reports[0].target_victim, tv);
    EXPECT_EQ(r.windows[0].quarantined, (std::vector<NodeId>{a}));
    EXPECT_FALSE(r.inconclusive);
    // Once quarantined the flood is gone and later windows stay quiet.
    EXPECT_FALSE(r.windows.back().alarm);
    EXPECT_FALSE(r.windows.back().truth_attack);
  }
}

TEST(Pipeline, QuietRunRaisesNoAlarm) {
  auto cfg = flood_config(63, 0);
  cfg.scenario.attackers.clear();
  const auto r = pipeline_run(cfg, threshold_detector(8), threshold_segmentor(8));
  for (const auto& w : r.windows) EXPECT_FALSE(w.alarm);
  EXPECT_EQ(r.rounds_used, 0);
  EXPECT_TRUE(r.named_attackers.empty());
  EXPECT_FALSE(r.inconclusive);
}

TEST(Pipeline, WithoutQuarantineRoundsRunOut) {
  auto cfg = flood_config(63, 0);
  cfg.quarantine_enabled = false;
  cfg.max_rounds = 2;
  const auto r = pipeline_run(cfg, threshold_detector(8), threshold_segmentor(8));
  EXPECT_EQ(r.rounds_used, 2);
  EXPECT_EQ(r.windows.back().round, 0);
  EXPECT_TRUE(r.windows.back().alarm);  // still monitored after the last round
}

TEST(Pipeline, RejectsModelsForAnotherMesh) {
  EXPECT_THROW(pipeline_run(flood_config(63, 0), threshold_detector(16), threshold_segmentor(8)), ConfigError);
  EXPECT_THROW(pipeline_run(flood_config(63, 0), threshold_detector(8), threshold_segmentor(4)), ConfigError);
}

TEST(Pipeline, OutputsAreDeterministic) {
  const auto base = fs::temp_directory_path() / "nocguard_pipeline_test";
  fs::remove_all(base);
  fs::create_directories(base);
  cnn::save_model(threshold_detector(8), (base / "det.model").string());
  cnn::save_model(threshold_segmentor(8), (base / "seg.model").string());
  auto cfg = flood_config(7, 56);
  cfg.scenario.normal_injection_rate = 0.01;
  cfg.detector_model_path = (base / "det.model").string();
  cfg.segmentor_model_path = (base / "seg.model").string();
  cfg.output_dir = (base / "a").string();
  pipeline_run(cfg);
  cfg.output_dir = (base / "b").string();
  pipeline_run(cfg);
  for (const char* f : {"reports.txt", "reports.csv", "windows.csv", "metrics.txt"}) {
    ASSERT_TRUE(fs::exists(base / "a" / f)) << f;
    EXPECT_EQ(read_all(base / "a" / f), read_all(base / "b" / f)) << f;
  }
  cfg.detector_model_path = (base / "missing.model").string();
  EXPECT_THROW(pipeline_run(cfg), IoError);
  fs::remove_all(base);
}

TEST(Pipeline, ExportFrame) {
  const auto dir = fs::temp_directory_path() / "nocguard_export_test";
  fs::create_directories(dir);
  auto f = FeatureFrame::zeros(Direction::W, FeatureKind::VCO, 4, 2);
  f.values[0] = 0.5;
  export_frame(f, parse_frame_format("csv"), (dir / "f.csv").string());
  EXPECT_EQ(read_frame_csv((dir / "f.csv").string()).values, f.values);
  export_frame(f, parse_frame_format("pgm"), (dir / "f.pgm").string());
  EXPECT_EQ(read_all(dir / "f.pgm"), frame_to_pgm(f));
  EXPECT_THROW(parse_frame_format("png"), ConfigError);
  fs::remove_all(dir);
}

}  // namespace
}  // namespace nocguard
