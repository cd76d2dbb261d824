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
#include <string>
#include <vector>

#include "nocguard/bench/metrics.hpp"
#include "nocguard/cnn/models.hpp"
#include "nocguard/localization.hpp"
#include "nocguard/scenario.hpp"
#include "nocguard/telemetry.hpp"

namespace nocguard {

struct PipelineConfig {
  ScenarioConfig scenario;
  std::string detector_model_path;
  std::string segmentor_model_path;
  double detection_threshold = 0.5;
  double binarize_threshold = kDefaultBinarizeThreshold;
  bool vce_enabled = true;
  bool quarantine_enabled = true;  // off: localize only, never touch the simulation
  int max_rounds = 3;
  std::string output_dir;          // empty: write nothing
};

void validate(const PipelineConfig& cfg);

/// Flat key-value text: every scenario key plus detector_model, segmentor_model,
/// detection_threshold, binarize_threshold, vce, quarantine, max_rounds, output_dir.
PipelineConfig parse_pipeline_config(const std::string& text);
void set_pipeline_key(PipelineConfig& cfg, const std::string& key, const std::string& value);
std::string to_text(const PipelineConfig& cfg);

struct AnalysisOptions {
  double detection_threshold = 0.5;
  double binarize_threshold = kDefaultBinarizeThreshold;
  bool vce_enabled = true;
  std::int64_t window_index = 0;
};

/// Everything the detect -> segment -> localize chain derived from one window.
struct WindowAnalysis {
  double probability = 0.0;
  bool alarm = false;
  std::vector<Direction> segmented_dirs;  // directions whose BOC frame was segmented
  bool attribution_fallback = false;      // no single channel re-triggered the detector
  std::vector<DirMask> masks;
  std::optional<LocalizeOutcome> outcome;  // set when alarm
};

/// Directions whose VCO channel alone (others zeroed) scores >= threshold.
std::vector<Direction> abnormal_directions(const cnn::DetectorModel& detector, const cnn::Tensor& vco_input,
                                           double threshold);

/// Runs the detector; on an alarm segments the abnormal directions (all four when
/// attribution finds none) and localizes.
WindowAnalysis analyze_window(const cnn::DetectorModel& detector, const cnn::SegmentorModel& segmentor,
                              const FrameSet& vco, const FrameSet& boc_raw, const AnalysisOptions& opt);

struct WindowResult {
  std::int64_t window_index = 0;
  double probability = 0.0;
  bool alarm = false;
  bool truth_attack = false;
  int round = 0;  // localization round run on this window, 0 for none
  std::string status;  // localization status or "-"
  std::vector<NodeId> predicted_victims;
  std::vector<NodeId> true_victims;
  std::vector<NodeId> quarantined;  // attackers quarantined after this window
};

struct PipelineResult {
  std::vector<LocalizationReport> reports;  // one per round that confirmed attackers
  std::vector<WindowResult> windows;
  std::vector<NodeId> named_attackers;      // sorted union over rounds
  int rounds_used = 0;
  bool inconclusive = false;  // alarms were raised but no attacker was ever confirmed
  MetricsReport detection;
  MetricsReport localization;  // per node, over alarmed attack windows
};

/// The periodic loop: warm up, then every window detect; on an alarm localize, and
/// quarantine confirmed attackers in the simulation, for at most max_rounds rounds.
/// Every window is still monitored after the rounds run out.
PipelineResult pipeline_run(const PipelineConfig& cfg, const cnn::DetectorModel& detector,
                            const cnn::SegmentorModel& segmentor);
/// Loads both models from the configured paths; a model built for another mesh size
/// is a ConfigError.
PipelineResult pipeline_run(const PipelineConfig& cfg);

/// reports.txt, reports.csv, windows.csv and metrics.txt under `dir`.
void write_pipeline_outputs(const PipelineResult& result, const std::string& dir);

enum class FrameFormat { Csv, Pgm };
FrameFormat parse_frame_format(const std::string& s);
/// Throws IoError naming the path on failure.
void export_frame(const FeatureFrame& frame, FrameFormat format, const std::string& path);

}  // namespace nocguard
