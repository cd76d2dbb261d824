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
#include <span>
#include <string>
#include <vector>

#include "nocguard/cnn/train.hpp"
#include "nocguard/scenario.hpp"
#include "nocguard/telemetry.hpp"

namespace nocguard {

/// Recipe for a detector/segmentor training corpus: for every traffic pattern a set
/// of random attack scenarios (attackers and target drawn at random), each paired
/// with a no-attack run that shares its seed and therefore its background traffic.
struct DatasetSpec {
  int radix = 16;
  std::vector<TrafficPattern> patterns{std::begin(kAllPatterns), std::end(kAllPatterns)};
  int scenarios_per_pattern = 100;
  int max_attackers = 2;  // scenario i gets 1 + i % max_attackers attackers
  double fir = 0.8;
  double normal_injection_rate = 0.0025;
  std::int64_t warmup_cycles = 1000;
  std::int64_t windows_per_run = 3;
  std::int64_t sample_period_cycles = 1000;
  double train_fraction = 0.8;  // of scenario pairs; the rest is held out
  std::uint64_t seed = 1;
};

/// Flat key-value form of a DatasetSpec. Keys are the field names; `patterns` is a
/// comma list of pattern names or `all`. Unknown keys are a ConfigError.
void set_dataset_key(DatasetSpec& spec, const std::string& key, const std::string& value);
DatasetSpec parse_dataset_spec(const std::string& text);
std::string to_text(const DatasetSpec& spec);

/// Same for the trainer: learning_rate, epochs, batch_size, seed, train_fraction,
/// validation_fraction, patience.
void set_train_key(cnn::TrainConfig& cfg, const std::string& key, const std::string& value);

enum class Split { Train, Test };

struct RunPlan {
  ScenarioConfig scenario;
  int pair = 0;         // attack run and its matched no-attack run share this
  bool attack = false;  // false for the matched baseline
  Split split = Split::Train;
};

/// Throws ConfigError on an empty or inconsistent spec.
std::vector<RunPlan> plan_dataset(const DatasetSpec& spec);

struct WindowRecord {
  std::int64_t window_index = 0;
  bool attack = false;
  FrameSet vco;     // raw occupancy ratios
  FrameSet boc;     // raw counts, normalised on use
  DirMasks masks;   // ground-truth route masks, R x R per direction
  std::vector<NodeId> victims;  // ground-truth route nodes (target included)
};

struct RunRecord {
  RunPlan plan;
  std::string error;  // empty when the simulation succeeded
  std::vector<WindowRecord> windows;
};

struct Dataset {
  int radix = 0;
  std::vector<RunRecord> runs;
};

/// Simulates one run. Exceptions are caught and stored in `error`.
RunRecord simulate_run(const RunPlan& plan);

/// Runs every plan; `threads` > 1 simulates independent runs concurrently. The result
/// is identical for any thread count.
Dataset generate_dataset(std::span<const RunPlan> plans, int threads = 1);

/// Writes manifest.txt plus per-run scenario, label and frame files. Throws IoError
/// when `out_dir` cannot be created or written.
void write_dataset(const Dataset& data, const std::string& out_dir);
/// Reads a directory written by write_dataset (runs that failed have no windows).
Dataset load_dataset(const std::string& dir);

/// 4 x R x R detector input: the four raw VCO frames padded to squares.
cnn::Tensor detector_input(const FrameSet& vco);
/// 1 x R x R segmentor input: min-max normalised BOC frame padded to a square.
cnn::Tensor segmentor_input(const FeatureFrame& boc_raw);

std::vector<cnn::DetectorSample> detector_samples(const Dataset& data, Split split);
/// One sample per direction of every attack window.
std::vector<cnn::SegmentorSample> segmentor_samples(const Dataset& data, Split split);

/// The samples followed by their mirror images: east-west (E and W channels swap),
/// north-south (N and S swap) and both. A mirrored XY route is again an XY route.
std::vector<cnn::DetectorSample> mirror_augment(std::span<const cnn::DetectorSample> samples);

std::string to_string(Split s);

}  // namespace nocguard
