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

#include "nocguard/bench/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <set>

#include "nocguard/bench/dataset.hpp"
#include "nocguard/cnn/model_io.hpp"
#include "nocguard/error.hpp"
#include "nocguard/simulator.hpp"
#include "../detail/parse.hpp"

namespace nocguard {
namespace {

std::string join(const std::vector<NodeId>& ids) {
  std::string s;
  for (std::size_t i = 0; i < ids.size(); ++i) s += (i ? " " : "") + std::to_string(ids[i]);
  return s;
}

std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void validate(const PipelineConfig& cfg) {
  validate(cfg.scenario);
  if (cfg.max_rounds < 1) throw ConfigError("max_rounds must be >= 1");
  if (!(cfg.detection_threshold >= 0.0 && cfg.detection_threshold <= 1.0)) {
    throw ConfigError("detection_threshold must lie in [0,1]");
  }
  if (!(cfg.binarize_threshold >= 0.0 && cfg.binarize_threshold <= 1.0)) {
    throw ConfigError("binarize_threshold must lie in [0,1]");
  }
}

void set_pipeline_key(PipelineConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "detector_model") cfg.detector_model_path = value;
  else if (key == "segmentor_model") cfg.segmentor_model_path = value;
  else if (key == "detection_threshold") cfg.detection_threshold = detail::parse_number<double>(key, value);
  else if (key == "binarize_threshold") cfg.binarize_threshold = detail::parse_number<double>(key, value);
  else if (key == "vce") cfg.vce_enabled = detail::parse_bool(key, value);
  else if (key == "quarantine") cfg.quarantine_enabled = detail::parse_bool(key, value);
  else if (key == "max_rounds") cfg.max_rounds = detail::parse_number<int>(key, value);
  else if (key == "output_dir") cfg.output_dir = value;
  else set_scenario_key(cfg.scenario, key, value);
}

PipelineConfig parse_pipeline_config(const std::string& text) {
  PipelineConfig cfg;
  for (const auto& [k, v] : parse_key_values(text)) set_pipeline_key(cfg, k, v);
  return cfg;
}

std::string to_text(const PipelineConfig& cfg) {
  std::string s = to_text(cfg.scenario);
  s += "detector_model = " + cfg.detector_model_path + "\n";
  s += "segmentor_model = " + cfg.segmentor_model_path + "\n";
  s += "detection_threshold = " + fmt17(cfg.detection_threshold) + "\n";
  s += "binarize_threshold = " + fmt17(cfg.binarize_threshold) + "\n";
  s += std::string("vce = ") + (cfg.vce_enabled ? "true" : "false") + "\n";
  s += std::string("quarantine = ") + (cfg.quarantine_enabled ? "true" : "false") + "\n";
  s += "max_rounds = " + std::to_string(cfg.max_rounds) + "\n";
  s += "output_dir = " + cfg.output_dir + "\n";
  return s;
}

std::vector<Direction> abnormal_directions(const cnn::DetectorModel& detector, const cnn::Tensor& vco_input,
                                           double threshold) {
  std::vector<Direction> out;
  for (auto d : kDirections) {
    cnn::Tensor only(vco_input.shape(), 0.0);
    const auto src = vco_input.channel(index_of(d));
    std::copy(src.begin(), src.end(), only.channel(index_of(d)).begin());
    if (cnn::detector_forward(detector, only) >= threshold) out.push_back(d);
  }
  return out;
}

WindowAnalysis analyze_window(const cnn::DetectorModel& detector, const cnn::SegmentorModel& segmentor,
                              const FrameSet& vco, const FrameSet& boc_raw, const AnalysisOptions& opt) {
  WindowAnalysis a;
  const int R = vco[0].radix;
  const auto input = detector_input(vco);
  a.probability = cnn::detector_forward(detector, input);
  a.alarm = a.probability >= opt.detection_threshold;
  if (!a.alarm) return a;

  a.segmented_dirs = abnormal_directions(detector, input, opt.detection_threshold);
  if (a.segmented_dirs.empty()) {
    a.attribution_fallback = true;
    a.segmented_dirs.assign(kDirections.begin(), kDirections.end());
  }
  for (auto d : a.segmented_dirs) {
    const auto probs = cnn::segmentor_forward(segmentor, segmentor_input(boc_raw[static_cast<std::size_t>(index_of(d))]));
    a.masks.push_back(binarize_frame(probs.values(), d, R, opt.binarize_threshold));
  }
  a.outcome = localize(a.masks, R, opt.vce_enabled, opt.window_index);
  return a;
}

PipelineResult pipeline_run(const PipelineConfig& cfg, const cnn::DetectorModel& detector,
                            const cnn::SegmentorModel& segmentor) {
  validate(cfg);
  const auto& sc = cfg.scenario;
  const int R = sc.mesh.radix;
  if (detector.radix != R || segmentor.radix != R) {
    throw ConfigError("models were built for a " + std::to_string(detector.radix) + "/" +
                      std::to_string(segmentor.radix) + " mesh, scenario is " + std::to_string(R));
  }

  PipelineResult res;
  Simulator sim(sc);
  sim.run(sc.warmup_cycles);
  sim.reset_window_counters();

  std::vector<NodeId> quarantined;
  std::set<NodeId> named;
  std::vector<std::uint8_t> det_pred, det_truth;
  std::vector<std::vector<NodeId>> loc_pred, loc_truth;

  const auto windows = sc.run_cycles / sc.sample_period_cycles;
  for (std::int64_t w = 0; w < windows; ++w) {
    sim.run(sc.sample_period_cycles);
    const auto snap = sim.snapshot(w);
    sim.reset_window_counters();

    WindowResult wr;
    wr.window_index = w;
    wr.truth_attack = window_is_attack(snap);
    const auto truth = ground_truth_masks(sc, quarantined);
    if (wr.truth_attack) wr.true_victims = truth.victims;
    wr.status = "-";

    const bool may_localize = res.rounds_used < cfg.max_rounds;
    AnalysisOptions opt{cfg.detection_threshold, cfg.binarize_threshold, cfg.vce_enabled, w};
    const auto vco = build_frames(snap, FeatureKind::VCO);
    if (may_localize) {
      const auto a = analyze_window(detector, segmentor, vco, build_frames(snap, FeatureKind::BOC), opt);
      wr.probability = a.probability;
      wr.alarm = a.alarm;
      if (a.alarm) {
        wr.round = ++res.rounds_used;
        auto outcome = *a.outcome;
        wr.status = to_string(outcome.status);
        wr.predicted_victims = outcome.report.victims;
        if (wr.truth_attack && truth.attack) {
          loc_pred.push_back(wr.predicted_victims);
          loc_truth.push_back(wr.true_victims);
        }
        if (outcome.status == LocalizeStatus::Ok) {
          outcome.report.rounds_used = wr.round;
          for (NodeId n : outcome.report.attackers) {
            named.insert(n);
            if (cfg.quarantine_enabled && !sim.is_quarantined(n)) {
              sim.quarantine(n);
              quarantined.push_back(n);
              wr.quarantined.push_back(n);
            }
          }
          res.reports.push_back(outcome.report);
        }
      }
    } else {
      wr.probability = cnn::detector_forward(detector, detector_input(vco));
      wr.alarm = wr.probability >= cfg.detection_threshold;
    }
    det_pred.push_back(wr.alarm);
    det_truth.push_back(wr.truth_attack);
    res.windows.push_back(std::move(wr));
  }

  res.named_attackers.assign(named.begin(), named.end());
  res.inconclusive = res.rounds_used > 0 && named.empty();
  res.detection = eval_metrics(det_pred, det_truth);
  res.localization = eval_metrics(loc_pred, loc_truth, R);

  if (!cfg.output_dir.empty()) write_pipeline_outputs(res, cfg.output_dir);
  return res;
}

PipelineResult pipeline_run(const PipelineConfig& cfg) {
  validate(cfg);
  const int R = cfg.scenario.mesh.radix;
  const auto detector = cnn::load_detector(cfg.detector_model_path, R);
  const auto segmentor = cnn::load_segmentor(cfg.segmentor_model_path, R);
  return pipeline_run(cfg, detector, segmentor);
}

void write_pipeline_outputs(const PipelineResult& result, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError(dir, "cannot create output directory");

  std::string text, csv = report_csv_header() + "\n";
  for (const auto& r : result.reports) {
    text += to_text(r) + "\n";
    csv += to_csv_line(r) + "\n";
  }
  write_text_file((fs::path(dir) / "reports.txt").string(), text);
  write_text_file((fs::path(dir) / "reports.csv").string(), csv);

  std::string win = "window,probability,alarm,truth,round,status,predicted_victims,true_victims,quarantined\n";
  for (const auto& w : result.windows) {
    win += std::to_string(w.window_index) + "," + fmt17(w.probability) + "," + (w.alarm ? "1" : "0") + "," +
           (w.truth_attack ? "1" : "0") + "," + std::to_string(w.round) + "," + w.status + "," +
           join(w.predicted_victims) + "," + join(w.true_victims) + "," + join(w.quarantined) + "\n";
  }
  write_text_file((fs::path(dir) / "windows.csv").string(), win);

  std::string m;
  m += to_text(result.detection, "detection") + "\n";
  m += to_text(result.localization, "localization") + "\n";
  m += "rounds_used " + std::to_string(result.rounds_used) + "\n";
  m += "named_attackers " + (result.named_attackers.empty() ? std::string("none") : join(result.named_attackers)) + "\n";
  m += std::string("inconclusive ") + (result.inconclusive ? "yes" : "no") + "\n";
  write_text_file((fs::path(dir) / "metrics.txt").string(), m);
}

FrameFormat parse_frame_format(const std::string& s) {
  if (s == "csv") return FrameFormat::Csv;
  if (s == "pgm") return FrameFormat::Pgm;
  throw ConfigError("unknown frame format '" + s + "' (csv|pgm)");
}

void export_frame(const FeatureFrame& frame, FrameFormat format, const std::string& path) {
  if (format == FrameFormat::Csv) write_frame_csv(frame, path);
  else write_frame_pgm(frame, path);
}

}  // namespace nocguard
