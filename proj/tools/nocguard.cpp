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


// nocguard command-line front end. Every subcommand accepts --config FILE (flat
// key = value text) and one flag per config key; flags override the file.
// Exit codes: 0 success, 1 error, 2 usage, 3 localization inconclusive.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nocguard/bench/dataset.hpp"
#include "nocguard/bench/metrics.hpp"
#include "nocguard/bench/pipeline.hpp"
#include "nocguard/cnn/model_io.hpp"
#include "nocguard/cnn/train.hpp"
#include "nocguard/error.hpp"
#include "nocguard/simulator.hpp"
#include "nocguard/telemetry.hpp"

namespace fs = std::filesystem;
using namespace nocguard;

namespace {

constexpr int kExitError = 1;
constexpr int kExitUsage = 2;
constexpr int kExitInconclusive = 3;

const std::vector<std::string> kScenarioKeys = {
    "radix",         "vcs_per_port",   "buffer_depth_flits", "flits_per_packet",     "seed",
    "pattern",       "normal_injection_rate", "attackers",   "target_victim",        "warmup_cycles",
    "run_cycles",    "sample_period_cycles",  "drain_cycles"};
const std::vector<std::string> kPipelineKeys = {"detector_model", "segmentor_model", "detection_threshold",
                                                "binarize_threshold", "vce", "quarantine",
                                                "max_rounds", "output_dir"};
const std::vector<std::string> kDatasetKeys = {
    "radix",         "patterns",       "scenarios_per_pattern", "max_attackers", "fir",
    "normal_injection_rate", "warmup_cycles", "windows_per_run", "sample_period_cycles",
    "train_fraction", "seed"};
const std::vector<std::string> kTrainKeys = {"learning_rate", "epochs", "batch_size", "seed",
                                             "train_fraction", "validation_fraction", "patience"};

// Config file plus per-key flag overrides for one subcommand.
struct KeyedOptions {
  std::string config;
  std::map<std::string, std::string> flags;

  void attach(CLI::App* app, const std::vector<std::string>& keys, const std::string& prefix = "") {
    for (const auto& k : keys) {
      if (flags.contains(prefix + k)) continue;
      app->add_option("--" + prefix + k, flags[prefix + k], "Overrides '" + k + "'");
    }
  }

  // Applies the file, then every flag that was given, through `set`.
  template <typename Setter>
  void apply(CLI::App* app, const std::vector<std::string>& keys, Setter set, const std::string& prefix = "") const {
    if (!config.empty())
      for (const auto& [k, v] : parse_key_values(read_text_file(config))) set(k, v);
    for (const auto& k : keys)
      if (app->count("--" + prefix + k) > 0) set(k, flags.at(prefix + k));
  }
};

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// ---------------------------------------------------------------------------

int cmd_simulate(CLI::App* app, const KeyedOptions& opt, const std::string& out_dir) {
  ScenarioConfig cfg;
  opt.apply(app, kScenarioKeys, [&](const std::string& k, const std::string& v) { set_scenario_key(cfg, k, v); });
  validate(cfg);
  const auto trace = run_scenario(cfg);
  auto show = [](const std::optional<double>& v) { return v ? fmt("%.3f", *v) : std::string("n/a"); };
  std::printf("delivered %zu packets over %zu windows\n", trace.delivered.size(), trace.windows.size());
  std::printf("mean latency normal %s malicious %s all %s cycles\n",
              show(average_latency(trace, TrafficClass::Normal)).c_str(),
              show(average_latency(trace, TrafficClass::Malicious)).c_str(),
              show(average_latency(trace, TrafficClass::All)).c_str());
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    const fs::path dir = out_dir;
    save_scenario(cfg, (dir / "scenario.txt").string());
    write_text_file((dir / "trace.csv").string(), trace_to_csv(trace));
    std::string vco, boc;
    for (const auto& snap : trace.windows) {
      for (const auto& f : build_frames(snap, FeatureKind::VCO)) vco += frame_to_csv(f);
      for (const auto& f : build_frames(snap, FeatureKind::BOC)) boc += frame_to_csv(f);
    }
    write_text_file((dir / "vco_frames.csv").string(), vco);
    write_text_file((dir / "boc_frames.csv").string(), boc);
  }
  return 0;
}

int cmd_gen_dataset(CLI::App* app, const KeyedOptions& opt, const std::string& out_dir, int threads) {
  DatasetSpec spec;
  opt.apply(app, kDatasetKeys, [&](const std::string& k, const std::string& v) { set_dataset_key(spec, k, v); });
  const auto plans = plan_dataset(spec);
  const auto data = generate_dataset(plans, threads);
  write_dataset(data, out_dir);
  write_text_file((fs::path(out_dir) / "spec.txt").string(), to_text(spec));
  int attack = 0, normal = 0, failed = 0;
  for (const auto& run : data.runs) {
    failed += !run.error.empty();
    for (const auto& w : run.windows) (w.attack ? attack : normal) += 1;
  }
  std::printf("%zu runs (%d failed), %d attack windows, %d normal windows -> %s\n", data.runs.size(), failed,
              attack, normal, out_dir.c_str());
  return 0;
}

cnn::TrainConfig train_config(CLI::App* app, const KeyedOptions& opt) {
  cnn::TrainConfig tc;
  opt.apply(app, kTrainKeys, [&](const std::string& k, const std::string& v) { set_train_key(tc, k, v); });
  cnn::validate(tc);
  return tc;
}

int cmd_train_detector(CLI::App* app, const KeyedOptions& opt, const std::string& dataset,
                       const std::string& out, const std::string& log, bool augment) {
  const auto tc = train_config(app, opt);
  const auto data = load_dataset(dataset);
  auto train = detector_samples(data, Split::Train);
  if (augment) train = mirror_augment(train);
  const auto res = cnn::train_detector(cnn::DetectorModel::initialized(data.radix, tc.seed), train, tc);
  cnn::save_model(res.model, out);
  if (!log.empty()) write_text_file(log, cnn::training_log_csv(res.log));

  std::vector<std::uint8_t> pred, truth;
  for (const auto& s : detector_samples(data, Split::Test)) {
    pred.push_back(cnn::detector_forward(res.model, s.frames) >= 0.5);
    truth.push_back(s.attack);
  }
  std::printf("trained on %zu samples, best epoch %d of %zu\n", train.size(), res.best_epoch, res.log.size());
  if (!pred.empty()) std::printf("%s\n", to_text(eval_metrics(pred, truth), "held-out").c_str());
  return 0;
}

// Mean Dice over nonempty masks plus pooled per-pixel counts.
MetricsReport segmentation_metrics(const cnn::SegmentorModel& model, std::span<const cnn::SegmentorSample> samples) {
  Confusion c;
  double dice_sum = 0.0;
  int nonempty = 0;
  for (const auto& s : samples) {
    const auto probs = cnn::segmentor_forward(model, s.frame);
    std::vector<std::uint8_t> p, t;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      p.push_back(probs[i] >= 0.5);
      t.push_back(s.mask[i] > 0.5);
    }
    c += binary_confusion(p, t);
    if (std::find(t.begin(), t.end(), 1) != t.end()) {
      dice_sum += cnn::dice(p, t);
      ++nonempty;
    }
  }
  auto m = metrics_from_counts(c);
  if (nonempty > 0) m.dice_mean = dice_sum / nonempty;
  return m;
}

int cmd_train_segmentor(CLI::App* app, const KeyedOptions& opt, const std::string& dataset,
                        const std::string& out, const std::string& log) {
  const auto tc = train_config(app, opt);
  const auto data = load_dataset(dataset);
  const auto train = segmentor_samples(data, Split::Train);
  const auto res = cnn::train_segmentor(cnn::SegmentorModel::initialized(data.radix, tc.seed), train, tc);
  cnn::save_model(res.model, out);
  if (!log.empty()) write_text_file(log, cnn::training_log_csv(res.log));
  std::printf("trained on %zu samples, best epoch %d of %zu\n", train.size(), res.best_epoch, res.log.size());
  const auto test = segmentor_samples(data, Split::Test);
  if (!test.empty()) std::printf("%s\n", to_text(segmentation_metrics(res.model, test), "held-out pixels").c_str());
  return 0;
}

int cmd_run_pipeline(CLI::App* app, const KeyedOptions& opt) {
  PipelineConfig cfg;
  auto all = kScenarioKeys;
  all.insert(all.end(), kPipelineKeys.begin(), kPipelineKeys.end());
  opt.apply(app, all, [&](const std::string& k, const std::string& v) {
    if (std::find(kPipelineKeys.begin(), kPipelineKeys.end(), k) != kPipelineKeys.end())
      set_pipeline_key(cfg, k, v);
    else
      set_scenario_key(cfg.scenario, k, v);
  });
  validate(cfg);
  const auto res = pipeline_run(cfg);
  for (const auto& r : res.reports) std::printf("%s\n", to_text(r).c_str());
  std::string named;
  for (NodeId a : res.named_attackers) named += (named.empty() ? "" : " ") + std::to_string(a);
  std::printf("attackers named: %s (rounds %d)\n", named.empty() ? "none" : named.c_str(), res.rounds_used);
  std::printf("%s\n%s\n", to_text(res.detection, "detection").c_str(),
              to_text(res.localization, "localization").c_str());
  if (res.inconclusive) {
    std::fprintf(stderr, "localization inconclusive: alarms raised but no attacker confirmed\n");
    return kExitInconclusive;
  }
  return 0;
}

int cmd_eval(const std::string& dataset, const std::string& split_name, const std::string& det_path,
             const std::string& seg_path, const std::string& out) {
  const auto data = load_dataset(dataset);
  const Split split = split_name == "train" ? Split::Train : Split::Test;
  std::string text;
  std::optional<cnn::DetectorModel> det;
  std::optional<cnn::SegmentorModel> seg;
  if (!det_path.empty()) det = cnn::load_detector(det_path, data.radix);
  if (!seg_path.empty()) seg = cnn::load_segmentor(seg_path, data.radix);

  if (det) {
    std::vector<std::uint8_t> pred, truth;
    for (const auto& s : detector_samples(data, split)) {
      pred.push_back(cnn::detector_forward(*det, s.frames) >= 0.5);
      truth.push_back(s.attack);
    }
    text += to_text(eval_metrics(pred, truth), "detection") + "\n";
  }
  if (seg) text += to_text(segmentation_metrics(*seg, segmentor_samples(data, split)), "segmentation") + "\n";
  if (det && seg) {
    // Per node over attack windows, through the whole detect -> localize chain.
    std::vector<std::vector<NodeId>> predicted, truth;
    for (const auto& run : data.runs) {
      if (run.plan.split != split) continue;
      for (const auto& w : run.windows) {
        if (!w.attack) continue;
        const auto a = analyze_window(*det, *seg, w.vco, w.boc, AnalysisOptions{});
        predicted.push_back(a.outcome ? a.outcome->report.victims : std::vector<NodeId>{});
        truth.push_back(w.victims);
      }
    }
    text += to_text(eval_metrics(std::span<const std::vector<NodeId>>(predicted),
                                 std::span<const std::vector<NodeId>>(truth), data.radix),
                    "localization") +
            "\n";
  }
  if (text.empty()) throw ConfigError("eval needs --detector and/or --segmentor");
  std::printf("%s", text.c_str());
  if (!out.empty()) write_text_file(out, text);
  return 0;
}

struct ExportArgs {
  std::string dataset;
  std::size_t run = 0;
  std::int64_t window = 0;
  std::string feature = "vco";
  std::string direction = "E";
  std::string format = "csv";
  bool normalize = false;
  std::string out;
};

int cmd_export_frame(CLI::App* app, const KeyedOptions& opt, const ExportArgs& a) {
  const FeatureKind kind = parse_feature_kind(a.feature);
  const Direction dir = parse_direction(a.direction);
  if (kind == FeatureKind::Mask) throw ConfigError("export-frame takes vco or boc");
  FeatureFrame frame;
  if (!a.dataset.empty()) {
    const auto data = load_dataset(a.dataset);
    if (a.run >= data.runs.size()) throw ConfigError("run index out of range");
    const auto& windows = data.runs[a.run].windows;
    if (a.window < 0 || static_cast<std::size_t>(a.window) >= windows.size())
      throw ConfigError("window index out of range");
    const auto& w = windows[static_cast<std::size_t>(a.window)];
    frame = (kind == FeatureKind::VCO ? w.vco : w.boc)[index_of(dir)];
  } else {
    ScenarioConfig cfg;
    opt.apply(app, kScenarioKeys, [&](const std::string& k, const std::string& v) { set_scenario_key(cfg, k, v); });
    validate(cfg);
    const auto trace = run_scenario(cfg);
    if (a.window < 0 || static_cast<std::size_t>(a.window) >= trace.windows.size())
      throw ConfigError("window index out of range");
    frame = build_frames(trace.windows[static_cast<std::size_t>(a.window)], kind)[index_of(dir)];
  }
  if (a.normalize && kind == FeatureKind::BOC) frame = normalize_boc(frame);
  export_frame(frame, parse_frame_format(a.format), a.out);
  std::printf("%s %s frame %dx%d -> %s\n", std::string(to_string(kind)).c_str(),
              std::string(to_string(dir)).c_str(), frame.rows, frame.cols, a.out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nocguard: NoC flooding detection and localization toolkit"};
  app.require_subcommand(1);

  // simulate
  KeyedOptions sim_opt;
  std::string sim_out;
  auto* sim = app.add_subcommand("simulate", "Run one scenario; print latency, optionally dump trace and frames");
  sim->add_option("--config", sim_opt.config, "Scenario file")->check(CLI::ExistingFile);
  sim->add_option("--out", sim_out, "Directory for scenario.txt, trace.csv and frame CSVs");
  sim_opt.attach(sim, kScenarioKeys);

  // gen-dataset
  KeyedOptions gen_opt;
  std::string gen_out;
  int threads = 1;
  auto* gen = app.add_subcommand("gen-dataset", "Generate a detector/segmentor dataset");
  gen->add_option("--config", gen_opt.config, "Dataset spec file")->check(CLI::ExistingFile);
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen->add_option("--threads", threads, "Concurrent simulations")->check(CLI::PositiveNumber);
  gen_opt.attach(gen, kDatasetKeys);

  // train-detector / train-segmentor
  KeyedOptions tdet_opt, tseg_opt;
  std::string tdet_data, tdet_out, tdet_log, tseg_data, tseg_out, tseg_log;
  bool no_augment = false;
  auto* tdet = app.add_subcommand("train-detector", "Train the VCO attack detector");
  tdet->add_option("--dataset", tdet_data, "Dataset directory")->required();
  tdet->add_option("--out", tdet_out, "Model file to write")->required();
  tdet->add_option("--log", tdet_log, "Per-epoch CSV log");
  tdet->add_option("--config", tdet_opt.config, "Training config file")->check(CLI::ExistingFile);
  tdet->add_flag("--no-augment", no_augment, "Skip mirror augmentation of the training windows");
  tdet_opt.attach(tdet, kTrainKeys);
  auto* tseg = app.add_subcommand("train-segmentor", "Train the BOC route segmentor");
  tseg->add_option("--dataset", tseg_data, "Dataset directory")->required();
  tseg->add_option("--out", tseg_out, "Model file to write")->required();
  tseg->add_option("--log", tseg_log, "Per-epoch CSV log");
  tseg->add_option("--config", tseg_opt.config, "Training config file")->check(CLI::ExistingFile);
  tseg_opt.attach(tseg, kTrainKeys);

  // run-pipeline
  KeyedOptions pipe_opt;
  auto* pipe = app.add_subcommand("run-pipeline", "Detect, localize and quarantine on a live simulation");
  pipe->add_option("--config", pipe_opt.config, "Pipeline config file")->check(CLI::ExistingFile);
  pipe_opt.attach(pipe, kScenarioKeys);
  pipe_opt.attach(pipe, kPipelineKeys);

  // eval
  std::string ev_data, ev_split = "test", ev_det, ev_seg, ev_out;
  auto* ev = app.add_subcommand("eval", "Score trained models on a dataset split");
  ev->add_option("--dataset", ev_data, "Dataset directory")->required();
  ev->add_option("--split", ev_split, "train or test")->check(CLI::IsMember({"train", "test"}));
  ev->add_option("--detector", ev_det, "Detector model");
  ev->add_option("--segmentor", ev_seg, "Segmentor model");
  ev->add_option("--out", ev_out, "Also write the metrics here");

  // export-frame
  KeyedOptions ex_opt;
  ExportArgs ex;
  auto* exf = app.add_subcommand("export-frame", "Write one feature frame as CSV or PGM");
  exf->add_option("--dataset", ex.dataset, "Take the frame from this dataset");
  exf->add_option("--run", ex.run, "Run index within the dataset");
  exf->add_option("--config", ex_opt.config, "Or simulate this scenario file")->check(CLI::ExistingFile);
  exf->add_option("--window", ex.window, "Window index");
  exf->add_option("--feature", ex.feature, "vco or boc");
  exf->add_option("--direction", ex.direction, "E, N, W or S");
  exf->add_option("--format", ex.format, "csv or pgm")->check(CLI::IsMember({"csv", "pgm"}));
  exf->add_flag("--normalize", ex.normalize, "Min-max scale BOC counts first");
  exf->add_option("--out", ex.out, "Output path")->required();
  ex_opt.attach(exf, kScenarioKeys);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitUsage;
  }

  try {
    if (*sim) return cmd_simulate(sim, sim_opt, sim_out);
    if (*gen) return cmd_gen_dataset(gen, gen_opt, gen_out, threads);
    if (*tdet) return cmd_train_detector(tdet, tdet_opt, tdet_data, tdet_out, tdet_log, !no_augment);
    if (*tseg) return cmd_train_segmentor(tseg, tseg_opt, tseg_data, tseg_out, tseg_log);
    if (*pipe) return cmd_run_pipeline(pipe, pipe_opt);
    if (*ev) return cmd_eval(ev_data, ev_split, ev_det, ev_seg, ev_out);
    if (*exf) return cmd_export_frame(exf, ex_opt, ex);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitError;
  }
  return kExitError;
}
