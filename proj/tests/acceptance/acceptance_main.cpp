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

// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and exits
// non-zero when any of them fails. Criteria 6-8 share one generated dataset and the
// two models trained on it; everything lands under --work-dir.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "nocguard/bench/dataset.hpp"
#include "nocguard/bench/metrics.hpp"
#include "nocguard/bench/pipeline.hpp"
#include "nocguard/cnn/gradcheck.hpp"
#include "nocguard/cnn/model_io.hpp"
#include "nocguard/cnn/train.hpp"
#include "nocguard/localization.hpp"
#include "nocguard/random.hpp"
#include "nocguard/simulator.hpp"

namespace fs = std::filesystem;
using namespace nocguard;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
  }

 private:
  std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Route walk written out here instead of calling xy_route: column first, then row.
// Returns (node, entry direction) for every router after the source.
std::vector<std::pair<NodeId, Direction>> walk(NodeId src, NodeId dst, int radix) {
  std::vector<std::pair<NodeId, Direction>> hops;
  int r = src / radix, c = src % radix;
  const int tr = dst / radix, tc = dst % radix;
  while (c != tc) {
    const bool east = tc > c;
    c += east ? 1 : -1;
    hops.emplace_back(r * radix + c, east ? Direction::W : Direction::E);
  }
  while (r != tr) {
    const bool north = tr > r;
    r += north ? 1 : -1;
    hops.emplace_back(r * radix + c, north ? Direction::S : Direction::N);
  }
  return hops;
}

std::vector<DirMask> oracle_masks(const std::vector<NodeId>& attackers, NodeId tv, int radix) {
  std::vector<std::vector<std::uint8_t>> bits(4, std::vector<std::uint8_t>(radix * radix, 0));
  for (NodeId a : attackers)
    for (auto [n, d] : walk(a, tv, radix)) bits[index_of(d)][n] = 1;
  std::vector<DirMask> masks;
  for (Direction d : kDirections) masks.push_back(make_dir_mask(d, radix, bits[index_of(d)]));
  return masks;
}

// ---------------------------------------------------------------------------

Verdict gradient_check() {
  Stopwatch sw;
  double worst = 0.0;
  int checks = 0;
  for (int radix : {8, 16}) {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      Rng rng(derive_seed(seed, radix, 0x9c));
      const cnn::Shape det_shape{4, radix, radix}, seg_shape{1, radix, radix};
      std::vector<cnn::DetectorSample> det_batch;
      std::vector<cnn::SegmentorSample> seg_batch;
      for (int i = 0; i < 2; ++i) {
        cnn::Tensor f(det_shape), s(seg_shape), m(seg_shape);
        for (auto& v : f.values()) v = rng.uniform();
        for (auto& v : s.values()) v = rng.uniform();
        for (auto& v : m.values()) v = rng.bernoulli(0.3) ? 1.0 : 0.0;
        det_batch.push_back({f, i == 0});
        seg_batch.push_back({s, m});
      }
      const auto det = cnn::grad_check(cnn::DetectorModel::initialized(radix, seed), det_batch);
      const auto seg = cnn::grad_check(cnn::SegmentorModel::initialized(radix, seed), seg_batch);
      worst = std::max({worst, det.max_relative_error, seg.max_relative_error});
      checks += 2;
    }
  }
  const double t = sw.seconds();
  return {worst < 1e-4 && t < 60.0,
          fmt("max rel err %.2e over %d checks (R 8 and 16, 20 seeds), %.1fs", worst, checks, t)};
}

Verdict fusion_union() {
  int failures = 0, trials = 0;
  Rng rng(4);
  for (int radix : {4, 16}) {
    const int n = radix * radix;
    for (int t = 0; t < 10000; ++t, ++trials) {
      const int count = 1 + static_cast<int>(rng.below(4));
      std::vector<DirMask> masks;
      for (int k = 0; k < count; ++k) {
        const double p = rng.uniform();
        std::vector<std::uint8_t> bits(n);
        for (auto& b : bits) b = rng.bernoulli(p);
        masks.push_back(make_dir_mask(kDirections[rng.below(4)], radix, bits));
      }
      std::set<NodeId> expected;
      std::vector<int> counts(n, 0);
      for (const auto& m : masks)
        for (int i = 0; i < n; ++i)
          if (m.mask[i]) {
            expected.insert(i);
            ++counts[i];
          }
      const auto fused = fuse(masks);
      bool ok = std::vector<NodeId>(expected.begin(), expected.end()) == fused.victims;
      for (int i = 0; i < n && ok; ++i) ok = fused.sum[i] == counts[i];
      failures += !ok;
    }
  }
  return {failures == 0, fmt("%d failures over %d mask sets (R 4 and 16)", failures, trials)};
}

Verdict tlm_exactness() {
  Stopwatch sw;
  constexpr int R = 8;
  int singles = 0, single_fail = 0, pairs = 0, pair_fail = 0;
  for (NodeId v = 0; v < R * R; ++v) {
    for (NodeId a = 0; a < R * R; ++a) {
      if (a == v) continue;
      for (bool use_vce : {false, true}) {
        const auto out = localize(oracle_masks({a}, v, R), R, use_vce);
        const bool ok = out.status == LocalizeStatus::Ok && out.report.target_victim == v &&
                        out.report.attackers == std::vector<NodeId>{a};
        single_fail += !ok;
      }
      ++singles;
    }
    // Opposite-side pairs: one attacker on each side of v in its row, or its column.
    const int row = v / R, col = v % R;
    std::vector<std::pair<NodeId, NodeId>> triples;
    for (int w = 0; w < col; ++w)
      for (int e = col + 1; e < R; ++e) triples.emplace_back(row * R + w, row * R + e);
    for (int s = 0; s < row; ++s)
      for (int n = row + 1; n < R; ++n) triples.emplace_back(s * R + col, n * R + col);
    for (auto [a1, a2] : triples) {
      for (bool use_vce : {false, true}) {
        const auto out = localize(oracle_masks({a1, a2}, v, R), R, use_vce);
        const bool ok = out.status == LocalizeStatus::Ok && out.report.target_victim == v &&
                        out.report.attackers == std::vector<NodeId>{std::min(a1, a2), std::max(a1, a2)};
        pair_fail += !ok;
      }
      ++pairs;
    }
  }
  const double t = sw.seconds();
  return {single_fail == 0 && pair_fail == 0 && singles == 4032 && t < 60.0,
          fmt("%d/%d single-attacker pairs and %d/%d two-attacker triples exact (with and without VCE), %.1fs",
              singles - single_fail / 2, singles, pairs - pair_fail / 2, pairs, t)};
}

Verdict vce_drop_one() {
  constexpr int R = 8;
  int cases = 0, failures = 0;
  for (NodeId v = 0; v < R * R; ++v) {
    for (NodeId a = 0; a < R * R; ++a) {
      if (a == v) continue;
      const auto hops = walk(a, v, R);
      std::vector<NodeId> full;
      DirSets full_sets;
      for (auto [n, d] : hops) {
        full.push_back(n);
        full_sets[index_of(d)].push_back(n);
      }
      std::sort(full.begin(), full.end());
      for (auto& s : full_sets) std::sort(s.begin(), s.end());
      // Interior: neither the first router after the attacker nor the target.
      for (std::size_t i = 1; i + 1 < hops.size(); ++i) {
        const NodeId drop = hops[i].first;
        auto victims = full;
        auto sets = full_sets;
        std::erase(victims, drop);
        std::erase(sets[index_of(hops[i].second)], drop);
        const auto res = vce(victims, sets, R);
        ++cases;
        failures += !(res.applied && res.victims == full && res.sets == full_sets);
      }
    }
  }
  return {failures == 0 && cases > 0, fmt("%d/%d dropped-node routes restored", cases - failures, cases)};
}

Verdict fir_latency() {
  Stopwatch sw;
  std::vector<double> lat;
  std::string curve;
  for (double fir : {0.0, 0.1, 0.3, 0.5, 0.7, 0.9}) {
    ScenarioConfig c;
    c.mesh.radix = 8;
    c.mesh.seed = 7;
    c.pattern = TrafficPattern::UniformRandom;
    c.normal_injection_rate = 0.02;
    if (fir > 0) c.attackers = {{63, fir}};
    c.target_victim = 0;
    c.run_cycles = 10000;
    c.drain_cycles = 1000000;
    const auto l = average_latency(run_scenario(c), TrafficClass::Normal);
    lat.push_back(l.value_or(0.0));
    curve += fmt("%s%.1f", curve.empty() ? "" : " ", lat.back());
  }
  bool increasing = true;
  for (std::size_t i = 1; i < lat.size(); ++i) increasing = increasing && lat[i] > lat[i - 1];
  const double ratio = lat.front() > 0 ? lat.back() / lat.front() : 0.0;
  const double t = sw.seconds();
  return {increasing && ratio >= 5.0 && t < 300.0,
          fmt("latency [%s] cycles, ratio %.1f, %.1fs", curve.c_str(), ratio, t)};
}

// ---------------------------------------------------------------------------
// Criteria 6-8 share these.

struct Trained {
  Dataset data;
  cnn::DetectorModel detector;
  cnn::SegmentorModel segmentor;
  double dataset_seconds = 0.0;
  double detector_seconds = 0.0;
  double segmentor_seconds = 0.0;
};

Verdict detection_gate(Trained& tr, const fs::path& dir, int threads) {
  const DatasetSpec spec;  // R 16, all six patterns, FIR 0.8
  Stopwatch sw;
  tr.data = generate_dataset(plan_dataset(spec), threads);
  tr.dataset_seconds = sw.seconds();
  write_dataset(tr.data, (dir / "dataset").string());

  int attack = 0, normal = 0, failed = 0;
  for (const auto& run : tr.data.runs) {
    failed += !run.error.empty();
    for (const auto& w : run.windows) (w.attack ? attack : normal) += 1;
  }
  const auto train = detector_samples(tr.data, Split::Train);
  const auto test = detector_samples(tr.data, Split::Test);
  const auto augmented = mirror_augment(train);

  Stopwatch tw;
  auto result = cnn::train_detector(cnn::DetectorModel::initialized(spec.radix, spec.seed), augmented,
                                    cnn::TrainConfig{});
  tr.detector_seconds = tw.seconds();
  tr.detector = std::move(result.model);
  cnn::save_model(tr.detector, (dir / "detector.model").string());
  write_text_file((dir / "detector_log.csv").string(), cnn::training_log_csv(result.log));

  std::vector<std::uint8_t> pred, truth;
  for (const auto& s : test) {
    pred.push_back(cnn::detector_forward(tr.detector, s.frames) >= 0.5);
    truth.push_back(s.attack);
  }
  const auto m = eval_metrics(pred, truth);
  const double total = tr.dataset_seconds + tr.detector_seconds;
  const bool pass = failed == 0 && attack >= 600 && normal >= 600 && m.accuracy.value_or(0) >= 0.90 &&
                    m.precision.value_or(0) >= 0.93 && total < 1800.0;
  return {pass, fmt("%d attack + %d normal windows, %zu held out: accuracy %s precision %s "
                    "(dataset %.0fs + training %.0fs)",
                    attack, normal, test.size(), format_metric(m.accuracy).c_str(),
                    format_metric(m.precision).c_str(), tr.dataset_seconds, tr.detector_seconds)};
}

Verdict localization_gate(Trained& tr, const fs::path& dir) {
  const auto train = segmentor_samples(tr.data, Split::Train);
  const auto test = segmentor_samples(tr.data, Split::Test);
  Stopwatch sw;
  auto result = cnn::train_segmentor(cnn::SegmentorModel::initialized(tr.data.radix, 1), train,
                                     cnn::TrainConfig{});
  tr.segmentor_seconds = sw.seconds();
  tr.segmentor = std::move(result.model);
  cnn::save_model(tr.segmentor, (dir / "segmentor.model").string());
  write_text_file((dir / "segmentor_log.csv").string(), cnn::training_log_csv(result.log));

  double dice_sum = 0.0;
  int nonempty = 0;
  for (const auto& s : test) {
    const auto truth_vals = s.mask.values();
    if (std::none_of(truth_vals.begin(), truth_vals.end(), [](double v) { return v > 0.5; })) continue;
    const auto probs = cnn::segmentor_forward(tr.segmentor, s.frame);
    std::vector<std::uint8_t> p, t;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      p.push_back(probs[i] >= 0.5);
      t.push_back(truth_vals[i] > 0.5);
    }
    dice_sum += cnn::dice(p, t);
    ++nonempty;
  }
  const double mean_dice = nonempty ? dice_sum / nonempty : 0.0;

  // Full detect -> segment -> localize chain on every held-out attack window.
  std::vector<std::vector<NodeId>> predicted, truth;
  int windows = 0;
  for (const auto& run : tr.data.runs) {
    if (run.plan.split != Split::Test || !run.plan.attack) continue;
    for (const auto& w : run.windows) {
      if (!w.attack) continue;
      ++windows;
      const auto a = analyze_window(tr.detector, tr.segmentor, w.vco, w.boc, AnalysisOptions{});
      predicted.push_back(a.outcome ? a.outcome->report.victims : std::vector<NodeId>{});
      truth.push_back(w.victims);
    }
  }
  const auto m = eval_metrics(std::span<const std::vector<NodeId>>(predicted),
                              std::span<const std::vector<NodeId>>(truth), tr.data.radix);
  return {mean_dice >= 0.85 && m.precision.value_or(0) >= 0.90,
          fmt("mean Dice %.4f over %d nonempty held-out masks; per-node victim precision %s recall %s "
              "over %d attack windows (segmentor training %.0fs)",
              mean_dice, nonempty, format_metric(m.precision).c_str(), format_metric(m.recall).c_str(),
              windows, tr.segmentor_seconds)};
}

// Fixed before looking at any outcome; not tuned.
constexpr std::uint64_t kPipelineSeed = 2718;

Verdict pipeline_gate(const Trained& tr, const fs::path& dir) {
  const DatasetSpec spec;
  const int R = spec.radix;
  int named = 0, false_alarms = 0, quiet_windows = 0, wrong_names = 0;
  std::string log;
  for (int i = 0; i < 20; ++i) {
    Rng rng(derive_seed(kPipelineSeed, i, 0xe2e));
    PipelineConfig cfg;
    auto& sc = cfg.scenario;
    sc.mesh.radix = R;
    sc.mesh.seed = derive_seed(kPipelineSeed, i);
    sc.pattern = kAllPatterns[i % std::size(kAllPatterns)];
    sc.normal_injection_rate = spec.normal_injection_rate;
    sc.warmup_cycles = spec.warmup_cycles;
    sc.sample_period_cycles = spec.sample_period_cycles;
    sc.run_cycles = spec.windows_per_run * spec.sample_period_cycles;
    sc.target_victim = static_cast<NodeId>(rng.below(R * R));
    NodeId a;
    do a = static_cast<NodeId>(rng.below(R * R));
    while (a == sc.target_victim);
    sc.attackers = {{a, spec.fir}};
    cfg.max_rounds = 3;

    const auto res = pipeline_run(cfg, tr.detector, tr.segmentor);
    const bool ok = std::binary_search(res.named_attackers.begin(), res.named_attackers.end(), a);
    named += ok;
    wrong_names += static_cast<int>(res.named_attackers.size()) - ok;
    log += fmt("scenario %2d %-15s attacker %3d target %3d rounds %d named %s\n", i,
               std::string(to_string(sc.pattern)).c_str(), a, sc.target_victim, res.rounds_used,
               ok ? "yes" : "no");

    PipelineConfig quiet = cfg;
    quiet.scenario.attackers.clear();
    const auto qr = pipeline_run(quiet, tr.detector, tr.segmentor);
    for (const auto& w : qr.windows) {
      ++quiet_windows;
      if (w.alarm) {
        ++false_alarms;
        log += fmt("  matched quiet run: alarm in window %lld (p %.3f)\n",
                   static_cast<long long>(w.window_index), w.probability);
      }
    }
  }
  write_text_file((dir / "pipeline_scenarios.txt").string(), log);
  return {named >= 17 && false_alarms == 0,
          fmt("attacker named in %d/20 scenarios (%d extra names); %d alarms over %d windows of 20 "
              "matched no-attack runs",
              named, wrong_names, false_alarms, quiet_windows)};
}

// ---------------------------------------------------------------------------

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Small end-to-end run: dataset files, both trained models, pipeline outputs.
void determinism_run(const fs::path& out, int threads) {
  fs::remove_all(out);
  fs::create_directories(out);
  DatasetSpec spec;
  spec.radix = 8;
  spec.scenarios_per_pattern = 2;
  spec.seed = 11;
  const auto data = generate_dataset(plan_dataset(spec), threads);
  write_dataset(data, (out / "dataset").string());

  cnn::TrainConfig tc;
  tc.epochs = 5;
  const auto det = cnn::train_detector(cnn::DetectorModel::initialized(8, 3),
                                       mirror_augment(detector_samples(data, Split::Train)), tc);
  const auto seg = cnn::train_segmentor(cnn::SegmentorModel::initialized(8, 3),
                                        segmentor_samples(data, Split::Train), tc);
  cnn::save_model(det.model, (out / "detector.model").string());
  cnn::save_model(seg.model, (out / "segmentor.model").string());
  write_text_file((out / "detector_log.csv").string(), cnn::training_log_csv(det.log));

  PipelineConfig cfg;
  cfg.scenario.mesh.radix = 8;
  cfg.scenario.mesh.seed = 5;
  cfg.scenario.normal_injection_rate = 0.0025;
  cfg.scenario.attackers = {{60, 0.8}};
  cfg.scenario.target_victim = 3;
  cfg.scenario.run_cycles = 5000;
  cfg.output_dir = (out / "pipeline").string();
  pipeline_run(cfg, det.model, seg.model);
  write_text_file((out / "trace.csv").string(), trace_to_csv(run_scenario(cfg.scenario)));
}

Verdict determinism(const fs::path& dir, int threads) {
  const auto a = dir / "a", b = dir / "b";
  determinism_run(a, 1);
  const int many = std::max(threads, 4);
  determinism_run(b, many);
  int files = 0, differing = 0;
  std::set<fs::path> seen;
  for (const auto& root : {a, b})
    for (const auto& e : fs::recursive_directory_iterator(root))
      if (e.is_regular_file()) seen.insert(fs::relative(e.path(), root));
  for (const auto& rel : seen) {
    ++files;
    const bool same = fs::exists(a / rel) && fs::exists(b / rel) && read_bytes(a / rel) == read_bytes(b / rel);
    differing += !same;
  }
  return {differing == 0 && files > 0,
          fmt("%d output files compared across two runs (1 and %d threads), %d differ", files, many,
              differing)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nocguard acceptance run"};
  std::string work_dir = "acceptance_work";
  std::vector<int> only;
  int threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  app.add_option("--work-dir", work_dir, "Directory for datasets, models and outputs");
  app.add_option("--only", only, "Run only these criteria (6-8 always run together)")->check(CLI::Range(1, 9));
  app.add_option("--threads", threads, "Simulation threads for dataset generation")->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);

  const fs::path dir = work_dir;
  try {
    fs::create_directories(dir);
  } catch (const fs::filesystem_error& e) {
    std::fprintf(stderr, "error: cannot create %s: %s\n", work_dir.c_str(), e.what());
    return 1;
  }
  auto wanted = [&](int c) { return only.empty() || std::find(only.begin(), only.end(), c) != only.end(); };

  Trained trained;
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"gradient check", gradient_check},
      {"fusion union", fusion_union},
      {"TLM exactness", tlm_exactness},
      {"VCE drop-one", vce_drop_one},
      {"FIR latency curve", fir_latency},
      {"detection gate", [&] { return detection_gate(trained, dir, threads); }},
      {"localization gate", [&] { return localization_gate(trained, dir); }},
      {"end-to-end pipeline", [&] { return pipeline_gate(trained, dir); }},
      {"determinism", [&] { return determinism(dir / "determinism", threads); }},
  };
  const bool need_models = wanted(6) || wanted(7) || wanted(8);

  int failed = 0;
  std::string summary;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!wanted(id) && !(need_models && id >= 6 && id <= 8)) continue;
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failed += !v.pass;
    const auto line = fmt("%s %d %s: ", v.pass ? "PASS" : "FAIL", id, criteria[i].first.c_str()) + v.detail;
    std::printf("%s\n", line.c_str());
    std::fflush(stdout);
    summary += line + "\n";
  }
  write_text_file((dir / "summary.txt").string(), summary);
  return failed == 0 ? 0 : 1;
}
