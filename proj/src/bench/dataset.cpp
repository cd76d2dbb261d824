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

#include "nocguard/bench/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "nocguard/error.hpp"
#include "nocguard/random.hpp"
#include "nocguard/simulator.hpp"
#include "../detail/parse.hpp"

namespace nocguard {
namespace {

namespace fs = std::filesystem;

constexpr std::uint64_t kPlanSalt = 0x61747461636b;  // "attack"
constexpr std::uint64_t kSplitSalt = 0x73706c6974;   // "split"

std::string run_stem(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "run_%03zu", i);
  return buf;
}

FeatureFrame mask_frame(const std::vector<std::uint8_t>& mask, Direction d, int radix, std::int64_t window) {
  std::vector<double> grid(mask.begin(), mask.end());
  return crop_from_square(grid, d, FeatureKind::Mask, radix, window);
}

std::vector<std::uint8_t> mask_from_frame(const FeatureFrame& f) {
  const auto grid = pad_to_square(f);
  std::vector<std::uint8_t> out(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) out[i] = grid[i] >= 0.5 ? 1 : 0;
  return out;
}

std::vector<NodeId> victims_from_masks(const DirMasks& masks) {
  std::set<NodeId> s;
  for (const auto& m : masks) {
    for (std::size_t i = 0; i < m.size(); ++i) {
      if (m[i]) s.insert(static_cast<NodeId>(i));
    }
  }
  return {s.begin(), s.end()};
}

}  // namespace

void set_dataset_key(DatasetSpec& spec, const std::string& key, const std::string& value) {
  using detail::parse_number;
  if (key == "radix") spec.radix = parse_number<int>(key, value);
  else if (key == "patterns") {
    spec.patterns.clear();
    if (value == "all") {
      spec.patterns.assign(std::begin(kAllPatterns), std::end(kAllPatterns));
      return;
    }
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) spec.patterns.push_back(parse_pattern(detail::trim(item)));
  } else if (key == "scenarios_per_pattern") spec.scenarios_per_pattern = parse_number<int>(key, value);
  else if (key == "max_attackers") spec.max_attackers = parse_number<int>(key, value);
  else if (key == "fir") spec.fir = parse_number<double>(key, value);
  else if (key == "normal_injection_rate") spec.normal_injection_rate = parse_number<double>(key, value);
  else if (key == "warmup_cycles") spec.warmup_cycles = parse_number<std::int64_t>(key, value);
  else if (key == "windows_per_run") spec.windows_per_run = parse_number<std::int64_t>(key, value);
  else if (key == "sample_period_cycles") spec.sample_period_cycles = parse_number<std::int64_t>(key, value);
  else if (key == "train_fraction") spec.train_fraction = parse_number<double>(key, value);
  else if (key == "seed") spec.seed = parse_number<std::uint64_t>(key, value);
  else throw ConfigError("unknown dataset key '" + key + "'");
}

DatasetSpec parse_dataset_spec(const std::string& text) {
  DatasetSpec spec;
  for (const auto& [k, v] : parse_key_values(text)) set_dataset_key(spec, k, v);
  plan_dataset(spec);  // validation only
  return spec;
}

std::string to_text(const DatasetSpec& spec) {
  std::ostringstream s;
  s.precision(17);
  s << "radix = " << spec.radix << "\npatterns = ";
  for (std::size_t i = 0; i < spec.patterns.size(); ++i) s << (i ? "," : "") << to_string(spec.patterns[i]);
  s << "\nscenarios_per_pattern = " << spec.scenarios_per_pattern << "\nmax_attackers = " << spec.max_attackers
    << "\nfir = " << spec.fir << "\nnormal_injection_rate = " << spec.normal_injection_rate
    << "\nwarmup_cycles = " << spec.warmup_cycles << "\nwindows_per_run = " << spec.windows_per_run
    << "\nsample_period_cycles = " << spec.sample_period_cycles << "\ntrain_fraction = " << spec.train_fraction
    << "\nseed = " << spec.seed << "\n";
  return s.str();
}

void set_train_key(cnn::TrainConfig& cfg, const std::string& key, const std::string& value) {
  using detail::parse_number;
  if (key == "learning_rate") cfg.learning_rate = parse_number<double>(key, value);
  else if (key == "epochs") cfg.epochs = parse_number<int>(key, value);
  else if (key == "batch_size") cfg.batch_size = parse_number<int>(key, value);
  else if (key == "seed") cfg.seed = parse_number<std::uint64_t>(key, value);
  else if (key == "train_fraction") cfg.train_fraction = parse_number<double>(key, value);
  else if (key == "validation_fraction") cfg.validation_fraction = parse_number<double>(key, value);
  else if (key == "patience") cfg.patience = parse_number<int>(key, value);
  else throw ConfigError("unknown training key '" + key + "'");
}

std::string to_string(Split s) { return s == Split::Train ? "train" : "test"; }

std::vector<RunPlan> plan_dataset(const DatasetSpec& spec) {
  if (spec.patterns.empty()) throw ConfigError("dataset needs at least one traffic pattern");
  if (spec.scenarios_per_pattern < 1) throw ConfigError("scenarios_per_pattern must be >= 1");
  if (spec.max_attackers < 1) throw ConfigError("max_attackers must be >= 1");
  if (spec.windows_per_run < 1) throw ConfigError("windows_per_run must be >= 1");
  if (!(spec.train_fraction > 0.0 && spec.train_fraction <= 1.0)) {
    throw ConfigError("train_fraction must lie in (0,1]");
  }
  const int nodes = spec.radix * spec.radix;
  if (spec.max_attackers + 1 > nodes) throw ConfigError("mesh too small for the requested attackers");
  for (auto p : spec.patterns) check_pattern_radix(p, spec.radix);

  std::vector<RunPlan> plans;
  int pair = 0;
  for (auto pattern : spec.patterns) {
    for (int i = 0; i < spec.scenarios_per_pattern; ++i, ++pair) {
      Rng rng(derive_seed(spec.seed, static_cast<std::uint64_t>(pair), kPlanSalt));
      ScenarioConfig sc;
      sc.mesh.radix = spec.radix;
      sc.mesh.seed = derive_seed(spec.seed, static_cast<std::uint64_t>(pair));
      sc.pattern = pattern;
      sc.normal_injection_rate = spec.normal_injection_rate;
      sc.warmup_cycles = spec.warmup_cycles;
      sc.sample_period_cycles = spec.sample_period_cycles;
      sc.run_cycles = spec.windows_per_run * spec.sample_period_cycles;
      sc.target_victim = static_cast<NodeId>(rng.below(static_cast<std::uint64_t>(nodes)));
      const int count = 1 + i % spec.max_attackers;
      std::set<NodeId> taken{sc.target_victim};
      while (static_cast<int>(sc.attackers.size()) < count) {
        const auto a = static_cast<NodeId>(rng.below(static_cast<std::uint64_t>(nodes)));
        if (taken.insert(a).second) sc.attackers.push_back({a, spec.fir});
      }
      validate(sc);

      RunPlan attack{sc, pair, true, Split::Train};
      RunPlan normal = attack;
      normal.attack = false;
      normal.scenario.attackers.clear();
      plans.push_back(attack);
      plans.push_back(normal);
    }
  }

  // Split by pair so a baseline never lands on the other side of its attack run.
  std::vector<int> pairs(static_cast<std::size_t>(pair));
  for (int i = 0; i < pair; ++i) pairs[static_cast<std::size_t>(i)] = i;
  Rng split_rng(derive_seed(spec.seed, 0, kSplitSalt));
  split_rng.shuffle(pairs.begin(), pairs.end());
  auto train = static_cast<int>(std::lround(spec.train_fraction * pair));
  if (spec.train_fraction < 1.0) train = std::min(train, pair - 1);
  train = std::max(train, 1);
  std::vector<Split> split_of(static_cast<std::size_t>(pair), Split::Test);
  for (int i = 0; i < train; ++i) split_of[static_cast<std::size_t>(pairs[static_cast<std::size_t>(i)])] = Split::Train;
  for (auto& p : plans) p.split = split_of[static_cast<std::size_t>(p.pair)];
  return plans;
}

RunRecord simulate_run(const RunPlan& plan) {
  RunRecord rec;
  rec.plan = plan;
  try {
    const auto trace = run_scenario(plan.scenario);
    const auto truth = ground_truth_masks(plan.scenario);
    ScenarioConfig quiet = plan.scenario;
    quiet.attackers.clear();
    const auto empty = ground_truth_masks(quiet);
    for (const auto& snap : trace.windows) {
      WindowRecord w;
      w.window_index = snap.window_index;
      w.attack = window_is_attack(snap);
      w.vco = build_frames(snap, FeatureKind::VCO);
      w.boc = build_frames(snap, FeatureKind::BOC);
      w.masks = w.attack ? truth.masks : empty.masks;
      w.victims = victims_from_masks(w.masks);
      rec.windows.push_back(std::move(w));
    }
  } catch (const std::exception& e) {
    rec.error = e.what();
    rec.windows.clear();
  }
  return rec;
}

Dataset generate_dataset(std::span<const RunPlan> plans, int threads) {
  Dataset data;
  data.radix = plans.empty() ? 0 : plans.front().scenario.mesh.radix;
  for (const auto& p : plans) {
    if (p.scenario.mesh.radix != data.radix) throw ConfigError("dataset runs must share one mesh size");
  }
  data.runs.resize(plans.size());
  const auto workers = static_cast<std::size_t>(std::max(1, threads));
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < workers; ++t) {
    pool.emplace_back([&, t] {
      for (std::size_t i = t; i < plans.size(); i += workers) data.runs[i] = simulate_run(plans[i]);
    });
  }
  for (auto& th : pool) th.join();
  return data;
}

void write_dataset(const Dataset& data, const std::string& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir)) throw IoError(out_dir, "cannot create dataset directory");

  std::ostringstream manifest;
  manifest << "# nocguard dataset manifest\nformat 1\nradix " << data.radix << "\nruns " << data.runs.size() << '\n';
  for (std::size_t i = 0; i < data.runs.size(); ++i) {
    const auto& run = data.runs[i];
    const auto stem = run_stem(i);
    save_scenario(run.plan.scenario, (fs::path(out_dir) / (stem + ".scenario")).string());
    std::string labels = "window,attack\n";
    std::string frames;
    std::int64_t attack_windows = 0;
    for (const auto& w : run.windows) {
      labels += std::to_string(w.window_index) + ',' + (w.attack ? "1" : "0") + '\n';
      attack_windows += w.attack;
      for (const auto& f : w.vco) frames += frame_to_csv(f);
      for (const auto& f : w.boc) frames += frame_to_csv(f);
      for (auto d : kDirections) {
        frames += frame_to_csv(mask_frame(w.masks[static_cast<std::size_t>(index_of(d))], d, data.radix, w.window_index));
      }
    }
    write_text_file((fs::path(out_dir) / (stem + ".labels.csv")).string(), labels);
    write_text_file((fs::path(out_dir) / (stem + ".frames.csv")).string(), frames);
    manifest << "run " << i << " pair " << run.plan.pair << " kind " << (run.plan.attack ? "attack" : "normal")
             << " split " << to_string(run.plan.split) << " windows " << run.windows.size() << " attack_windows "
             << attack_windows << " stem " << stem << " status " << (run.error.empty() ? "ok" : "error");
    if (!run.error.empty()) {
      std::string msg = run.error;
      std::replace(msg.begin(), msg.end(), '\n', ' ');
      manifest << " message " << msg;
    }
    manifest << '\n';
  }
  write_text_file((fs::path(out_dir) / "manifest.txt").string(), manifest.str());
}

Dataset load_dataset(const std::string& dir) {
  const auto manifest_path = (fs::path(dir) / "manifest.txt").string();
  std::istringstream in(read_text_file(manifest_path));
  Dataset data;
  std::string line;
  std::size_t declared = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "format") {
      int v = 0;
      ls >> v;
      if (v != 1) throw IntegrityError(manifest_path + ": unsupported format " + std::to_string(v));
    } else if (key == "radix") {
      ls >> data.radix;
    } else if (key == "runs") {
      ls >> declared;
    } else if (key == "run") {
      RunRecord rec;
      std::size_t index = 0;
      std::string k, v, stem, status, kind, split;
      std::size_t windows = 0;
      ls >> index;
      while (ls >> k) {
        if (k == "message") {
          std::getline(ls, rec.error);
          if (!rec.error.empty() && rec.error[0] == ' ') rec.error.erase(0, 1);
          break;
        }
        if (!(ls >> v)) throw IntegrityError(manifest_path + ": dangling key '" + k + "'");
        if (k == "pair") rec.plan.pair = std::stoi(v);
        else if (k == "kind") kind = v;
        else if (k == "split") split = v;
        else if (k == "windows") windows = std::stoul(v);
        else if (k == "stem") stem = v;
        else if (k == "status") status = v;
      }
      if (index != data.runs.size()) throw IntegrityError(manifest_path + ": runs out of order");
      if (kind != "attack" && kind != "normal") throw IntegrityError(manifest_path + ": bad run kind");
      if (split != "train" && split != "test") throw IntegrityError(manifest_path + ": bad split");
      rec.plan.attack = kind == "attack";
      rec.plan.split = split == "train" ? Split::Train : Split::Test;
      rec.plan.scenario = load_scenario((fs::path(dir) / (stem + ".scenario")).string());
      if (status == "error" && rec.error.empty()) rec.error = "simulation failed";

      const auto frames = frames_from_csv(read_text_file((fs::path(dir) / (stem + ".frames.csv")).string()));
      std::istringstream labels(read_text_file((fs::path(dir) / (stem + ".labels.csv")).string()));
      std::string lab;
      std::getline(labels, lab);  // header
      if (frames.size() != windows * 12) throw IntegrityError(stem + ": frame count does not match the manifest");
      for (std::size_t w = 0; w < windows; ++w) {
        WindowRecord rec_w;
        if (!std::getline(labels, lab)) throw IntegrityError(stem + ": missing window label");
        const auto comma = lab.find(',');
        if (comma == std::string::npos) throw IntegrityError(stem + ": bad label line");
        rec_w.window_index = std::stoll(lab.substr(0, comma));
        rec_w.attack = lab.substr(comma + 1) == "1";
        for (std::size_t d = 0; d < 4; ++d) {
          rec_w.vco[d] = frames[w * 12 + d];
          rec_w.boc[d] = frames[w * 12 + 4 + d];
          rec_w.masks[d] = mask_from_frame(frames[w * 12 + 8 + d]);
          if (rec_w.vco[d].kind != FeatureKind::VCO || rec_w.boc[d].kind != FeatureKind::BOC ||
              frames[w * 12 + 8 + d].kind != FeatureKind::Mask) {
            throw IntegrityError(stem + ": frames out of order");
          }
        }
        rec_w.victims = victims_from_masks(rec_w.masks);
        rec.windows.push_back(std::move(rec_w));
      }
      data.runs.push_back(std::move(rec));
    } else {
      throw IntegrityError(manifest_path + ": unknown entry '" + key + "'");
    }
  }
  if (data.runs.size() != declared) throw IntegrityError(manifest_path + ": run count mismatch");
  return data;
}

cnn::Tensor detector_input(const FrameSet& vco) {
  const int R = vco[0].radix;
  cnn::Tensor t({4, R, R});
  for (int d = 0; d < 4; ++d) {
    const auto grid = pad_to_square(vco[static_cast<std::size_t>(d)]);
    std::copy(grid.begin(), grid.end(), t.channel(d).begin());
  }
  return t;
}

cnn::Tensor segmentor_input(const FeatureFrame& boc_raw) {
  const int R = boc_raw.radix;
  return cnn::Tensor({1, R, R}, pad_to_square(normalize_boc(boc_raw)));
}

std::vector<cnn::DetectorSample> detector_samples(const Dataset& data, Split split) {
  std::vector<cnn::DetectorSample> out;
  for (const auto& run : data.runs) {
    if (run.plan.split != split) continue;
    for (const auto& w : run.windows) out.push_back({detector_input(w.vco), w.attack});
  }
  return out;
}

std::vector<cnn::SegmentorSample> segmentor_samples(const Dataset& data, Split split) {
  std::vector<cnn::SegmentorSample> out;
  const int R = data.radix;
  for (const auto& run : data.runs) {
    if (run.plan.split != split) continue;
    for (const auto& w : run.windows) {
      if (!w.attack) continue;
      for (std::size_t d = 0; d < 4; ++d) {
        std::vector<double> m(w.masks[d].begin(), w.masks[d].end());
        out.push_back({segmentor_input(w.boc[d]), cnn::Tensor({1, R, R}, std::move(m))});
      }
    }
  }
  return out;
}

std::vector<cnn::DetectorSample> mirror_augment(std::span<const cnn::DetectorSample> samples) {
  std::vector<cnn::DetectorSample> out(samples.begin(), samples.end());
  out.reserve(samples.size() * 4);
  for (int flips = 1; flips < 4; ++flips) {
    const bool ew = flips & 1;
    const bool ns = flips & 2;
    for (const auto& s : samples) {
      const auto& in = s.frames;
      const int R = in.shape().height;
      cnn::Tensor t(in.shape());
      for (int c = 0; c < 4; ++c) {
        auto d = static_cast<Direction>(c);
        if (ew && (d == Direction::E || d == Direction::W)) d = opposite(d);
        if (ns && (d == Direction::N || d == Direction::S)) d = opposite(d);
        for (int y = 0; y < R; ++y)
          for (int x = 0; x < R; ++x) t.at(index_of(d), ns ? R - 1 - y : y, ew ? R - 1 - x : x) = in.at(c, y, x);
      }
      out.push_back({std::move(t), s.attack});
    }
  }
  return out;
}

}  // namespace nocguard
