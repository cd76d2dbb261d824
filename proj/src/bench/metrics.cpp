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

#include "nocguard/bench/metrics.hpp"

#include <cstdio>

#include "nocguard/error.hpp"

namespace nocguard {

MetricsReport metrics_from_counts(const Confusion& c) {
  MetricsReport m;
  m.counts = c;
  auto ratio = [](std::int64_t num, std::int64_t den) -> std::optional<double> {
    if (den <= 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
  };
  m.accuracy = ratio(c.tp + c.tn, c.total());
  m.precision = ratio(c.tp, c.tp + c.fp);
  m.recall = ratio(c.tp, c.tp + c.fn);
  if (m.precision && m.recall) m.f1 = ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn);
  return m;
}

Confusion binary_confusion(std::span<const std::uint8_t> predicted, std::span<const std::uint8_t> truth) {
  if (predicted.size() != truth.size()) {
    throw ShapeError("eval: " + std::to_string(predicted.size()) + " predictions vs " +
                     std::to_string(truth.size()) + " labels");
  }
  Confusion c;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool p = predicted[i] != 0, t = truth[i] != 0;
    if (p && t) ++c.tp;
    else if (p) ++c.fp;
    else if (t) ++c.fn;
    else ++c.tn;
  }
  return c;
}

Confusion node_confusion(std::span<const NodeId> predicted, std::span<const NodeId> truth, int radix) {
  const Mesh mesh(radix);
  std::vector<std::uint8_t> p(static_cast<std::size_t>(mesh.node_count()), 0), t(p.size(), 0);
  for (NodeId n : predicted) {
    if (!mesh.contains(n)) throw ConfigError("predicted victim " + std::to_string(n) + " outside the mesh");
    p[static_cast<std::size_t>(n)] = 1;
  }
  for (NodeId n : truth) {
    if (!mesh.contains(n)) throw ConfigError("true victim " + std::to_string(n) + " outside the mesh");
    t[static_cast<std::size_t>(n)] = 1;
  }
  return binary_confusion(p, t);
}

MetricsReport eval_metrics(std::span<const std::uint8_t> predicted, std::span<const std::uint8_t> truth) {
  return metrics_from_counts(binary_confusion(predicted, truth));
}

MetricsReport eval_metrics(std::span<const std::vector<NodeId>> predicted, std::span<const std::vector<NodeId>> truth,
                           int radix) {
  if (predicted.size() != truth.size()) {
    throw ShapeError("eval: " + std::to_string(predicted.size()) + " predicted windows vs " +
                     std::to_string(truth.size()) + " true windows");
  }
  Confusion c;
  for (std::size_t i = 0; i < truth.size(); ++i) c += node_confusion(predicted[i], truth[i], radix);
  return metrics_from_counts(c);
}

std::string format_metric(const std::optional<double>& v) {
  if (!v) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", *v);
  return buf;
}

std::string to_text(const MetricsReport& m, const std::string& name) {
  std::string s = name + " accuracy=" + format_metric(m.accuracy) + " precision=" + format_metric(m.precision) +
                  " recall=" + format_metric(m.recall) + " f1=" + format_metric(m.f1);
  if (m.dice_mean) s += " dice=" + format_metric(m.dice_mean);
  s += " tp=" + std::to_string(m.counts.tp) + " fp=" + std::to_string(m.counts.fp) +
       " fn=" + std::to_string(m.counts.fn) + " tn=" + std::to_string(m.counts.tn);
  return s;
}

}  // namespace nocguard
