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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nocguard/mesh.hpp"

namespace nocguard {

struct Confusion {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  std::int64_t tn = 0;

  std::int64_t total() const noexcept { return tp + fp + fn + tn; }
  Confusion& operator+=(const Confusion& o) noexcept {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    tn += o.tn;
    return *this;
  }
};

/// Undefined ratios (no predicted positives for precision, no actual positives for
/// recall, either of those for F1, no samples for accuracy) stay nullopt and print
/// as "n/a".
struct MetricsReport {
  Confusion counts;
  std::optional<double> accuracy;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
  std::optional<double> dice_mean;  // segmentation only
};

MetricsReport metrics_from_counts(const Confusion& c);

/// Per-sample binary confusion. Throws ShapeError on a length mismatch.
Confusion binary_confusion(std::span<const std::uint8_t> predicted, std::span<const std::uint8_t> truth);

/// Per-node confusion of one window's predicted victim set against the true one.
Confusion node_confusion(std::span<const NodeId> predicted, std::span<const NodeId> truth, int radix);

enum class EvalTask { Detection, Localization };

/// Detection: one 0/1 entry per window. Localization: per-window victim sets, pooled
/// per node. Throws ShapeError when the sequences differ in length.
MetricsReport eval_metrics(std::span<const std::uint8_t> predicted, std::span<const std::uint8_t> truth);
MetricsReport eval_metrics(std::span<const std::vector<NodeId>> predicted,
                           std::span<const std::vector<NodeId>> truth, int radix);

std::string format_metric(const std::optional<double>& v);
/// `name accuracy=... precision=... recall=... f1=... [dice=...] tp=.. fp=.. fn=.. tn=..`
std::string to_text(const MetricsReport& m, const std::string& name);

}  // namespace nocguard
