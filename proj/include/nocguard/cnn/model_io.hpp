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

#include <string>

#include "nocguard/cnn/models.hpp"

namespace nocguard::cnn {

// Text format, whitespace separated:
//
//   nocguard-cnn 1
//   kind detector|segmentor
//   radix <R>
//   layer conv <out> <in> <k>      (or: layer dense <in> <out>)
//   weight <n> <n values>
//   bias <n> <n values>
//   ... one block per layer, in forward order ...
//   end
//
// Values are printed with 17 significant digits, which round-trips doubles exactly.

std::string to_text(const DetectorModel& model);
std::string to_text(const SegmentorModel& model);

/// Throws IntegrityError on a corrupt or truncated document, a wrong model kind, or
/// layer shapes that disagree with the declared radix. `expected_radix` > 0 adds a
/// check against the caller's mesh size (ConfigError on mismatch).
DetectorModel detector_from_text(const std::string& text, int expected_radix = 0);
SegmentorModel segmentor_from_text(const std::string& text, int expected_radix = 0);

void save_model(const DetectorModel& model, const std::string& path);
void save_model(const SegmentorModel& model, const std::string& path);
DetectorModel load_detector(const std::string& path, int expected_radix = 0);
SegmentorModel load_segmentor(const std::string& path, int expected_radix = 0);

}  // namespace nocguard::cnn
