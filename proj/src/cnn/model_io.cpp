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

#include "nocguard/cnn/model_io.hpp"

#include <cstdio>
#include <cstdlib>
#include <sstream>

#include "nocguard/error.hpp"
#include "nocguard/scenario.hpp"

namespace nocguard::cnn {
namespace {

constexpr const char* kMagic = "nocguard-cnn";
constexpr int kVersion = 1;

void write_values(std::string& out, const char* name, const std::vector<double>& values) {
  out += name;
  out += ' ' + std::to_string(values.size()) + '\n';
  char buf[32];
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", values[i]);
    out += buf;
    out += (i % 8 == 7 || i + 1 == values.size()) ? '\n' : ' ';
  }
}

void write_conv(std::string& out, const Conv2D& c) {
  out += "layer conv " + std::to_string(c.out_channels) + ' ' + std::to_string(c.in_channels) + ' ' +
         std::to_string(c.kernel) + '\n';
  write_values(out, "weight", c.weight);
  write_values(out, "bias", c.bias);
}

void write_dense(std::string& out, const Dense& d) {
  out += "layer dense " + std::to_string(d.inputs) + ' ' + std::to_string(d.outputs) + '\n';
  write_values(out, "weight", d.weight);
  write_values(out, "bias", d.bias);
}

std::string header(const char* kind, int radix) {
  return std::string(kMagic) + ' ' + std::to_string(kVersion) + "\nkind " + kind + "\nradix " +
         std::to_string(radix) + '\n';
}

class Reader {
 public:
  explicit Reader(const std::string& text) : in_(text) {}

  std::string word() {
    std::string w;
    if (!(in_ >> w)) throw IntegrityError("model file truncated");
    return w;
  }
  void expect(const std::string& want) {
    const auto got = word();
    if (got != want) throw IntegrityError("model file: expected '" + want + "', found '" + got + "'");
  }
  long integer() {
    const auto w = word();
    char* end = nullptr;
    const long v = std::strtol(w.c_str(), &end, 10);
    if (*end != '\0' || end == w.c_str()) throw IntegrityError("model file: bad integer '" + w + "'");
    return v;
  }
  double real() {
    const auto w = word();
    char* end = nullptr;
    const double v = std::strtod(w.c_str(), &end);
    if (*end != '\0' || end == w.c_str()) throw IntegrityError("model file: bad number '" + w + "'");
    return v;
  }
  void values(const char* name, std::vector<double>& into) {
    expect(name);
    const long n = integer();
    if (n != static_cast<long>(into.size())) {
      throw IntegrityError(std::string("model file: ") + name + " count " + std::to_string(n) + " != expected " +
                           std::to_string(into.size()));
    }
    for (auto& v : into) v = real();
  }
  void conv(Conv2D& c) {
    expect("layer");
    expect("conv");
    const long o = integer(), i = integer(), k = integer();
    if (o != c.out_channels || i != c.in_channels || k != c.kernel) {
      throw IntegrityError("model file: conv layer shape does not match the architecture");
    }
    values("weight", c.weight);
    values("bias", c.bias);
  }
  void dense(Dense& d) {
    expect("layer");
    expect("dense");
    const long i = integer(), o = integer();
    if (i != d.inputs || o != d.outputs) {
      throw IntegrityError("model file: dense layer is " + std::to_string(i) + "x" + std::to_string(o) +
                           ", radix implies " + std::to_string(d.inputs) + "x" + std::to_string(d.outputs));
    }
    values("weight", d.weight);
    values("bias", d.bias);
  }
  int preamble(const std::string& kind) {
    expect(kMagic);
    if (integer() != kVersion) throw IntegrityError("model file: unsupported version");
    expect("kind");
    const auto k = word();
    if (k != kind) throw IntegrityError("model file holds a " + k + ", expected a " + kind);
    expect("radix");
    const long r = integer();
    if (r < 2 || r > 4096) throw IntegrityError("model file: bad radix");
    return static_cast<int>(r);
  }
  void finish() {
    expect("end");
    std::string extra;
    if (in_ >> extra) throw IntegrityError("model file: trailing data after 'end'");
  }

 private:
  std::istringstream in_;
};

void check_expected(int radix, int expected) {
  if (expected > 0 && radix != expected) {
    throw ConfigError("model was built for a " + std::to_string(radix) + "x" + std::to_string(radix) +
                      " mesh, pipeline runs " + std::to_string(expected) + "x" + std::to_string(expected));
  }
}

}  // namespace

std::string to_text(const DetectorModel& model) {
  std::string out = header("detector", model.radix);
  write_conv(out, model.conv);
  write_dense(out, model.dense);
  out += "end\n";
  return out;
}

std::string to_text(const SegmentorModel& model) {
  std::string out = header("segmentor", model.radix);
  write_conv(out, model.conv1);
  write_conv(out, model.conv2);
  write_conv(out, model.head);
  out += "end\n";
  return out;
}

DetectorModel detector_from_text(const std::string& text, int expected_radix) {
  Reader r(text);
  const int radix = r.preamble("detector");
  auto m = DetectorModel::zeros(radix);
  r.conv(m.conv);
  r.dense(m.dense);
  r.finish();
  check_expected(radix, expected_radix);
  return m;
}

SegmentorModel segmentor_from_text(const std::string& text, int expected_radix) {
  Reader r(text);
  const int radix = r.preamble("segmentor");
  auto m = SegmentorModel::zeros(radix);
  r.conv(m.conv1);
  r.conv(m.conv2);
  r.conv(m.head);
  r.finish();
  check_expected(radix, expected_radix);
  return m;
}

void save_model(const DetectorModel& model, const std::string& path) { write_text_file(path, to_text(model)); }
void save_model(const SegmentorModel& model, const std::string& path) { write_text_file(path, to_text(model)); }

DetectorModel load_detector(const std::string& path, int expected_radix) {
  return detector_from_text(read_text_file(path), expected_radix);
}
SegmentorModel load_segmentor(const std::string& path, int expected_radix) {
  return segmentor_from_text(read_text_file(path), expected_radix);
}

}  // namespace nocguard::cnn
