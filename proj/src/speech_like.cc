// Copyright 2026 The MOSRA Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "mosra/errors.h"
#include "mosra/synth.h"

namespace mosra {
namespace {

// Two-pole resonator with unit gain at its center frequency.
class Resonator {
 public:
  Resonator(double freq_hz, double bandwidth_hz, double fs) {
    const double r = std::exp(-std::numbers::pi * bandwidth_hz / fs);
    const double theta = 2.0 * std::numbers::pi * freq_hz / fs;
    a1_ = 2.0 * r * std::cos(theta);
    a2_ = -r * r;
    gain_ = (1.0 - r) * std::sqrt(1.0 - 2.0 * r * std::cos(2.0 * theta) + r * r);
  }
  double Step(double x) {
    const double y = gain_ * x + a1_ * y1_ + a2_ * y2_;
    y2_ = y1_;
    y1_ = y;
    return y;
  }

 private:
  double a1_, a2_, gain_;
  double y1_ = 0.0, y2_ = 0.0;
};

}  // namespace

AudioBuffer SynthesizeSpeechLike(double duration_s, uint64_t seed,
                                 int sample_rate_hz) {
  if (duration_s <= 0.0 || sample_rate_hz <= 0) {
    throw InvalidArgument("speech-like signal needs positive duration and rate");
  }
  const double fs = sample_rate_hz;
  const std::size_t n = static_cast<std::size_t>(std::lround(duration_s * fs));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * u(rng); };

  std::vector<double> out(n, 0.0);
  const double speaker_f0 = uniform(90.0, 220.0);
  std::size_t pos = static_cast<std::size_t>(uniform(0.0, 0.05) * fs);
  while (pos < n) {
    const std::size_t len = static_cast<std::size_t>(uniform(0.12, 0.30) * fs);
    const bool voiced = u(rng) < 0.8;
    const double level = uniform(0.4, 1.0);
    const std::size_t end = std::min(n, pos + len);
    if (voiced) {
      Resonator f1(uniform(300.0, 800.0), 80.0, fs);
      Resonator f2(uniform(900.0, 2300.0), 100.0, fs);
      Resonator f3(uniform(2400.0, 3200.0), 140.0, fs);
      const double f0_start = speaker_f0 * uniform(0.9, 1.15);
      const double f0_end = speaker_f0 * uniform(0.8, 1.0);
      double phase = 0.0;
      for (std::size_t i = pos; i < end; ++i) {
        const double frac = static_cast<double>(i - pos) / len;
        const double f0 = f0_start + (f0_end - f0_start) * frac;
        phase += f0 / fs;
        double excitation = 0.02 * gauss(rng);
        if (phase >= 1.0) {
          phase -= 1.0;
          excitation += 1.0;
        }
        const double env = std::sin(std::numbers::pi * frac);
        const double v = f1.Step(excitation) + 0.6 * f2.Step(excitation) +
                         0.3 * f3.Step(excitation);
        out[i] += level * env * v;
      }
    } else {
      Resonator fric(uniform(3000.0, 6000.0), 1500.0, fs);
      for (std::size_t i = pos; i < end; ++i) {
        const double frac = static_cast<double>(i - pos) / len;
        const double env = std::sin(std::numbers::pi * frac);
        out[i] += 0.3 * level * env * fric.Step(gauss(rng));
      }
    }
    pos = end + static_cast<std::size_t>(uniform(0.03, 0.12) * fs);
  }

  double peak = 0.0;
  for (double v : out) peak = std::max(peak, std::abs(v));
  AudioBuffer buf;
  buf.sample_rate_hz = sample_rate_hz;
  buf.samples.resize(n);
  const double scale = peak > 0.0 ? 0.5 / peak : 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    buf.samples[i] = static_cast<float>(out[i] * scale);
  }
  return buf;
}

std::vector<AudioBuffer> GenerateSpeechSources(int count, double duration_s, uint64_t seed) {
  if (count < 1) throw InvalidArgument("need at least one generated source");
  std::vector<AudioBuffer> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    out.push_back(SynthesizeSpeechLike(duration_s, DeriveSeed(seed, 1000003 + i)));
  }
  return out;
}

}  // namespace mosra
