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

#include <cmath>
#include <numbers>
#include <numeric>
#include <vector>

#include "mosra/audio_io.h"
#include "mosra/errors.h"

namespace mosra {
namespace {

constexpr int kTapsPerPhase = 64;
constexpr int kHalfTaps = kTapsPerPhase / 2;
constexpr double kKaiserBeta = 8.6;
// Passband edge as a fraction of the lower of the two Nyquist rates.
constexpr double kCutoff = 0.9;

double Sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

double Kaiser(double x) {
  if (x <= -1.0 || x >= 1.0) return 0.0;
  return std::cyl_bessel_i(0.0, kKaiserBeta * std::sqrt(1.0 - x * x)) /
         std::cyl_bessel_i(0.0, kKaiserBeta);
}

}  // namespace

AudioBuffer Resample(const AudioBuffer& buf, int target_hz) {
  if (target_hz <= 0) throw InvalidArgument("Resample: target rate must be > 0");
  if (buf.sample_rate_hz <= 0) {
    throw InvalidArgument("Resample: source rate must be > 0");
  }
  if (target_hz == buf.sample_rate_hz) return buf;

  const int g = std::gcd(target_hz, buf.sample_rate_hz);
  const long long up = target_hz / g;
  const long long down = buf.sample_rate_hz / g;
  const double cutoff = kCutoff * std::min(1.0, static_cast<double>(up) / down);

  // Output sample n sits at input time n*down/up. Its fractional part takes
  // one of `up` values, so the kernel is tabulated once per phase.
  std::vector<double> table(static_cast<std::size_t>(up) * kTapsPerPhase);
  for (long long p = 0; p < up; ++p) {
    const double frac = static_cast<double>(p) / up;
    double* taps = &table[p * kTapsPerPhase];
    double sum = 0.0;
    for (int k = 0; k < kTapsPerPhase; ++k) {
      // Tap k multiplies input sample floor(t) - kHalfTaps + 1 + k.
      const double d = frac + kHalfTaps - 1 - k;
      taps[k] = cutoff * Sinc(cutoff * d) * Kaiser(d / (kHalfTaps + 1));
      sum += taps[k];
    }
    for (int k = 0; k < kTapsPerPhase; ++k) taps[k] /= sum;
  }

  const long long n_in = static_cast<long long>(buf.samples.size());
  const long long n_out = std::llround(static_cast<double>(n_in) * target_hz /
                                       buf.sample_rate_hz);
  AudioBuffer out;
  out.sample_rate_hz = target_hz;
  out.samples.resize(static_cast<std::size_t>(n_out));
  for (long long n = 0; n < n_out; ++n) {
    const long long num = n * down;
    const long long base = num / up;
    const long long phase = num % up;
    const double* taps = &table[phase * kTapsPerPhase];
    const long long first = base - kHalfTaps + 1;
    double acc = 0.0;
    for (int k = 0; k < kTapsPerPhase; ++k) {
      const long long i = first + k;
      if (i >= 0 && i < n_in) acc += taps[k] * buf.samples[i];
    }
    out.samples[n] = static_cast<float>(acc);
  }
  return out;
}

}  // namespace mosra
