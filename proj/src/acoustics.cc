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

#include "mosra/acoustics.h"

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <mutex>
#include <numbers>
#include <string>

#include "mosra/errors.h"
#include "mosra/octave_filter.h"

namespace mosra {
namespace {

constexpr double kEdcFitStartDb = -5.0;
constexpr double kEdcFitEndDb = -25.0;
constexpr double kMaxModulationIndex = 1.0 - 1e-9;
constexpr double kStiSnrClipDb = 15.0;
// Zero padding appended before band filtering so the filter tails survive.
constexpr double kBandFilterTailS = 0.2;

double Energy(std::span<const double> x) {
  double e = 0.0;
  for (double v : x) e += v * v;
  return e;
}

double RatioDb(double num, double den) {
  if (den <= 0.0) return kRatioCapDb;
  return std::min(10.0 * std::log10(num / den), kRatioCapDb);
}

// |sum e(t) exp(-j 2 pi f t)|, with the phasor advanced by recurrence and
// resynchronized periodically to bound drift.
double ModulationMagnitude(std::span<const double> e, double f_hz, int fs) {
  const double omega = 2.0 * std::numbers::pi * f_hz / fs;
  const std::complex<double> step = std::polar(1.0, -omega);
  std::complex<double> phasor = 1.0;
  std::complex<double> acc = 0.0;
  for (std::size_t t = 0; t < e.size(); ++t) {
    if ((t & 1023) == 0) phasor = std::polar(1.0, -omega * static_cast<double>(t));
    acc += e[t] * phasor;
    phasor *= step;
  }
  return std::abs(acc);
}

}  // namespace

ImpulseResponse::ImpulseResponse(std::vector<double> samples, int rate_hz)
    : h(std::move(samples)), sample_rate_hz(rate_hz) {
  if (rate_hz <= 0) throw InvalidArgument("impulse response rate must be > 0");
  if (Energy(h) <= 0.0) {
    throw InvalidArgument("impulse response has zero energy");
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < h.size(); ++i) {
    if (std::abs(h[i]) > std::abs(h[best])) best = i;
  }
  direct_index = best;
}

std::vector<double> EnergyDecayCurveDb(std::span<const double> h) {
  std::vector<double> edc(h.size());
  double tail = 0.0;
  for (std::size_t i = h.size(); i-- > 0;) {
    tail += h[i] * h[i];
    edc[i] = tail;
  }
  const double total = tail;
  for (double& v : edc) v = 10.0 * std::log10(v / total);
  return edc;
}

double T60Schroeder(const ImpulseResponse& ir) {
  const std::vector<double> edc = EnergyDecayCurveDb(ir.h);
  const auto first_below = [&](double level) {
    return std::find_if(edc.begin(), edc.end(),
                        [level](double v) { return v <= level; }) -
           edc.begin();
  };
  const std::ptrdiff_t start = first_below(kEdcFitStartDb);
  const std::ptrdiff_t end = first_below(kEdcFitEndDb);
  if (end == static_cast<std::ptrdiff_t>(edc.size())) {
    throw InsufficientDecay("energy decay curve never reaches " +
                            std::to_string(kEdcFitEndDb) + " dB");
  }
  const double fs = ir.sample_rate_hz;
  const std::ptrdiff_t count = end - start;
  if (count < 2) {
    // The curve jumps through the whole fit range within one sample.
    return 3.0 * std::max<std::ptrdiff_t>(count, 1) / fs;
  }

  // Least-squares slope in dB per sample over [start, end).
  double mean_t = 0.0, mean_y = 0.0;
  for (std::ptrdiff_t i = start; i < end; ++i) {
    mean_t += static_cast<double>(i);
    mean_y += edc[i];
  }
  mean_t /= count;
  mean_y /= count;
  double sxy = 0.0, sxx = 0.0;
  for (std::ptrdiff_t i = start; i < end; ++i) {
    const double dt = static_cast<double>(i) - mean_t;
    sxy += dt * (edc[i] - mean_y);
    sxx += dt * dt;
  }
  const double slope = sxy / sxx;
  if (!(slope < 0.0)) {
    throw NumericalError("energy decay curve has no negative slope");
  }
  return -60.0 / slope / fs;
}

double C50(const ImpulseResponse& ir) {
  const std::size_t n50 = static_cast<std::size_t>(
      std::lround(0.050 * ir.sample_rate_hz));
  const std::size_t split = ir.direct_index + n50;
  if (split > ir.h.size()) {
    throw InvalidArgument("C50 needs 50 ms of response after the direct path");
  }
  std::span<const double> h(ir.h);
  return RatioDb(Energy(h.subspan(ir.direct_index, n50)),
                 Energy(h.subspan(split)));
}

double Drr(const ImpulseResponse& ir) {
  const long long half = std::lround(0.0025 * ir.sample_rate_hz);
  const long long n = static_cast<long long>(ir.h.size());
  const long long lo = std::max(0LL, static_cast<long long>(ir.direct_index) - half);
  const long long hi = std::min(n - 1, static_cast<long long>(ir.direct_index) + half);
  double direct = 0.0, rest = 0.0;
  for (long long i = 0; i < n; ++i) {
    const double e = ir.h[i] * ir.h[i];
    if (i >= lo && i <= hi) {
      direct += e;
    } else {
      rest += e;
    }
  }
  return RatioDb(direct, rest);
}

namespace {

// Raw transfer of the band-filtered squared response, without compensation.
ModulationTransfer RawTransfer(std::span<const double> h, int fs) {
  std::vector<double> padded(h.begin(), h.end());
  padded.resize(h.size() + static_cast<std::size_t>(kBandFilterTailS * fs), 0.0);
  ModulationTransfer mtf{};
  for (int k = 0; k < kStiBands; ++k) {
    const OctaveBandFilter filter(kStiBandCentersHz[k], fs);
    std::vector<double> energy = filter.Apply(padded);
    double total = 0.0;
    for (double& v : energy) {
      v *= v;
      total += v;
    }
    for (std::size_t f = 0; f < kStiModulationHz.size(); ++f) {
      mtf[k][f] = total > 0.0 ? ModulationMagnitude(energy, kStiModulationHz[f], fs) / total : 0.0;
    }
  }
  return mtf;
}

// Transfer of the analysis filters alone, i.e. of a unit impulse.
const ModulationTransfer& FilterTransfer(int fs) {
  static std::mutex mu;
  static std::map<int, ModulationTransfer> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(fs);
  if (it == cache.end()) {
    const double delta = 1.0;
    it = cache.emplace(fs, RawTransfer(std::span<const double>(&delta, 1), fs)).first;
  }
  return it->second;
}

}  // namespace

ModulationTransfer ComputeModulationTransfer(const ImpulseResponse& ir) {
  // The squared envelope of a band-filtered response is, to good
  // approximation, the response's own band envelope convolved with that of
  // the filter, so dividing out the filter's transfer leaves the room's.
  ModulationTransfer mtf = RawTransfer(ir.h, ir.sample_rate_hz);
  const ModulationTransfer& filter = FilterTransfer(ir.sample_rate_hz);
  for (int k = 0; k < kStiBands; ++k) {
    for (std::size_t f = 0; f < kStiModulationHz.size(); ++f) {
      mtf[k][f] = filter[k][f] > 0.0 ? std::min(mtf[k][f] / filter[k][f], 1.0) : 0.0;
    }
  }
  return mtf;
}

double StiFromTransfer(const ModulationTransfer& mtf,
                       std::span<const double, kStiBands> snr_per_band_db) {
  double sti = 0.0;
  for (int k = 0; k < kStiBands; ++k) {
    const double snr = snr_per_band_db[k];
    const double noise_factor =
        std::isinf(snr) && snr > 0 ? 1.0 : 1.0 / (1.0 + std::pow(10.0, -snr / 10.0));
    double mti = 0.0;
    for (double m0 : mtf[k]) {
      const double m = std::min(m0 * noise_factor, kMaxModulationIndex);
      double snr_app = m > 0.0 ? 10.0 * std::log10(m / (1.0 - m)) : -kStiSnrClipDb;
      snr_app = std::clamp(snr_app, -kStiSnrClipDb, kStiSnrClipDb);
      mti += (snr_app + kStiSnrClipDb) / (2.0 * kStiSnrClipDb);
    }
    sti += kStiBandWeights[k] * mti / static_cast<double>(kStiModulationHz.size());
  }
  return std::clamp(sti, 0.0, 1.0);
}

double Sti(const ImpulseResponse& ir,
           std::span<const double, kStiBands> snr_per_band_db) {
  return StiFromTransfer(ComputeModulationTransfer(ir), snr_per_band_db);
}

double Sti(const ImpulseResponse& ir, double snr_db) {
  std::array<double, kStiBands> snr;
  snr.fill(snr_db);
  return Sti(ir, std::span<const double, kStiBands>(snr));
}

double SnrOfMix(std::span<const double> speech, std::span<const double> noise) {
  if (speech.size() != noise.size()) {
    throw InvalidArgument("SNR needs equal-length speech and noise (" +
                          std::to_string(speech.size()) + " vs " +
                          std::to_string(noise.size()) + ")");
  }
  const double es = Energy(speech);
  const double en = Energy(noise);
  if (en <= 0.0) return kInfiniteSnr;
  return 10.0 * std::log10(es / en);
}

double SnrOfMix(const AudioBuffer& speech, const AudioBuffer& noise) {
  if (speech.sample_rate_hz != noise.sample_rate_hz) {
    throw InvalidArgument("SNR needs speech and noise at the same rate");
  }
  std::vector<double> s(speech.samples.begin(), speech.samples.end());
  std::vector<double> n(noise.samples.begin(), noise.samples.end());
  return SnrOfMix(s, n);
}

std::array<double, kStiBands> BandSnrDb(std::span<const double> speech,
                                        std::span<const double> noise,
                                        int sample_rate_hz) {
  std::array<double, kStiBands> out;
  for (int k = 0; k < kStiBands; ++k) {
    const OctaveBandFilter filter(kStiBandCentersHz[k], sample_rate_hz);
    out[k] = SnrOfMix(filter.Apply(speech), filter.Apply(noise));
  }
  return out;
}

}  // namespace mosra
