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

#ifndef MOSRA_ACOUSTICS_H_
#define MOSRA_ACOUSTICS_H_

#include <array>
#include <limits>
#include <span>
#include <vector>

#include "mosra/audio_io.h"

namespace mosra {

// Cap applied to clarity and DRR ratios whose denominator energy is zero.
inline constexpr double kRatioCapDb = 100.0;

inline constexpr int kStiBands = 7;
inline constexpr std::array<double, kStiBands> kStiBandCentersHz = {
    125.0, 250.0, 500.0, 1000.0, 2000.0, 4000.0, 8000.0};
// Male octave-band weights; they sum to exactly 1.
inline constexpr std::array<double, kStiBands> kStiBandWeights = {
    0.13, 0.14, 0.11, 0.12, 0.19, 0.17, 0.14};
inline constexpr std::array<double, 14> kStiModulationHz = {
    0.63, 0.8, 1.0, 1.25, 1.6, 2.0, 2.5, 3.15, 4.0, 5.0, 6.3, 8.0, 10.0, 12.5};

inline constexpr double kInfiniteSnr = std::numeric_limits<double>::infinity();

struct ImpulseResponse {
  ImpulseResponse() = default;
  // Validates non-zero energy and locates the direct path at argmax |h|.
  ImpulseResponse(std::vector<double> samples, int rate_hz);

  std::vector<double> h;
  int sample_rate_hz = kModelSampleRateHz;
  std::size_t direct_index = 0;
};

struct AcousticLabels {
  double snr_db = 0.0;
  double sti = 0.0;
  double t60_s = 0.0;
  double drr_db = 0.0;
  double c50_db = 0.0;
};

// Schroeder energy decay curve in dB relative to total energy.
std::vector<double> EnergyDecayCurveDb(std::span<const double> h);

// Reverberation time from a least-squares line through the -5..-25 dB part of
// the energy decay curve, extrapolated to 60 dB. Throws InsufficientDecay if
// the curve never falls below -25 dB.
double T60Schroeder(const ImpulseResponse& ir);

// Early (first 50 ms from the direct path) to late energy ratio in dB.
// Returns kRatioCapDb when there is no late energy; requires 50 ms of tail.
double C50(const ImpulseResponse& ir);

// Energy within +-2.5 ms of the direct path against everything else, in dB.
double Drr(const ImpulseResponse& ir);

// Noise-free modulation transfer m[band][modulation frequency] of a response.
using ModulationTransfer = std::array<std::array<double, kStiModulationHz.size()>, kStiBands>;
ModulationTransfer ComputeModulationTransfer(const ImpulseResponse& ir);
// STI from a precomputed transfer, reduced by per-band noise.
double StiFromTransfer(const ModulationTransfer& mtf,
                       std::span<const double, kStiBands> snr_per_band_db);

// Speech transmission index by the indirect modulation-transfer method.
// `snr_per_band_db` holds one value per octave band; +inf means noise-free.
double Sti(const ImpulseResponse& ir,
           std::span<const double, kStiBands> snr_per_band_db);
double Sti(const ImpulseResponse& ir, double snr_db = kInfiniteSnr);

// 10*log10(sum s^2 / sum n^2) over whole files of equal length and rate.
// Returns +inf for a silent noise file.
double SnrOfMix(const AudioBuffer& speech, const AudioBuffer& noise);
double SnrOfMix(std::span<const double> speech, std::span<const double> noise);

// Per-octave-band SNR of separately available speech and noise.
std::array<double, kStiBands> BandSnrDb(std::span<const double> speech,
                                        std::span<const double> noise,
                                        int sample_rate_hz);

}  // namespace mosra

#endif  // MOSRA_ACOUSTICS_H_
