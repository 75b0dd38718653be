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

#ifndef MOSRA_OCTAVE_FILTER_H_
#define MOSRA_OCTAVE_FILTER_H_

#include <complex>
#include <span>
#include <vector>

namespace mosra {

// Second-order IIR section, a0 normalized to 1.
struct Biquad {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;
};

// Butterworth band-pass over one octave (edges f_c/sqrt(2) .. f_c*sqrt(2)),
// designed by the bilinear transform with prewarped edges so the digital
// response is exactly -3 dB at both edges and 0 dB at the geometric center.
// `prototype_order` is the order of the low-pass prototype; the band-pass
// has twice as many poles.
class OctaveBandFilter {
 public:
  OctaveBandFilter(double center_hz, int sample_rate_hz,
                   int prototype_order = 4);

  // Causal filtering from zero initial state; output length equals input.
  std::vector<double> Apply(std::span<const double> x) const;
  // Complex frequency response at `hz`.
  std::complex<double> Response(double hz) const;

  double lower_edge_hz() const { return lower_hz_; }
  double upper_edge_hz() const { return upper_hz_; }
  const std::vector<Biquad>& sections() const { return sections_; }

 private:
  int sample_rate_hz_;
  double lower_hz_;
  double upper_hz_;
  std::vector<Biquad> sections_;
};

}  // namespace mosra

#endif  // MOSRA_OCTAVE_FILTER_H_
