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

#include "mosra/octave_filter.h"

#include <cmath>
#include <numbers>

#include "mosra/errors.h"

namespace mosra {

using Complex = std::complex<double>;

OctaveBandFilter::OctaveBandFilter(double center_hz, int sample_rate_hz,
                                   int prototype_order)
    : sample_rate_hz_(sample_rate_hz),
      lower_hz_(center_hz / std::numbers::sqrt2),
      upper_hz_(center_hz * std::numbers::sqrt2) {
  if (prototype_order < 1 || upper_hz_ >= sample_rate_hz / 2.0 ||
      center_hz <= 0.0) {
    throw InvalidArgument("octave band at " + std::to_string(center_hz) +
                          " Hz is not realizable at " +
                          std::to_string(sample_rate_hz) + " Hz");
  }
  const double fs = sample_rate_hz;
  const double pi = std::numbers::pi;
  const double w_lo = 2.0 * fs * std::tan(pi * lower_hz_ / fs);
  const double w_hi = 2.0 * fs * std::tan(pi * upper_hz_ / fs);
  const double w0_sq = w_lo * w_hi;
  const double bw = w_hi - w_lo;

  // Low-pass prototype poles, each mapped to two band-pass poles. Only the
  // upper-half-plane member of every conjugate pair is kept; it carries its
  // mirror image inside the biquad.
  const int n = prototype_order;
  for (int k = 0; k < n; ++k) {
    const Complex p =
        std::polar(1.0, pi * (2.0 * k + n + 1) / (2.0 * n));
    const Complex pb = p * bw;
    const Complex disc = std::sqrt(pb * pb - 4.0 * w0_sq);
    for (const Complex s : {(pb + disc) / 2.0, (pb - disc) / 2.0}) {
      if (s.imag() <= 0.0) continue;
      const Complex z = (2.0 * fs + s) / (2.0 * fs - s);
      Biquad q;
      // One zero at DC (from s = 0) and one at Nyquist (from s = inf).
      q.b0 = 1.0;
      q.b1 = 0.0;
      q.b2 = -1.0;
      q.a1 = -2.0 * z.real();
      q.a2 = std::norm(z);
      sections_.push_back(q);
    }
  }

  const double center_digital = fs / pi * std::atan(std::sqrt(w0_sq) / (2.0 * fs));
  const double gain = 1.0 / std::abs(Response(center_digital));
  sections_.front().b0 *= gain;
  sections_.front().b2 *= gain;
}

std::vector<double> OctaveBandFilter::Apply(std::span<const double> x) const {
  std::vector<double> y(x.begin(), x.end());
  for (const Biquad& q : sections_) {
    double s1 = 0.0, s2 = 0.0;
    for (double& v : y) {
      const double in = v;
      const double out = q.b0 * in + s1;
      s1 = q.b1 * in - q.a1 * out + s2;
      s2 = q.b2 * in - q.a2 * out;
      v = out;
    }
  }
  return y;
}

Complex OctaveBandFilter::Response(double hz) const {
  const Complex zinv = std::polar(1.0, -2.0 * std::numbers::pi * hz / sample_rate_hz_);
  Complex h = 1.0;
  for (const Biquad& q : sections_) {
    h *= (q.b0 + q.b1 * zinv + q.b2 * zinv * zinv) /
         (1.0 + q.a1 * zinv + q.a2 * zinv * zinv);
  }
  return h;
}

}  // namespace mosra
