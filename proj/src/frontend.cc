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

#include "mosra/frontend.h"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include "mosra/errors.h"
#include "mosra/fft.h"

namespace mosra {
namespace {

constexpr double kPowerOffset = 1e-10;

std::vector<double> MelEdges(const FrontendConfig& cfg) {
  const double lo = HzToMel(cfg.f_min_hz);
  const double hi = HzToMel(cfg.f_max_hz);
  std::vector<double> edges(cfg.n_mels + 2);
  for (int i = 0; i < cfg.n_mels + 2; ++i) {
    edges[i] = MelToHz(lo + (hi - lo) * i / (cfg.n_mels + 1));
  }
  return edges;
}

}  // namespace

int FrontendConfig::WindowSamples(int sample_rate_hz) const {
  return static_cast<int>(std::lround(fft_window_ms * 1e-3 * sample_rate_hz));
}

int FrontendConfig::HopSamples(int sample_rate_hz) const {
  return static_cast<int>(std::lround(hop_ms * 1e-3 * sample_rate_hz));
}

double HzToMel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double MelToHz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

std::vector<double> MelFilterbank(const FrontendConfig& cfg, int sample_rate_hz,
                                  int n_fft) {
  if (cfg.f_max_hz > sample_rate_hz / 2.0) {
    throw InvalidArgument("mel f_max " + std::to_string(cfg.f_max_hz) +
                          " Hz exceeds Nyquist of " +
                          std::to_string(sample_rate_hz) + " Hz audio");
  }
  if (cfg.n_mels < 1 || cfg.f_min_hz < 0 || cfg.f_min_hz >= cfg.f_max_hz) {
    throw InvalidArgument("invalid mel filterbank configuration");
  }
  const int bins = n_fft / 2 + 1;
  const std::vector<double> edges = MelEdges(cfg);
  std::vector<double> fb(static_cast<std::size_t>(cfg.n_mels) * bins, 0.0);
  for (int m = 0; m < cfg.n_mels; ++m) {
    const double left = edges[m], center = edges[m + 1], right = edges[m + 2];
    for (int k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate_hz / n_fft;
      double w = 0.0;
      if (f > left && f <= center) {
        w = (f - left) / (center - left);
      } else if (f > center && f < right) {
        w = (right - f) / (right - center);
      }
      fb[static_cast<std::size_t>(m) * bins + k] = w;
    }
  }
  return fb;
}

std::vector<double> MelCenterFrequencies(const FrontendConfig& cfg) {
  const std::vector<double> edges = MelEdges(cfg);
  return {edges.begin() + 1, edges.end() - 1};
}

MelSpectrogram ComputeMelSpectrogram(const AudioBuffer& buf,
                                     const FrontendConfig& cfg) {
  if (buf.sample_rate_hz != kModelSampleRateHz) {
    throw InvalidArgument("mel spectrogram expects 48000 Hz audio, got " +
                          std::to_string(buf.sample_rate_hz) + " Hz");
  }
  const int window = cfg.WindowSamples(buf.sample_rate_hz);
  const int hop = cfg.HopSamples(buf.sample_rate_hz);
  const long long n = static_cast<long long>(buf.samples.size());
  if (n < window) {
    throw InvalidArgument("audio too short: " + std::to_string(n) +
                          " samples, need at least one " +
                          std::to_string(window) + "-sample window");
  }

  const std::vector<double> fb = MelFilterbank(cfg, buf.sample_rate_hz, window);
  std::vector<double> hann(window);
  for (int i = 0; i < window; ++i) {
    hann[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / window);
  }

  MelSpectrogram spec;
  spec.n_mels = cfg.n_mels;
  spec.num_frames = static_cast<int>(1 + (n - window) / hop);
  spec.frame_hop_s = static_cast<double>(hop) / buf.sample_rate_hz;
  spec.values.resize(static_cast<std::size_t>(spec.n_mels) * spec.num_frames);

  RealFft fft(window);
  const int bins = fft.num_bins();
  std::vector<double> frame(window);
  std::vector<std::complex<double>> bins_out(bins);
  std::vector<double> power(bins);
  for (int t = 0; t < spec.num_frames; ++t) {
    const float* x = buf.samples.data() + static_cast<std::size_t>(t) * hop;
    for (int i = 0; i < window; ++i) frame[i] = hann[i] * x[i];
    fft.Forward(frame, bins_out);
    for (int k = 0; k < bins; ++k) power[k] = std::norm(bins_out[k]);
    for (int m = 0; m < spec.n_mels; ++m) {
      const double* w = &fb[static_cast<std::size_t>(m) * bins];
      double p = 0.0;
      for (int k = 0; k < bins; ++k) p += w[k] * power[k];
      const double db = 10.0 * std::log10(p + kPowerOffset);
      spec.values[static_cast<std::size_t>(m) * spec.num_frames + t] =
          std::max(static_cast<float>(db), cfg.log_floor_db);
    }
  }
  return spec;
}

SegmentTensor Segment(const MelSpectrogram& spec, const FrontendConfig& cfg) {
  const int width = cfg.segment_width_frames;
  const int hop = cfg.segment_hop_frames;
  SegmentTensor seg;
  seg.n_mels = spec.n_mels;
  seg.width = width;
  seg.num_segments =
      spec.num_frames >= width ? 1 + (spec.num_frames - width) / hop : 1;
  seg.values.assign(static_cast<std::size_t>(seg.num_segments) *
                        seg.segment_stride(),
                    cfg.log_floor_db);
  for (int s = 0; s < seg.num_segments; ++s) {
    for (int m = 0; m < seg.n_mels; ++m) {
      for (int j = 0; j < width; ++j) {
        const int t = s * hop + j;
        if (t >= spec.num_frames) break;
        seg.values[(static_cast<std::size_t>(s) * seg.n_mels + m) * width + j] =
            spec.at(m, t);
      }
    }
  }
  return seg;
}

SegmentTensor Featurize(const AudioBuffer& buf, const FrontendConfig& cfg) {
  if (buf.sample_rate_hz == kModelSampleRateHz) {
    return Segment(ComputeMelSpectrogram(buf, cfg), cfg);
  }
  return Segment(ComputeMelSpectrogram(Resample(buf, kModelSampleRateHz), cfg),
                 cfg);
}

}  // namespace mosra
