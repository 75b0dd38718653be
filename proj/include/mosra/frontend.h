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

#ifndef MOSRA_FRONTEND_H_
#define MOSRA_FRONTEND_H_

#include <vector>

#include "mosra/audio_io.h"

namespace mosra {

struct FrontendConfig {
  int n_mels = 48;
  double fft_window_ms = 20.0;
  double hop_ms = 10.0;
  double f_min_hz = 0.0;
  double f_max_hz = 20000.0;
  int segment_width_frames = 15;
  int segment_hop_frames = 4;
  float log_floor_db = -80.0f;

  int WindowSamples(int sample_rate_hz) const;
  int HopSamples(int sample_rate_hz) const;
};

// Log-power mel spectrogram. values[m * num_frames + t] is band m, frame t.
struct MelSpectrogram {
  int n_mels = 0;
  int num_frames = 0;
  double frame_hop_s = 0.0;
  std::vector<float> values;

  float at(int mel, int frame) const { return values[mel * num_frames + frame]; }
};

// Mel patches fed to the model: values[(s * n_mels + m) * width + j].
struct SegmentTensor {
  int num_segments = 0;
  int n_mels = 0;
  int width = 0;
  std::vector<float> values;

  float at(int seg, int mel, int col) const {
    return values[(static_cast<std::size_t>(seg) * n_mels + mel) * width + col];
  }
  std::size_t segment_stride() const {
    return static_cast<std::size_t>(n_mels) * width;
  }
};

// HTK mel scale.
double HzToMel(double hz);
double MelToHz(double mel);

// Triangular filterbank, row-major (n_mels x (n_fft / 2 + 1)). Filter m
// rises from edge m to a peak of 1 at edge m + 1 and falls to zero at edge
// m + 2, with n_mels + 2 edges equally spaced in mel between f_min and f_max.
std::vector<double> MelFilterbank(const FrontendConfig& cfg, int sample_rate_hz,
                                  int n_fft);

// Center frequency of each mel filter, in Hz.
std::vector<double> MelCenterFrequencies(const FrontendConfig& cfg);

// Hann-windowed power spectrogram through the mel filterbank, compressed as
// max(10*log10(p + 1e-10), log_floor_db). Requires 48 kHz input at least one
// window long; throws InvalidArgument otherwise.
MelSpectrogram ComputeMelSpectrogram(const AudioBuffer& buf,
                                     const FrontendConfig& cfg);

// Splits the spectrogram into overlapping fixed-width patches. Frames past
// the last full patch are dropped; inputs shorter than one patch are padded
// on the right with log_floor_db.
SegmentTensor Segment(const MelSpectrogram& spec, const FrontendConfig& cfg);

// Resamples to 48 kHz when needed, then mel spectrogram and segmentation.
SegmentTensor Featurize(const AudioBuffer& buf, const FrontendConfig& cfg);

}  // namespace mosra

#endif  // MOSRA_FRONTEND_H_
