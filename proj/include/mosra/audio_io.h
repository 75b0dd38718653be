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

#ifndef MOSRA_AUDIO_IO_H_
#define MOSRA_AUDIO_IO_H_

#include <cstddef>
#include <string>
#include <vector>

namespace mosra {

inline constexpr int kModelSampleRateHz = 48000;

// Mono audio with its sample rate. Samples are nominally in [-1, 1].
struct AudioBuffer {
  std::vector<float> samples;
  int sample_rate_hz = kModelSampleRateHz;

  std::size_t size() const { return samples.size(); }
  double duration_s() const {
    return static_cast<double>(samples.size()) / sample_rate_hz;
  }
};

enum class WavEncoding { kPcm16, kFloat32 };

// Reads a RIFF/WAVE file holding PCM16 or IEEE float32 data with one or two
// channels. Stereo is downmixed by averaging; PCM16 is scaled by 1/32768.
// Throws IoError when the file cannot be read and FormatError when the
// content is not a supported WAV layout.
AudioBuffer LoadWav(const std::string& path);

// Writes `buf` as a mono WAV. PCM16 output clips to [-1, 32767/32768].
void SaveWav(const std::string& path, const AudioBuffer& buf,
             WavEncoding encoding = WavEncoding::kFloat32);

// Polyphase windowed-sinc resampling (Kaiser window, 64 taps per phase).
// Output length is round(size * target / source). Returns an identical
// copy when the rates already match.
AudioBuffer Resample(const AudioBuffer& buf, int target_hz);

}  // namespace mosra

#endif  // MOSRA_AUDIO_IO_H_
