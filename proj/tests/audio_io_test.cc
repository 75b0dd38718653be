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

#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numbers>

#include "mosra/audio_io.h"
#include "mosra/errors.h"
#include "test_util.h"

namespace mosra {
namespace {

// Writes a minimal WAV file byte by byte, independently of SaveWav.
void WriteRawWav(const std::string& path, int channels, int rate, int bits, int format_tag,
                 const std::vector<uint8_t>& data) {
  std::ofstream out(path, std::ios::binary);
  auto u32 = [&](uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };
  auto u16 = [&](uint16_t v) { out.write(reinterpret_cast<const char*>(&v), 2); };
  out.write("RIFF", 4);
  u32(36 + static_cast<uint32_t>(data.size()));
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  u32(16);
  u16(static_cast<uint16_t>(format_tag));
  u16(static_cast<uint16_t>(channels));
  u32(static_cast<uint32_t>(rate));
  u32(static_cast<uint32_t>(rate * channels * bits / 8));
  u16(static_cast<uint16_t>(channels * bits / 8));
  u16(static_cast<uint16_t>(bits));
  out.write("data", 4);
  u32(static_cast<uint32_t>(data.size()));
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
}

// Magnitude of the DFT of x at frequency hz (single-bin correlation).
double BinMagnitude(const std::vector<float>& x, double hz, int rate) {
  std::complex<double> acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    acc += static_cast<double>(x[i]) * std::polar(1.0, -2.0 * std::numbers::pi * hz * i / rate);
  }
  return std::abs(acc) / static_cast<double>(x.size());
}

TEST(AudioIo, Float32RoundTripIsExact) {
  const auto dir = testing::TempDir("wav_f32");
  AudioBuffer in = testing::Sine(440.0, 0.1);
  in.samples[3] = -1.0f;
  SaveWav((dir / "a.wav").string(), in, WavEncoding::kFloat32);
  const AudioBuffer out = LoadWav((dir / "a.wav").string());
  EXPECT_EQ(out.sample_rate_hz, 48000);
  EXPECT_EQ(out.samples, in.samples);
}

TEST(AudioIo, Pcm16RoundTripWithinHalfStep) {
  const auto dir = testing::TempDir("wav_pcm");
  const AudioBuffer in = testing::Sine(1000.0, 0.05, 16000);
  SaveWav((dir / "a.wav").string(), in, WavEncoding::kPcm16);
  const AudioBuffer out = LoadWav((dir / "a.wav").string());
  ASSERT_EQ(out.size(), in.size());
  EXPECT_EQ(out.sample_rate_hz, 16000);
  for (std::size_t i = 0; i < in.size(); ++i) {
    EXPECT_NEAR(out.samples[i], in.samples[i], 0.5 / 32768.0 + 1e-7);
  }
}

TEST(AudioIo, Pcm16ScalingAndStereoDownmix) {
  const auto dir = testing::TempDir("wav_stereo");
  // Frames (L, R): (16384, 0), (-32768, -32768), (100, 300).
  const std::vector<int16_t> frames = {16384, 0, -32768, -32768, 100, 300};
  std::vector<uint8_t> bytes(frames.size() * 2);
  std::memcpy(bytes.data(), frames.data(), bytes.size());
  WriteRawWav((dir / "s.wav").string(), 2, 22050, 16, 1, bytes);
  const AudioBuffer out = LoadWav((dir / "s.wav").string());
  ASSERT_EQ(out.size(), 3u);
  EXPECT_EQ(out.sample_rate_hz, 22050);
  EXPECT_FLOAT_EQ(out.samples[0], 0.25f);
  EXPECT_FLOAT_EQ(out.samples[1], -1.0f);
  EXPECT_FLOAT_EQ(out.samples[2], 200.0f / 32768.0f);
}

TEST(AudioIo, MissingFileIsIoError) {
  EXPECT_THROW(LoadWav("/nonexistent/dir/x.wav"), IoError);
}

TEST(AudioIo, GarbageIsFormatError) {
  const auto dir = testing::TempDir("wav_bad");
  {
    std::ofstream out(dir / "bad.wav", std::ios::binary);
    out << "this is not a wav file at all, just some text padding it out";
  }
  EXPECT_THROW(LoadWav((dir / "bad.wav").string()), FormatError);
  // 8-bit PCM is not supported.
  WriteRawWav((dir / "u8.wav").string(), 1, 8000, 8, 1, {128, 129, 127});
  EXPECT_THROW(LoadWav((dir / "u8.wav").string()), FormatError);
  // Three channels are not supported.
  WriteRawWav((dir / "c3.wav").string(), 3, 8000, 16, 1, std::vector<uint8_t>(12, 0));
  EXPECT_THROW(LoadWav((dir / "c3.wav").string()), FormatError);
}

TEST(AudioIo, ResampleIdentityReturnsCopy) {
  const AudioBuffer in = testing::Sine(300.0, 0.02);
  const AudioBuffer out = Resample(in, 48000);
  EXPECT_EQ(out.samples, in.samples);
}

TEST(AudioIo, ResampleLengthAndTonePreserved) {
  const AudioBuffer in = testing::Sine(1000.0, 0.5, 16000);
  const AudioBuffer up = Resample(in, 48000);
  EXPECT_EQ(up.sample_rate_hz, 48000);
  EXPECT_EQ(up.size(), 24000u);
  // Tone amplitude is kept and no image appears at 16 kHz - 1 kHz.
  std::vector<float> mid(up.samples.begin() + 2000, up.samples.end() - 2000);
  EXPECT_NEAR(BinMagnitude(mid, 1000.0, 48000), 0.25, 0.01);
  EXPECT_LT(BinMagnitude(mid, 15000.0, 48000), 1e-3);

  const AudioBuffer down = Resample(testing::Sine(1000.0, 0.5, 44100), 48000);
  EXPECT_EQ(down.size(), static_cast<std::size_t>(std::lround(22050.0 * 48000 / 44100)));
}

TEST(AudioIo, ResampleDownRejectsAboveNewNyquist) {
  // 20 kHz at 48 kHz cannot survive conversion to 16 kHz.
  const AudioBuffer in = testing::Sine(20000.0, 0.3);
  const AudioBuffer out = Resample(in, 16000);
  std::vector<float> mid(out.samples.begin() + 500, out.samples.end() - 500);
  double rms = 0.0;
  for (float v : mid) rms += v * v;
  rms = std::sqrt(rms / mid.size());
  EXPECT_LT(rms, 0.01);
}

}  // namespace
}  // namespace mosra
