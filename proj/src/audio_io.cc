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

#include "mosra/audio_io.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>

#include "mosra/errors.h"

namespace mosra {
namespace {

constexpr uint16_t kFormatPcm = 1;
constexpr uint16_t kFormatFloat = 3;
constexpr uint16_t kFormatExtensible = 0xFFFE;

uint16_t ReadU16(const uint8_t* p) {
  return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

uint32_t ReadU32(const uint8_t* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) |
         (static_cast<uint32_t>(p[3]) << 24);
}

void PutU16(std::vector<uint8_t>* out, uint16_t v) {
  out->push_back(v & 0xFF);
  out->push_back(v >> 8);
}

void PutU32(std::vector<uint8_t>* out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out->push_back((v >> (8 * i)) & 0xFF);
}

void PutTag(std::vector<uint8_t>* out, const char* tag) {
  out->insert(out->end(), tag, tag + 4);
}

}  // namespace

AudioBuffer LoadWav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open WAV file '" + path + "'");
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("error reading WAV file '" + path + "'");

  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw FormatError("'" + path + "' is not a RIFF/WAVE file");
  }

  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  const uint8_t* data = nullptr;
  std::size_t data_size = 0;
  bool have_fmt = false;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const uint8_t* chunk = bytes.data() + pos;
    const uint32_t size = ReadU32(chunk + 4);
    const std::size_t body = pos + 8;
    const std::size_t avail = bytes.size() - body;
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16 || size > avail) {
        throw FormatError("'" + path + "': truncated fmt chunk");
      }
      format = ReadU16(chunk + 8);
      channels = ReadU16(chunk + 10);
      rate = ReadU32(chunk + 12);
      bits = ReadU16(chunk + 22);
      if (format == kFormatExtensible && size >= 40) {
        // First two bytes of the subformat GUID carry the format tag.
        format = ReadU16(chunk + 8 + 24);
      }
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = chunk + 8;
      data_size = std::min<std::size_t>(size, avail);
    }
    pos = body + size + (size & 1);
  }

  if (!have_fmt) throw FormatError("'" + path + "': missing fmt chunk");
  if (data == nullptr) throw FormatError("'" + path + "': missing data chunk");
  if (channels < 1 || channels > 2) {
    throw FormatError("'" + path + "': unsupported channel count " +
                      std::to_string(channels));
  }
  if (rate == 0) throw FormatError("'" + path + "': zero sample rate");

  const bool pcm16 = format == kFormatPcm && bits == 16;
  const bool float32 = format == kFormatFloat && bits == 32;
  if (!pcm16 && !float32) {
    throw FormatError("'" + path + "': unsupported encoding (format tag " +
                      std::to_string(format) + ", " + std::to_string(bits) +
                      " bits); expected PCM16 or float32");
  }

  const std::size_t bytes_per_sample = bits / 8;
  const std::size_t frames = data_size / (bytes_per_sample * channels);
  AudioBuffer buf;
  buf.sample_rate_hz = static_cast<int>(rate);
  buf.samples.resize(frames);
  for (std::size_t i = 0; i < frames; ++i) {
    double acc = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      const uint8_t* p = data + (i * channels + c) * bytes_per_sample;
      if (pcm16) {
        acc += static_cast<int16_t>(ReadU16(p)) / 32768.0;
      } else {
        const uint32_t raw = ReadU32(p);
        float v;
        std::memcpy(&v, &raw, sizeof(v));
        acc += v;
      }
    }
    buf.samples[i] = static_cast<float>(acc / channels);
  }
  return buf;
}

void SaveWav(const std::string& path, const AudioBuffer& buf,
             WavEncoding encoding) {
  if (buf.sample_rate_hz <= 0) {
    throw InvalidArgument("SaveWav: sample rate must be positive");
  }
  const bool pcm16 = encoding == WavEncoding::kPcm16;
  const uint16_t bits = pcm16 ? 16 : 32;
  const uint32_t data_size =
      static_cast<uint32_t>(buf.samples.size() * (bits / 8));

  std::vector<uint8_t> out;
  out.reserve(44 + data_size);
  PutTag(&out, "RIFF");
  PutU32(&out, 36 + data_size);
  PutTag(&out, "WAVE");
  PutTag(&out, "fmt ");
  PutU32(&out, 16);
  PutU16(&out, pcm16 ? kFormatPcm : kFormatFloat);
  PutU16(&out, 1);
  PutU32(&out, static_cast<uint32_t>(buf.sample_rate_hz));
  PutU32(&out, static_cast<uint32_t>(buf.sample_rate_hz) * (bits / 8));
  PutU16(&out, bits / 8);
  PutU16(&out, bits);
  PutTag(&out, "data");
  PutU32(&out, data_size);
  for (float s : buf.samples) {
    if (pcm16) {
      const double scaled = std::clamp(static_cast<double>(s) * 32768.0,
                                       -32768.0, 32767.0);
      PutU16(&out, static_cast<uint16_t>(
                       static_cast<int16_t>(std::lround(scaled))));
    } else {
      uint32_t raw;
      std::memcpy(&raw, &s, sizeof(raw));
      PutU32(&out, raw);
    }
  }

  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f.write(reinterpret_cast<const char*>(out.data()),
          static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("error writing '" + path + "'");
}

}  // namespace mosra
