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

#ifndef MOSRA_SYNTH_H_
#define MOSRA_SYNTH_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mosra/acoustics.h"
#include "mosra/audio_io.h"
#include "mosra/manifest.h"

namespace mosra {

// T60 label given to mixes without a room response.
inline constexpr double kT60FloorS = 0.01;
// Noise-free mixes carry this SNR label.
inline constexpr double kSnrLabelCapDb = 60.0;

struct RirSpec {
  double t60_s = 0.5;
  double drr_db = 0.0;
  int sample_rate_hz = kModelSampleRateHz;
  double length_s = 0.75;
  uint64_t seed = 0;
};

struct SynthesizedRir {
  ImpulseResponse ir;
  // Measured on the realized response; snr_db is +inf.
  AcousticLabels labels;
  ModulationTransfer mtf;
};

// Unit impulse at 5 ms followed, after the +-2.5 ms direct window, by
// Gaussian noise under the envelope 10^(-3 t / T60). The tail is scaled so
// the realized DRR equals the target. Throws InvalidArgument for specs
// outside their invariants or unreachable DRR targets.
SynthesizedRir SynthRir(const RirSpec& spec);

struct DegradationSpec {
  std::optional<RirSpec> rir;
  double snr_db = kInfiniteSnr;
  double gain_db = 0.0;
  // When non-negative, the reverberant signal is cut to the dry length plus
  // this many seconds of tail before noise is added.
  double max_tail_s = -1.0;
};

struct DegradedAudio {
  AudioBuffer mix;
  // The two additive parts of `mix` after gain and peak normalization.
  AudioBuffer speech;
  AudioBuffer noise;
  std::optional<ImpulseResponse> ir;
  AcousticLabels labels;
};

// Convolves with the room response, adds white noise at the requested SNR,
// applies gain and peak-normalizes to -1 dBFS if the result would clip.
DegradedAudio Degrade(const AudioBuffer& speech, const DegradationSpec& spec,
                      uint64_t seed);

// Deterministic stand-in for a subjective score:
// 1 + 4 * sti * logistic((snr - 10) / 5), clipped to [1, 5].
double ProxyMos(const AcousticLabels& labels);

// Speech-like test signal: voiced syllables (glottal pulse train through
// three formant resonators) and fricative noise bursts under syllabic
// envelopes, separated by short pauses.
AudioBuffer SynthesizeSpeechLike(double duration_s, uint64_t seed,
                                 int sample_rate_hz = kModelSampleRateHz);

// `count` speech-like sources of `duration_s` each, seeded per index.
std::vector<AudioBuffer> GenerateSpeechSources(int count, double duration_s, uint64_t seed);

// Deterministic 64-bit mixing of a seed with a row index.
uint64_t DeriveSeed(uint64_t seed, uint64_t index);

struct CorpusOptions {
  double t60_min_s = 0.15;
  double t60_max_s = 1.5;
  double drr_min_db = -6.0;
  double drr_max_db = 18.0;
  double snr_min_db = 0.0;
  double snr_max_db = 40.0;
  double clean_fraction = 0.2;
  double gain_min_db = -6.0;
  double gain_max_db = 0.0;
  // Speech sources longer than this are cropped; <= 0 keeps full length.
  double max_speech_s = 0.0;
  // IR length is max(rir_length_factor * T60, rir_min_length_s).
  double rir_length_factor = 1.5;
  double rir_min_length_s = 0.3;
  // See DegradationSpec::max_tail_s; negative keeps the full tail.
  double max_tail_s = -1.0;
  // Also write the speech component and room response of every row.
  bool write_components = true;
  int threads = 1;
};

struct CorpusRow {
  Role role = Role::kAcoustics;
  DegradedAudio audio;
  double mos = 0.0;
};

// One row of a corpus; depends only on (options, sources, seed, index).
CorpusRow SynthesizeRow(const CorpusOptions& options,
                        const std::vector<AudioBuffer>& sources, Role role,
                        uint64_t seed, std::size_t index);

// Loads every .wav in `dir` (sorted by name) resampled to 48 kHz. Throws
// InvalidArgument when the directory has none.
std::vector<AudioBuffer> LoadSpeechDir(const std::string& dir);

// Writes `n_mos` MOS rows then `n_acoustics` acoustics rows under
// `out_dir` (audio/, components/, manifest.csv) and returns the manifest.
DatasetManifest BuildCorpus(int n_mos, int n_acoustics,
                            const std::vector<AudioBuffer>& sources,
                            const std::string& out_dir, uint64_t seed,
                            const CorpusOptions& options = {});
DatasetManifest BuildCorpus(int n_mos, int n_acoustics,
                            const std::string& speech_dir,
                            const std::string& out_dir, uint64_t seed,
                            const CorpusOptions& options = {});

}  // namespace mosra

#endif  // MOSRA_SYNTH_H_
