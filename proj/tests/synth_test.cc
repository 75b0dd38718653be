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
#include <filesystem>
#include <fstream>

#include "mosra/acoustics.h"
#include "mosra/errors.h"
#include "mosra/manifest.h"
#include "mosra/synth.h"
#include "test_util.h"

namespace mosra {
namespace {

double Energy(const std::vector<float>& x) {
  double e = 0.0;
  for (float v : x) e += static_cast<double>(v) * v;
  return e;
}

TEST(Synth, RirHitsTargets) {
  for (double t60 : {0.2, 0.6, 1.2}) {
    for (double drr : {-3.0, 6.0, 15.0}) {
      RirSpec spec{t60, drr, 48000, std::max(1.5 * t60, 0.3), 11};
      const SynthesizedRir rir = SynthRir(spec);
      EXPECT_NEAR(rir.labels.drr_db, drr, 1e-9);
      EXPECT_NEAR(rir.labels.t60_s, t60, 0.1 * t60) << t60 << " " << drr;
      EXPECT_EQ(rir.ir.direct_index, 240u);
      EXPECT_NEAR(rir.labels.c50_db, C50(rir.ir), 1e-12);
      EXPECT_TRUE(std::isinf(rir.labels.snr_db));
    }
  }
}

TEST(Synth, RirRejectsBadSpecs) {
  EXPECT_THROW(SynthRir({0.05, 0.0, 48000, 0.3, 0}), InvalidArgument);
  EXPECT_THROW(SynthRir({1.0, 0.0, 48000, 1.0, 0}), InvalidArgument);
  // A tail this quiet cannot carry a DRR of -40 dB below a unit impulse
  // without its own peak exceeding the direct path.
  EXPECT_THROW(SynthRir({0.2, -40.0, 48000, 0.3, 0}), InvalidArgument);
}

TEST(Synth, MixCalibration) {
  const AudioBuffer speech = SynthesizeSpeechLike(1.0, 3);
  for (double snr : {0.0, 10.0, 20.0, 40.0}) {
    DegradationSpec spec;
    spec.rir = RirSpec{0.5, 5.0, 48000, 0.75, 4};
    spec.snr_db = snr;
    const DegradedAudio out = Degrade(speech, spec, 9);
    EXPECT_NEAR(SnrOfMix(out.speech, out.noise), snr, 0.05);
    EXPECT_NEAR(out.labels.snr_db, snr, 0.05);
    ASSERT_EQ(out.mix.size(), out.speech.size());
    for (std::size_t i = 0; i < out.mix.size(); i += 997) {
      EXPECT_NEAR(out.mix.samples[i], out.speech.samples[i] + out.noise.samples[i], 1e-6);
    }
  }
}

TEST(Synth, CleanMixHasCappedLabels) {
  const AudioBuffer speech = SynthesizeSpeechLike(0.5, 1);
  const DegradedAudio out = Degrade(speech, DegradationSpec{}, 1);
  EXPECT_EQ(out.labels.snr_db, kSnrLabelCapDb);
  EXPECT_EQ(out.labels.t60_s, kT60FloorS);
  EXPECT_EQ(out.labels.drr_db, kRatioCapDb);
  EXPECT_EQ(out.labels.c50_db, kRatioCapDb);
  EXPECT_NEAR(out.labels.sti, 1.0, 1e-6);
  EXPECT_EQ(Energy(out.noise.samples), 0.0);
  EXPECT_FALSE(out.ir.has_value());
}

TEST(Synth, PeakNormalizationAndGain) {
  AudioBuffer loud = testing::Sine(200.0, 0.3, 48000, 0.99);
  DegradationSpec spec;
  spec.gain_db = 12.0;
  const DegradedAudio out = Degrade(loud, spec, 0);
  float peak = 0.0f;
  for (float v : out.mix.samples) peak = std::max(peak, std::abs(v));
  EXPECT_NEAR(peak, std::pow(10.0, -1.0 / 20.0), 1e-4);

  spec.gain_db = -6.0;
  const DegradedAudio quiet = Degrade(loud, spec, 0);
  EXPECT_NEAR(quiet.mix.samples[100], loud.samples[100] * std::pow(10.0, -6.0 / 20.0), 1e-6);
}

TEST(Synth, DegradeRejectsBadInput) {
  AudioBuffer silent;
  silent.samples.assign(4800, 0.0f);
  EXPECT_THROW(Degrade(silent, {}, 0), InvalidArgument);
  EXPECT_THROW(Degrade(testing::Sine(100.0, 0.1, 16000), {}, 0), InvalidArgument);
}

TEST(Synth, TailCropKeepsCalibration) {
  const AudioBuffer speech = SynthesizeSpeechLike(0.5, 2);
  DegradationSpec spec;
  spec.rir = RirSpec{1.2, 0.0, 48000, 1.8, 5};
  spec.snr_db = 10.0;
  spec.max_tail_s = 0.1;
  const DegradedAudio out = Degrade(speech, spec, 3);
  EXPECT_EQ(out.mix.size(), speech.size() + 4800);
  EXPECT_NEAR(out.labels.snr_db, 10.0, 0.05);
  EXPECT_NEAR(out.labels.t60_s, 1.2, 0.12);
}

TEST(Synth, ProxyMosFormula) {
  AcousticLabels l;
  l.sti = 1.0;
  l.snr_db = 10.0;
  EXPECT_DOUBLE_EQ(ProxyMos(l), 3.0);
  l.snr_db = 1000.0;
  EXPECT_DOUBLE_EQ(ProxyMos(l), 5.0);
  l.sti = 0.0;
  EXPECT_DOUBLE_EQ(ProxyMos(l), 1.0);
}

TEST(Synth, SpeechLikeIsDeterministicAndBounded) {
  const AudioBuffer a = SynthesizeSpeechLike(2.0, 42);
  const AudioBuffer b = SynthesizeSpeechLike(2.0, 42);
  const AudioBuffer c = SynthesizeSpeechLike(2.0, 43);
  EXPECT_EQ(a.samples, b.samples);
  EXPECT_NE(a.samples, c.samples);
  EXPECT_EQ(a.size(), 96000u);
  float peak = 0.0f;
  for (float v : a.samples) peak = std::max(peak, std::abs(v));
  EXPECT_NEAR(peak, 0.5f, 1e-6);
}

TEST(Synth, CorpusIsSeedDeterministicAcrossThreads) {
  const auto sources = GenerateSpeechSources(3, 0.4, 1);
  CorpusOptions opt;
  opt.max_speech_s = 0.3;
  opt.t60_max_s = 0.5;
  const auto dir = testing::TempDir("corpus");
  const DatasetManifest a = BuildCorpus(3, 4, sources, (dir / "a").string(), 7, opt);
  opt.threads = 3;
  opt.write_components = false;
  const DatasetManifest b = BuildCorpus(3, 4, sources, (dir / "b").string(), 7, opt);
  ASSERT_EQ(a.rows.size(), 7u);
  ASSERT_EQ(b.rows.size(), 7u);
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    EXPECT_EQ(a.rows[i].role, i < 3 ? Role::kMos : Role::kAcoustics);
    EXPECT_EQ(a.rows[i].mos, b.rows[i].mos);
    EXPECT_EQ(a.rows[i].t60_s, b.rows[i].t60_s);
    EXPECT_EQ(LoadWav(a.ResolvePath(a.rows[i])).samples, LoadWav(b.ResolvePath(b.rows[i])).samples);
  }
  EXPECT_TRUE(std::filesystem::exists(dir / "a" / "components"));
  const DatasetManifest reread = ReadManifest((dir / "a" / "manifest.csv").string());
  ASSERT_EQ(reread.rows.size(), 7u);
  EXPECT_EQ(reread.rows[5].sti, a.rows[5].sti);
  EXPECT_EQ(reread.rows[1].mos, a.rows[1].mos);
}

TEST(Synth, EmptySpeechDirIsAnError) {
  const auto dir = testing::TempDir("empty_speech");
  EXPECT_THROW(LoadSpeechDir(dir.string()), InvalidArgument);
}

TEST(Manifest, RejectsBrokenRows) {
  const auto dir = testing::TempDir("manifest");
  const auto write = [&](const std::string& body) {
    std::ofstream((dir / "m.csv").string()) << kManifestHeader << "\n" << body;
    return (dir / "m.csv").string();
  };
  EXPECT_NO_THROW(ReadManifest(write("a.wav,mos,3.5,,,,,\nb.wav,acoustics,,10,0.5,0.4,3,5\n")));
  EXPECT_THROW(ReadManifest(write("a.wav,mos,,,,,,\n")), FormatError);
  EXPECT_THROW(ReadManifest(write("a.wav,mos,6,,,,,\n")), FormatError);
  EXPECT_THROW(ReadManifest(write("b.wav,acoustics,,10,,0.4,3,5\n")), FormatError);
  EXPECT_THROW(ReadManifest(write("b.wav,other,,10,0.5,0.4,3,5\n")), FormatError);
  EXPECT_THROW(ReadManifest(write("b.wav,acoustics,,ten,0.5,0.4,3,5\n")), FormatError);
}

TEST(Manifest, WriteReadRoundTripIsExact) {
  const auto dir = testing::TempDir("manifest_rt");
  DatasetManifest m;
  ManifestRow r;
  r.path = "x/y.wav";
  r.role = Role::kAcoustics;
  r.snr_db = 1.0 / 3.0;
  r.sti = 0.123456789012345678;
  r.t60_s = 0.7;
  r.drr_db = -2.5e-7;
  r.c50_db = 100.0;
  m.rows.push_back(r);
  WriteManifest((dir / "m.csv").string(), m);
  const DatasetManifest back = ReadManifest((dir / "m.csv").string());
  ASSERT_EQ(back.rows.size(), 1u);
  EXPECT_EQ(back.rows[0].snr_db, r.snr_db);
  EXPECT_EQ(back.rows[0].sti, r.sti);
  EXPECT_EQ(back.rows[0].drr_db, r.drr_db);
  EXPECT_FALSE(back.rows[0].mos.has_value());
  EXPECT_EQ(back.ResolvePath(back.rows[0]), (dir / "x/y.wav").string());
}

}  // namespace
}  // namespace mosra
