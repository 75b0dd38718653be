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

#include "mosra/synth.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>
#include <thread>

#include "mosra/errors.h"
#include "mosra/fft.h"

namespace mosra {
namespace {

constexpr double kDirectDelayS = 0.005;
constexpr double kDirectHalfWindowS = 0.0025;
constexpr double kPeakCeilingDbfs = -1.0;

double Energy(const std::vector<double>& x) {
  double e = 0.0;
  for (double v : x) e += v * v;
  return e;
}

AudioBuffer ToAudio(const std::vector<double>& x, int rate) {
  AudioBuffer buf;
  buf.sample_rate_hz = rate;
  buf.samples.assign(x.begin(), x.end());
  return buf;
}

}  // namespace

uint64_t DeriveSeed(uint64_t seed, uint64_t index) {
  // splitmix64 finalizer over the combined value.
  uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

SynthesizedRir SynthRir(const RirSpec& spec) {
  if (!(spec.t60_s >= 0.1 && spec.t60_s <= 3.0)) {
    throw InvalidArgument("RIR T60 must lie in [0.1, 3.0] s, got " +
                          std::to_string(spec.t60_s));
  }
  if (spec.length_s < 1.5 * spec.t60_s - 1e-12) {
    throw InvalidArgument("RIR length must be at least 1.5 x T60");
  }
  if (spec.sample_rate_hz <= 0) throw InvalidArgument("RIR rate must be > 0");

  const double fs = spec.sample_rate_hz;
  const std::size_t n = static_cast<std::size_t>(std::lround(spec.length_s * fs));
  const std::size_t direct = static_cast<std::size_t>(std::lround(kDirectDelayS * fs));
  const std::size_t tail_start =
      direct + static_cast<std::size_t>(std::lround(kDirectHalfWindowS * fs)) + 1;
  if (tail_start >= n) {
    throw InvalidArgument("RIR too short to hold a reverberant tail");
  }

  std::vector<double> h(n, 0.0);
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  double tail_energy = 0.0, tail_peak = 0.0;
  for (std::size_t i = tail_start; i < n; ++i) {
    const double t = (static_cast<double>(i) - direct) / fs;
    h[i] = gauss(rng) * std::pow(10.0, -3.0 * t / spec.t60_s);
    tail_energy += h[i] * h[i];
    tail_peak = std::max(tail_peak, std::abs(h[i]));
  }
  // The direct window holds only the unit impulse, so its energy is 1.
  const double scale = std::sqrt(std::pow(10.0, -spec.drr_db / 10.0) / tail_energy);
  if (!std::isfinite(scale) || scale * tail_peak >= 1.0) {
    throw InvalidArgument("DRR target " + std::to_string(spec.drr_db) +
                          " dB is unreachable with this tail");
  }
  for (std::size_t i = tail_start; i < n; ++i) h[i] *= scale;
  h[direct] = 1.0;

  SynthesizedRir out{ImpulseResponse(std::move(h), spec.sample_rate_hz), {}, {}};
  out.labels.snr_db = kInfiniteSnr;
  out.labels.t60_s = std::max(T60Schroeder(out.ir), kT60FloorS);
  out.labels.drr_db = Drr(out.ir);
  out.labels.c50_db = C50(out.ir);
  out.mtf = ComputeModulationTransfer(out.ir);
  out.labels.sti = StiFromTransfer(out.mtf, std::array<double, kStiBands>{
      kInfiniteSnr, kInfiniteSnr, kInfiniteSnr, kInfiniteSnr, kInfiniteSnr, kInfiniteSnr,
      kInfiniteSnr});
  return out;
}

DegradedAudio Degrade(const AudioBuffer& speech, const DegradationSpec& spec,
                      uint64_t seed) {
  if (speech.sample_rate_hz != kModelSampleRateHz) {
    throw InvalidArgument("degradation expects 48000 Hz speech");
  }
  if (!std::isinf(spec.snr_db) && !(spec.snr_db >= -10.0 && spec.snr_db <= 60.0)) {
    throw InvalidArgument("target SNR must lie in [-10, 60] dB or be +inf");
  }
  std::vector<double> dry(speech.samples.begin(), speech.samples.end());
  if (Energy(dry) <= 0.0) throw InvalidArgument("speech input is silent");

  DegradedAudio out;
  const int fs = speech.sample_rate_hz;
  std::vector<double> wet;
  ModulationTransfer mtf;
  if (spec.rir) {
    SynthesizedRir rir = SynthRir(*spec.rir);
    wet = FftConvolve(dry, rir.ir.h);
    if (spec.max_tail_s >= 0.0) {
      const std::size_t keep =
          dry.size() + static_cast<std::size_t>(std::lround(spec.max_tail_s * fs));
      if (wet.size() > keep) wet.resize(keep);
    }
    out.labels = rir.labels;
    mtf = rir.mtf;
    out.ir = std::move(rir.ir);
  } else {
    wet = dry;
    mtf = ComputeModulationTransfer(ImpulseResponse({1.0}, fs));
    out.labels.t60_s = kT60FloorS;
    out.labels.drr_db = kRatioCapDb;
    out.labels.c50_db = kRatioCapDb;
  }

  std::vector<double> noise(wet.size(), 0.0);
  if (std::isfinite(spec.snr_db)) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (double& v : noise) v = gauss(rng);
    const double k =
        std::sqrt(Energy(wet) / (Energy(noise) * std::pow(10.0, spec.snr_db / 10.0)));
    for (double& v : noise) v *= k;
  }

  double gain = std::pow(10.0, spec.gain_db / 20.0);
  double peak = 0.0;
  for (std::size_t i = 0; i < wet.size(); ++i) {
    peak = std::max(peak, std::abs(gain * (wet[i] + noise[i])));
  }
  if (peak > 1.0) gain *= std::pow(10.0, kPeakCeilingDbfs / 20.0) / peak;
  for (double& v : wet) v *= gain;
  for (double& v : noise) v *= gain;

  std::vector<double> mix(wet.size());
  for (std::size_t i = 0; i < wet.size(); ++i) mix[i] = wet[i] + noise[i];
  out.mix = ToAudio(mix, fs);
  out.speech = ToAudio(wet, fs);
  out.noise = ToAudio(noise, fs);

  // Labels are measured on the float components actually stored.
  const std::vector<double> wet_f(out.speech.samples.begin(), out.speech.samples.end());
  const std::vector<double> noise_f(out.noise.samples.begin(), out.noise.samples.end());
  out.labels.snr_db = std::min(SnrOfMix(wet_f, noise_f), kSnrLabelCapDb);
  std::array<double, kStiBands> band_snr;
  if (std::isfinite(spec.snr_db)) {
    band_snr = BandSnrDb(wet_f, noise_f, fs);
  } else {
    band_snr.fill(kInfiniteSnr);
  }
  out.labels.sti = StiFromTransfer(mtf, band_snr);
  return out;
}

double ProxyMos(const AcousticLabels& labels) {
  const double logistic = 1.0 / (1.0 + std::exp(-(labels.snr_db - 10.0) / 5.0));
  return std::clamp(1.0 + 4.0 * labels.sti * logistic, 1.0, 5.0);
}

CorpusRow SynthesizeRow(const CorpusOptions& options,
                        const std::vector<AudioBuffer>& sources, Role role,
                        uint64_t seed, std::size_t index) {
  if (sources.empty()) throw InvalidArgument("no speech sources");
  const uint64_t row_seed = DeriveSeed(seed, index);
  std::mt19937_64 rng(row_seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * u(rng); };

  const std::size_t source_index =
      std::min(sources.size() - 1, static_cast<std::size_t>(u(rng) * sources.size()));
  const double t60 = std::exp(uniform(std::log(options.t60_min_s),
                                      std::log(options.t60_max_s)));
  const double drr = uniform(options.drr_min_db, options.drr_max_db);
  const bool clean = u(rng) < options.clean_fraction;
  const double snr = uniform(options.snr_min_db, options.snr_max_db);
  const double gain = uniform(options.gain_min_db, options.gain_max_db);

  AudioBuffer speech = sources[source_index];
  if (options.max_speech_s > 0.0) {
    const std::size_t keep = static_cast<std::size_t>(
        std::lround(options.max_speech_s * speech.sample_rate_hz));
    if (speech.samples.size() > keep) speech.samples.resize(keep);
  }

  DegradationSpec spec;
  RirSpec rir;
  rir.t60_s = t60;
  rir.drr_db = drr;
  rir.sample_rate_hz = kModelSampleRateHz;
  rir.length_s = std::max(options.rir_length_factor * t60, options.rir_min_length_s);
  rir.seed = DeriveSeed(row_seed, 1);
  spec.rir = rir;
  spec.snr_db = clean ? kInfiniteSnr : snr;
  spec.gain_db = gain;
  spec.max_tail_s = options.max_tail_s;

  CorpusRow row;
  row.role = role;
  row.audio = Degrade(speech, spec, DeriveSeed(row_seed, 2));
  row.mos = ProxyMos(row.audio.labels);
  return row;
}

std::vector<AudioBuffer> LoadSpeechDir(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) {
    throw InvalidArgument("speech directory '" + dir + "' does not exist");
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".wav") {
      files.push_back(entry.path());
    }
  }
  if (files.empty()) {
    throw InvalidArgument("speech directory '" + dir + "' holds no .wav files");
  }
  std::sort(files.begin(), files.end());
  std::vector<AudioBuffer> out;
  for (const auto& f : files) {
    out.push_back(Resample(LoadWav(f.string()), kModelSampleRateHz));
  }
  return out;
}

DatasetManifest BuildCorpus(int n_mos, int n_acoustics,
                            const std::vector<AudioBuffer>& sources,
                            const std::string& out_dir, uint64_t seed,
                            const CorpusOptions& options) {
  namespace fs = std::filesystem;
  if (sources.empty()) throw InvalidArgument("no speech sources");
  if (n_mos < 0 || n_acoustics < 0) throw InvalidArgument("negative row count");
  fs::create_directories(fs::path(out_dir) / "audio");
  if (options.write_components) fs::create_directories(fs::path(out_dir) / "components");

  const std::size_t total = static_cast<std::size_t>(n_mos) + n_acoustics;
  DatasetManifest manifest;
  manifest.base_dir = out_dir;
  manifest.rows.resize(total);

  const auto work = [&](std::size_t i) {
    const Role role = i < static_cast<std::size_t>(n_mos) ? Role::kMos : Role::kAcoustics;
    const CorpusRow row = SynthesizeRow(options, sources, role, seed, i);
    char stem[32];
    std::snprintf(stem, sizeof(stem), "row_%06zu", i);
    ManifestRow& m = manifest.rows[i];
    m.path = std::string("audio/") + stem + ".wav";
    m.role = role;
    SaveWav((fs::path(out_dir) / m.path).string(), row.audio.mix);
    if (options.write_components) {
      SaveWav((fs::path(out_dir) / "components" / (std::string(stem) + "_speech.wav")).string(),
              row.audio.speech);
      AudioBuffer ir;
      ir.sample_rate_hz = row.audio.ir->sample_rate_hz;
      ir.samples.assign(row.audio.ir->h.begin(), row.audio.ir->h.end());
      SaveWav((fs::path(out_dir) / "components" / (std::string(stem) + "_ir.wav")).string(), ir);
    }
    const AcousticLabels& l = row.audio.labels;
    if (role == Role::kMos) {
      m.mos = row.mos;
    } else {
      m.snr_db = l.snr_db;
      m.sti = l.sti;
      m.t60_s = l.t60_s;
      m.drr_db = l.drr_db;
      m.c50_db = l.c50_db;
    }
  };

  const int threads = std::max(1, options.threads);
  if (threads == 1) {
    for (std::size_t i = 0; i < total; ++i) work(i);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        try {
          for (std::size_t i = t; i < total; i += threads) work(i);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  WriteManifest((fs::path(out_dir) / "manifest.csv").string(), manifest);
  return manifest;
}

DatasetManifest BuildCorpus(int n_mos, int n_acoustics,
                            const std::string& speech_dir,
                            const std::string& out_dir, uint64_t seed,
                            const CorpusOptions& options) {
  return BuildCorpus(n_mos, n_acoustics, LoadSpeechDir(speech_dir), out_dir,
                     seed, options);
}

}  // namespace mosra
