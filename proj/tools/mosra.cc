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

// Command-line driver: corpus synthesis, training, prediction, evaluation
// and model inspection.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "mosra/audio_io.h"
#include "mosra/errors.h"
#include "mosra/evaluator.h"
#include "mosra/manifest.h"
#include "mosra/model.h"
#include "mosra/run_config.h"
#include "mosra/synth.h"
#include "mosra/trainer.h"

namespace {

using namespace mosra;
using nlohmann::json;

RunConfig ConfigFrom(const std::string& path) {
  return path.empty() ? RunConfig{} : LoadRunConfig(path);
}

// Resident set figures from /proc, in KiB; zero where unavailable.
long ProcStatusKib(const std::string& field) {
  std::ifstream in("/proc/self/status");
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind(field + ":", 0) == 0) return std::stol(line.substr(field.size() + 1));
  }
  return 0;
}

void ResetPeakRss() {
  std::ofstream clear("/proc/self/clear_refs");
  clear << "5";
}

std::string Fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

struct SynthArgs {
  std::string config, out, speech_dir;
  std::optional<uint64_t> seed;
  std::optional<int> n_mos, n_acoustics, threads;
};

int RunSynth(const SynthArgs& a) {
  RunConfig cfg = ConfigFrom(a.config);
  SynthConfig& s = cfg.synth;
  if (a.seed) s.seed = *a.seed;
  if (a.n_mos) s.n_mos = *a.n_mos;
  if (a.n_acoustics) s.n_acoustics = *a.n_acoustics;
  if (a.threads) s.corpus.threads = *a.threads;
  if (!a.speech_dir.empty()) s.speech_dir = a.speech_dir;
  const std::vector<AudioBuffer> sources =
      s.speech_dir ? LoadSpeechDir(*s.speech_dir)
                   : GenerateSpeechSources(s.generated_sources, s.generated_source_s, s.seed);
  const DatasetManifest m = BuildCorpus(s.n_mos, s.n_acoustics, sources, a.out, s.seed, s.corpus);
  std::cerr << "wrote " << m.rows.size() << " rows to "
            << (std::filesystem::path(a.out) / "manifest.csv").string() << '\n';
  return 0;
}

struct TrainArgs {
  std::string config, train, val, out, history;
  bool mos_only = false;
  std::optional<uint64_t> seed;
  std::optional<int> epochs;
  bool quiet = false;
};

int RunTrain(const TrainArgs& a) {
  RunConfig cfg = ConfigFrom(a.config);
  std::string train_path = a.train, val_path = a.val, out_path = a.out, history = a.history;
  if (train_path.empty() && cfg.paths.train_manifest) train_path = *cfg.paths.train_manifest;
  if (val_path.empty() && cfg.paths.val_manifest) val_path = *cfg.paths.val_manifest;
  if (out_path.empty() && cfg.paths.model_out) out_path = *cfg.paths.model_out;
  if (history.empty() && cfg.paths.history_csv) history = *cfg.paths.history_csv;
  if (train_path.empty() || val_path.empty() || out_path.empty()) {
    throw InvalidArgument("train needs --train, --val and --out (or the matching paths.* keys)");
  }
  if (a.seed) cfg.train.seed = *a.seed;
  if (a.epochs) cfg.train.max_epochs = *a.epochs;
  if (a.mos_only) cfg.train.weights.acoustics = 0.0;

  const TrainingData train = LoadTrainingData(ReadManifest(train_path), cfg.frontend);
  const TrainingData val = LoadTrainingData(ReadManifest(val_path), cfg.frontend);
  std::cerr << "train: " << train.mos.size() << " MOS rows, " << train.acoustics.size()
            << " acoustics rows; val: " << val.mos.size() << " MOS rows\n";

  MosraModel model(cfg.model, cfg.train.seed);
  const FitResult fit = Fit(model, train, val.mos, cfg.train, [&](const EpochRecord& r) {
    if (!a.quiet) {
      std::cerr << "epoch " << r.epoch << "  train_loss " << Fixed(r.train_loss) << "  val_mos_mse "
                << Fixed(r.val_mos_mse) << "  (" << Fixed(r.seconds, 1) << " s)\n";
    }
  });
  SaveModel(model, out_path);
  if (!history.empty()) WriteHistoryCsv(history, fit.history);
  std::cerr << "best epoch " << fit.best_epoch << " (val MOS MSE " << Fixed(fit.best_val_mos_mse)
            << "), model written to " << out_path << '\n';
  return 0;
}

struct PredictArgs {
  std::string config, model, audio;
  bool json = false, bench = false;
};

int RunPredict(const PredictArgs& a) {
  const RunConfig cfg = ConfigFrom(a.config);
  const MosraModel model = LoadModel(a.model);
  ResetPeakRss();
  const long rss_before = ProcStatusKib("VmRSS");
  const auto t0 = std::chrono::steady_clock::now();
  const AudioBuffer audio = LoadWav(a.audio);
  const Prediction p = Predict(model, audio, cfg.frontend);
  const double ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  const long peak_extra = std::max(0L, ProcStatusKib("VmHWM") - rss_before);

  const double mos_display = std::clamp(p.mos, 1.0, 5.0);
  if (a.json) {
    json j = {{"mos", mos_display}, {"mos_raw", p.mos}, {"snr_db", p.snr_db}, {"sti", p.sti},
              {"t60_s", p.t60_s},   {"drr_db", p.drr_db}, {"c50_db", p.c50_db}};
    if (a.bench) j["bench"] = {{"wall_ms", ms}, {"peak_extra_kib", peak_extra}};
    std::cout << j.dump(2) << '\n';
  } else {
    std::cout << "mos     " << Fixed(mos_display, 3) << '\n'
              << "snr_db  " << Fixed(p.snr_db, 2) << '\n'
              << "sti     " << Fixed(p.sti, 3) << '\n'
              << "t60_s   " << Fixed(p.t60_s, 3) << '\n'
              << "drr_db  " << Fixed(p.drr_db, 2) << '\n'
              << "c50_db  " << Fixed(p.c50_db, 2) << '\n';
    if (a.bench) {
      std::cout << "wall_ms " << Fixed(ms, 1) << '\n'
                << "peak_extra_mib " << Fixed(peak_extra / 1024.0, 1) << '\n';
    }
  }
  return 0;
}

struct EvalArgs {
  std::string config, model, manifest, report, dataset;
};

int RunEval(const EvalArgs& a) {
  const RunConfig cfg = ConfigFrom(a.config);
  const MosraModel model = LoadModel(a.model);
  const TrainingData data = LoadTrainingData(ReadManifest(a.manifest), cfg.frontend);
  const std::string name =
      a.dataset.empty() ? std::filesystem::path(a.manifest).stem().string() : a.dataset;
  const std::vector<EvalReport> reports = {Evaluate(model, data, name)};
  PrintReportTable(std::cout, reports);
  if (!a.report.empty()) WriteReportCsv(a.report, reports);
  return 0;
}

struct InspectArgs {
  std::string model;
  bool json = false;
};

int RunInspect(const InspectArgs& a) {
  const MosraModel model = LoadModel(a.model);
  const ModelConfig& c = model.config();
  if (a.json) {
    json tensors = json::array();
    for (const auto& p : model.parameters()) {
      tensors.push_back({{"name", p.name}, {"shape", p.tensor.shape()}});
    }
    json norm = json::object();
    for (int t = 1; t < kNumTasks; ++t) {
      const LabelNorm& n = model.label_norm()[t - 1];
      norm[TaskName(static_cast<Task>(t))] = {{"mean", n.mean}, {"std", n.std}};
    }
    std::cout << json{{"param_count", model.ParamCount()},
                      {"cnn_channels", c.cnn_channels},
                      {"tensors", tensors},
                      {"label_norm", norm}}
                     .dump(2)
              << '\n';
    return 0;
  }
  for (const auto& p : model.parameters()) {
    std::cout << p.name << ' ' << ad::ShapeString(p.tensor.shape()) << ' ' << p.tensor.size()
              << '\n';
  }
  std::cout << "config: n_mels " << c.n_mels << ", segment_width " << c.segment_width
            << ", cnn_channels";
  for (int ch : c.cnn_channels) std::cout << ' ' << ch;
  std::cout << ", shared encoder " << c.shared.layers << "x d" << c.shared.d_model << " ff"
            << c.shared.d_ff << ", head encoder " << c.head.layers << "x d" << c.head.d_model
            << " ff" << c.head.d_ff << ", dropout " << c.dropout << '\n';
  std::cout << "label_norm:";
  for (int t = 1; t < kNumTasks; ++t) {
    const LabelNorm& n = model.label_norm()[t - 1];
    std::cout << ' ' << TaskName(static_cast<Task>(t)) << "=(" << n.mean << ", " << n.std << ')';
  }
  std::cout << '\n' << "total trainable parameters: " << model.ParamCount() << '\n';
  return 0;
}

struct SpeechArgs {
  std::string out;
  double seconds = 8.0;
  uint64_t seed = 0;
};

int RunSpeech(const SpeechArgs& a) {
  SaveWav(a.out, SynthesizeSpeechLike(a.seconds, a.seed), WavEncoding::kPcm16);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MOSRA: joint speech quality and room acoustics estimation"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Synthesize a labelled corpus");
  s->add_option("--config", synth.config, "JSON run config");
  s->add_option("--out", synth.out, "Output directory")->required();
  s->add_option("--seed", synth.seed, "Corpus seed (overrides synth.seed)");
  s->add_option("--n-mos", synth.n_mos, "Number of MOS rows");
  s->add_option("--n-acoustics", synth.n_acoustics, "Number of acoustics rows");
  s->add_option("--threads", synth.threads, "Worker threads for synthesis");
  s->add_option("--speech-dir", synth.speech_dir, "Directory of clean speech .wav files");

  TrainArgs train;
  auto* t = app.add_subcommand("train", "Train a model");
  t->add_option("--config", train.config, "JSON run config");
  t->add_option("--train", train.train, "Training manifest");
  t->add_option("--val", train.val, "Validation manifest");
  t->add_option("--out", train.out, "Output model file");
  t->add_option("--history", train.history, "Write per-epoch history CSV");
  t->add_flag("--mos-only", train.mos_only, "Train the MOS task only (acoustic weight 0)");
  t->add_option("--seed", train.seed, "Training seed");
  t->add_option("--epochs", train.epochs, "Maximum number of epochs");
  t->add_flag("--quiet", train.quiet, "Do not print per-epoch progress");

  PredictArgs predict;
  auto* p = app.add_subcommand("predict", "Predict MOS and room acoustics for one file");
  p->add_option("--config", predict.config, "JSON run config (frontend settings)");
  p->add_option("--model", predict.model, "Model file")->required();
  p->add_option("--audio", predict.audio, "WAV file")->required();
  p->add_flag("--json", predict.json, "Machine-readable output");
  p->add_flag("--bench", predict.bench, "Report wall-clock time and peak extra memory");

  EvalArgs eval;
  auto* e = app.add_subcommand("eval", "Score a model on a manifest");
  e->add_option("--config", eval.config, "JSON run config (frontend settings)");
  e->add_option("--model", eval.model, "Model file")->required();
  e->add_option("--manifest", eval.manifest, "Test manifest")->required();
  e->add_option("--report", eval.report, "Write the report as CSV");
  e->add_option("--dataset", eval.dataset, "Dataset name in the report");

  InspectArgs inspect;
  auto* i = app.add_subcommand("inspect", "Show tensors, parameter count and normalization");
  i->add_option("--model", inspect.model, "Model file")->required();
  i->add_flag("--json", inspect.json, "Machine-readable output");

  SpeechArgs speech;
  auto* g = app.add_subcommand("speech", "Write a speech-like test signal");
  g->add_option("--out", speech.out, "Output WAV file")->required();
  g->add_option("--seconds", speech.seconds, "Duration in seconds");
  g->add_option("--seed", speech.seed, "Generator seed");

  CLI11_PARSE(app, argc, argv);
  try {
    if (s->parsed()) return RunSynth(synth);
    if (t->parsed()) return RunTrain(train);
    if (p->parsed()) return RunPredict(predict);
    if (e->parsed()) return RunEval(eval);
    if (i->parsed()) return RunInspect(inspect);
    if (g->parsed()) return RunSpeech(speech);
  } catch (const std::exception& ex) {
    std::cerr << "mosra: error: " << ex.what() << '\n';
    return 1;
  }
  return 1;
}
