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

#ifndef MOSRA_RUN_CONFIG_H_
#define MOSRA_RUN_CONFIG_H_

#include <optional>
#include <string>

#include "mosra/frontend.h"
#include "mosra/model.h"
#include "mosra/synth.h"
#include "mosra/trainer.h"

namespace mosra {

struct SynthConfig {
  int n_mos = 500;
  int n_acoustics = 5000;
  // Directory of clean speech .wav files; unset means generated
  // speech-like sources.
  std::optional<std::string> speech_dir;
  // Number and length of generated sources when speech_dir is unset.
  int generated_sources = 64;
  double generated_source_s = 4.0;
  uint64_t seed = 0;
  CorpusOptions corpus;
};

struct PathConfig {
  std::optional<std::string> train_manifest;
  std::optional<std::string> val_manifest;
  std::optional<std::string> model_out;
  std::optional<std::string> history_csv;
};

// Experiment file. Every section and key is optional; missing keys keep
// their defaults and unknown keys are rejected.
struct RunConfig {
  FrontendConfig frontend;
  ModelConfig model;
  TrainConfig train;
  SynthConfig synth;
  PathConfig paths;
};

// Throws InvalidArgument naming the offending key.
RunConfig ParseRunConfig(const std::string& json_text);
RunConfig LoadRunConfig(const std::string& path);
std::string RunConfigToJson(const RunConfig& config);

}  // namespace mosra

#endif  // MOSRA_RUN_CONFIG_H_
