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

#include "mosra/run_config.h"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "json.hpp"
#include "mosra/errors.h"

namespace mosra {
namespace {

using nlohmann::json;

// Binds JSON keys of one object to fields; Read rejects keys with no binding.
class Section {
 public:
  explicit Section(std::string path) : path_(std::move(path)) {}

  template <typename V>
  Section& Field(const std::string& key, V& dst) {
    readers_[key] = [&dst](const json& j) {
      if constexpr (std::is_same_v<V, std::optional<std::string>>) {
        if (j.is_null()) {
          dst.reset();
        } else {
          dst = j.get<std::string>();
        }
      } else {
        dst = j.get<V>();
      }
    };
    writers_.emplace_back(key, [&dst]() -> json {
      if constexpr (std::is_same_v<V, std::optional<std::string>>) {
        return dst ? json(*dst) : json(nullptr);
      } else {
        return json(dst);
      }
    });
    return *this;
  }

  Section& Child(const std::string& key, Section& child) {
    readers_[key] = [&child](const json& j) { child.Read(j); };
    writers_.emplace_back(key, [&child] { return child.Write(); });
    return *this;
  }

  void Read(const json& j) const {
    if (!j.is_object()) throw InvalidArgument("config: '" + path_ + "' must be an object");
    for (const auto& [key, value] : j.items()) {
      const auto it = readers_.find(key);
      if (it == readers_.end()) {
        throw InvalidArgument("config: unknown key '" + Join(key) + "'");
      }
      try {
        it->second(value);
      } catch (const json::exception& e) {
        throw InvalidArgument("config: bad value for '" + Join(key) + "': " + e.what());
      }
    }
  }

  json Write() const {
    json out = json::object();
    for (const auto& [key, writer] : writers_) out[key] = writer();
    return out;
  }

 private:
  std::string Join(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  std::string path_;
  std::map<std::string, std::function<void(const json&)>> readers_;
  std::vector<std::pair<std::string, std::function<json()>>> writers_;
};

// Owns the section tree bound to one RunConfig.
struct Schema {
  explicit Schema(RunConfig& c)
      : root(""), frontend("frontend"), model("model"), shared("model.shared"),
        head("model.head"), train("train"), loss("train.loss"), synth("synth"),
        corpus("synth.corpus"), paths("paths") {
    FrontendConfig& f = c.frontend;
    frontend.Field("n_mels", f.n_mels)
        .Field("fft_window_ms", f.fft_window_ms)
        .Field("hop_ms", f.hop_ms)
        .Field("f_min_hz", f.f_min_hz)
        .Field("f_max_hz", f.f_max_hz)
        .Field("segment_width_frames", f.segment_width_frames)
        .Field("segment_hop_frames", f.segment_hop_frames)
        .Field("log_floor_db", f.log_floor_db);
    ModelConfig& m = c.model;
    for (auto [sec, enc] : {std::pair{&shared, &m.shared}, std::pair{&head, &m.head}}) {
      sec->Field("layers", enc->layers)
          .Field("d_model", enc->d_model)
          .Field("d_ff", enc->d_ff)
          .Field("heads", enc->heads);
    }
    model.Field("cnn_channels", m.cnn_channels)
        .Field("pool_after", m.pool_after)
        .Child("shared", shared)
        .Child("head", head)
        .Field("pool_hidden", m.pool_hidden)
        .Field("dropout", m.dropout);
    TrainConfig& t = c.train;
    loss.Field("mos", t.weights.mos).Field("acoustics", t.weights.acoustics);
    train.Field("lr", t.lr)
        .Field("batch_size", t.batch_size)
        .Field("patience", t.patience)
        .Field("max_epochs", t.max_epochs)
        .Field("seed", t.seed)
        .Child("loss", loss);
    CorpusOptions& o = c.synth.corpus;
    corpus.Field("t60_min_s", o.t60_min_s)
        .Field("t60_max_s", o.t60_max_s)
        .Field("drr_min_db", o.drr_min_db)
        .Field("drr_max_db", o.drr_max_db)
        .Field("snr_min_db", o.snr_min_db)
        .Field("snr_max_db", o.snr_max_db)
        .Field("clean_fraction", o.clean_fraction)
        .Field("gain_min_db", o.gain_min_db)
        .Field("gain_max_db", o.gain_max_db)
        .Field("max_speech_s", o.max_speech_s)
        .Field("rir_length_factor", o.rir_length_factor)
        .Field("rir_min_length_s", o.rir_min_length_s)
        .Field("max_tail_s", o.max_tail_s)
        .Field("write_components", o.write_components)
        .Field("threads", o.threads);
    SynthConfig& s = c.synth;
    synth.Field("n_mos", s.n_mos)
        .Field("n_acoustics", s.n_acoustics)
        .Field("speech_dir", s.speech_dir)
        .Field("generated_sources", s.generated_sources)
        .Field("generated_source_s", s.generated_source_s)
        .Field("seed", s.seed)
        .Child("corpus", corpus);
    PathConfig& p = c.paths;
    paths.Field("train_manifest", p.train_manifest)
        .Field("val_manifest", p.val_manifest)
        .Field("model_out", p.model_out)
        .Field("history_csv", p.history_csv);
    root.Child("frontend", frontend)
        .Child("model", model)
        .Child("train", train)
        .Child("synth", synth)
        .Child("paths", paths);
  }

  Section root, frontend, model, shared, head, train, loss, synth, corpus, paths;
};

}  // namespace

RunConfig ParseRunConfig(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw InvalidArgument(std::string("config: invalid JSON: ") + e.what());
  }
  RunConfig config;
  Schema schema(config);
  schema.root.Read(j);
  // The model input shape always follows the frontend.
  config.model.n_mels = config.frontend.n_mels;
  config.model.segment_width = config.frontend.segment_width_frames;
  config.model.Validate();
  config.train.Validate();
  return config;
}

RunConfig LoadRunConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ParseRunConfig(ss.str());
}

std::string RunConfigToJson(const RunConfig& config) {
  RunConfig copy = config;
  Schema schema(copy);
  return schema.root.Write().dump(2);
}

}  // namespace mosra
