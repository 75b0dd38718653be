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

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "mosra/errors.h"
#include "mosra/model.h"

namespace mosra {
namespace {

using nlohmann::json;

constexpr char kMagic[] = "MOSRA1";
constexpr std::size_t kMagicSize = 6;
constexpr int kFormatVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "model files are written in host byte order, which must be little-endian");

json EncoderToJson(const EncoderConfig& e) {
  return {{"layers", e.layers}, {"d_model", e.d_model}, {"d_ff", e.d_ff}, {"heads", e.heads}};
}

EncoderConfig EncoderFromJson(const json& j) {
  EncoderConfig e;
  e.layers = j.at("layers").get<int>();
  e.d_model = j.at("d_model").get<int>();
  e.d_ff = j.at("d_ff").get<int>();
  e.heads = j.at("heads").get<int>();
  return e;
}

json ConfigToJson(const ModelConfig& c) {
  return {{"n_mels", c.n_mels},
          {"segment_width", c.segment_width},
          {"cnn_channels", c.cnn_channels},
          {"pool_after", c.pool_after},
          {"shared", EncoderToJson(c.shared)},
          {"head", EncoderToJson(c.head)},
          {"pool_hidden", c.pool_hidden},
          {"dropout", c.dropout}};
}

ModelConfig ConfigFromJson(const json& j) {
  ModelConfig c;
  c.n_mels = j.at("n_mels").get<int>();
  c.segment_width = j.at("segment_width").get<int>();
  c.cnn_channels = j.at("cnn_channels").get<std::vector<int>>();
  c.pool_after = j.at("pool_after").get<std::vector<int>>();
  c.shared = EncoderFromJson(j.at("shared"));
  c.head = EncoderFromJson(j.at("head"));
  c.pool_hidden = j.at("pool_hidden").get<int>();
  c.dropout = j.at("dropout").get<double>();
  return c;
}

// Every stored array in file order: parameters first, then the running mean
// and variance of each batch norm layer.
struct Entry {
  std::string name;
  ad::Shape shape;
  const float* read;
  float* write;
};

std::vector<Entry> Entries(MosraModel& model) {
  std::vector<Entry> out;
  for (auto& p : model.parameters()) {
    out.push_back({p.name, p.tensor.shape(), p.tensor.data().data(), p.tensor.data().data()});
  }
  for (auto& s : model.batch_norm_stats()) {
    const int c = static_cast<int>(s.stats.mean.size());
    out.push_back({s.name + ".running_mean", {c}, s.stats.mean.data(), s.stats.mean.data()});
    out.push_back({s.name + ".running_var", {c}, s.stats.var.data(), s.stats.var.data()});
  }
  return out;
}

}  // namespace

void SaveModel(const MosraModel& model, const std::string& path) {
  // Entries() only needs mutable access for loading; nothing is modified here.
  std::vector<Entry> entries = Entries(const_cast<MosraModel&>(model));
  json meta;
  meta["version"] = kFormatVersion;
  meta["config"] = ConfigToJson(model.config());
  json norm = json::object();
  for (Task task : kAllTasks) {
    if (task == Task::kMos) continue;
    const LabelNorm& n = model.label_norm()[TaskIndex(task) - 1];
    norm[TaskName(task)] = {{"mean", n.mean}, {"std", n.std}};
  }
  meta["label_norm"] = norm;
  json index = json::array();
  for (const Entry& e : entries) index.push_back({{"name", e.name}, {"shape", e.shape}});
  meta["tensors"] = index;
  const std::string text = meta.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(kMagic, kMagicSize);
  const uint32_t len = static_cast<uint32_t>(text.size());
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const Entry& e : entries) {
    out.write(reinterpret_cast<const char*>(e.read),
              static_cast<std::streamsize>(ad::NumElements(e.shape) * sizeof(float)));
  }
  if (!out) throw IoError("failed writing '" + path + "'");
}

MosraModel LoadModel(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model file '" + path + "'");
  char magic[kMagicSize];
  if (!in.read(magic, kMagicSize) || std::memcmp(magic, kMagic, kMagicSize) != 0) {
    throw FormatError("'" + path + "' is not a MOSRA model file (bad magic)");
  }
  uint32_t len = 0;
  if (!in.read(reinterpret_cast<char*>(&len), sizeof(len))) {
    throw FormatError("'" + path + "': truncated header");
  }
  std::string text(len, '\0');
  if (!in.read(text.data(), len)) throw FormatError("'" + path + "': truncated metadata");

  json meta;
  ModelConfig config;
  std::array<LabelNorm, kNumAcousticTasks> norm;
  try {
    meta = json::parse(text);
    const int version = meta.at("version").get<int>();
    if (version != kFormatVersion) {
      throw FormatError("'" + path + "': unsupported format version " + std::to_string(version));
    }
    config = ConfigFromJson(meta.at("config"));
    for (Task task : kAllTasks) {
      if (task == Task::kMos) continue;
      const json& n = meta.at("label_norm").at(TaskName(task));
      norm[TaskIndex(task) - 1] = {n.at("mean").get<double>(), n.at("std").get<double>()};
    }
  } catch (const json::exception& e) {
    throw FormatError("'" + path + "': malformed metadata: " + e.what());
  }

  MosraModel model = [&] {
    try {
      return MosraModel(config);
    } catch (const InvalidArgument& e) {
      throw FormatError("'" + path + "': invalid model config: " + e.what());
    }
  }();
  model.set_label_norm(norm);

  std::vector<Entry> entries = Entries(model);
  const json& index = meta.at("tensors");
  if (!index.is_array() || index.size() != entries.size()) {
    throw FormatError("'" + path + "': tensor index does not match the model layout");
  }
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const Entry& e = entries[i];
    std::string name;
    ad::Shape shape;
    try {
      name = index[i].at("name").get<std::string>();
      shape = index[i].at("shape").get<ad::Shape>();
    } catch (const json::exception& ex) {
      throw FormatError("'" + path + "': malformed tensor index: " + ex.what());
    }
    if (name != e.name || shape != e.shape) {
      throw FormatError("'" + path + "': tensor " + std::to_string(i) + " is " + name + " " +
                        ad::ShapeString(shape) + ", expected " + e.name + " " +
                        ad::ShapeString(e.shape));
    }
    const std::streamsize bytes =
        static_cast<std::streamsize>(ad::NumElements(e.shape) * sizeof(float));
    if (!in.read(reinterpret_cast<char*>(e.write), bytes)) {
      throw FormatError("'" + path + "': truncated tensor data for " + e.name);
    }
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw FormatError("'" + path + "': trailing bytes after tensor data");
  }
  return model;
}

}  // namespace mosra
