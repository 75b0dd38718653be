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

#include "mosra/model.h"

#include <algorithm>
#include <cmath>

#include "mosra/errors.h"

namespace mosra {

using ad::Tensor;

const char* TaskName(Task task) {
  switch (task) {
    case Task::kMos: return "mos";
    case Task::kSnr: return "snr_db";
    case Task::kSti: return "sti";
    case Task::kT60: return "t60_s";
    case Task::kDrr: return "drr_db";
    case Task::kC50: return "c50_db";
  }
  return "?";
}

double& Prediction::operator[](Task task) {
  switch (task) {
    case Task::kMos: return mos;
    case Task::kSnr: return snr_db;
    case Task::kSti: return sti;
    case Task::kT60: return t60_s;
    case Task::kDrr: return drr_db;
    case Task::kC50: return c50_db;
  }
  return mos;
}

double Prediction::operator[](Task task) const {
  return const_cast<Prediction&>(*this)[task];
}

void ModelConfig::Validate() const {
  if (n_mels < 1 || segment_width < 1) throw InvalidArgument("model input size must be positive");
  if (cnn_channels.empty()) throw InvalidArgument("CNN needs at least one block");
  int h = n_mels, w = segment_width;
  for (std::size_t b = 0; b < cnn_channels.size(); ++b) {
    if (cnn_channels[b] < 1) throw InvalidArgument("CNN channel counts must be positive");
    if (std::find(pool_after.begin(), pool_after.end(), static_cast<int>(b)) != pool_after.end()) {
      h /= 2;
      w /= 2;
      if (h < 1 || w < 1) {
        throw InvalidArgument("input " + std::to_string(n_mels) + "x" +
                              std::to_string(segment_width) + " too small for the pooling stages");
      }
    }
  }
  for (const EncoderConfig* e : {&shared, &head}) {
    if (e->layers < 0 || e->d_model < 1 || e->d_ff < 1) {
      throw InvalidArgument("encoder sizes must be positive");
    }
    if (e->heads != 1) throw InvalidArgument("only single-head attention is supported");
  }
  if (pool_hidden < 1) throw InvalidArgument("pooling width must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw InvalidArgument("dropout must lie in [0, 1)");
}

template <typename T>
SegmentBatch<T> MakeBatch(std::span<const SegmentTensor* const> utterances) {
  if (utterances.empty()) throw InvalidArgument("empty batch");
  const int mels = utterances.front()->n_mels;
  const int width = utterances.front()->width;
  std::size_t total = 0;
  SegmentBatch<T> batch;
  for (const SegmentTensor* u : utterances) {
    if (u->n_mels != mels || u->width != width || u->num_segments < 1) {
      throw ShapeError("batch mixes segment shapes");
    }
    total += u->num_segments;
    batch.counts.push_back(u->num_segments);
  }
  std::vector<T> values;
  values.reserve(total * mels * width);
  for (const SegmentTensor* u : utterances) {
    values.insert(values.end(), u->values.begin(), u->values.end());
  }
  batch.segments = Tensor<T>({static_cast<int>(total), 1, mels, width}, std::move(values));
  return batch;
}

template <typename T>
MosraNet<T>::MosraNet(ModelConfig config, uint64_t seed) : config_(std::move(config)) {
  config_.Validate();
  std::mt19937_64 rng(seed);

  input_bn_g_ = AddConst("cnn.input_bn.gamma", {1}, 1.0);
  input_bn_b_ = AddConst("cnn.input_bn.beta", {1}, 0.0);
  stats_.push_back({"cnn.input_bn", {{T(0)}, {T(1)}}});
  int in = 1;
  for (std::size_t b = 0; b < config_.cnn_channels.size(); ++b) {
    const int out = config_.cnn_channels[b];
    const std::string prefix = "cnn.block" + std::to_string(b);
    conv_w_.push_back(AddParam(prefix + ".conv.weight", {out, in, 3, 3}, rng,
                               std::sqrt(2.0 / (in * 9)), true));
    bn_g_.push_back(AddConst(prefix + ".bn.gamma", {out}, 1.0));
    bn_b_.push_back(AddConst(prefix + ".bn.beta", {out}, 0.0));
    stats_.push_back({prefix + ".bn", {std::vector<T>(out, T(0)), std::vector<T>(out, T(1))}});
    in = out;
  }
  const int d = config_.shared.d_model;
  cnn_proj_w_ = AddParam("cnn.proj.weight", {in, d}, rng, 1.0 / std::sqrt(in), false);
  cnn_proj_b_ = AddParam("cnn.proj.bias", {d}, rng, 1.0 / std::sqrt(in), false);

  for (int l = 0; l < config_.shared.layers; ++l) {
    shared_.push_back(AddEncoderLayer("shared.layer" + std::to_string(l), config_.shared, rng));
  }

  const int hd = config_.head.d_model;
  for (Task task : kAllTasks) {
    HeadParams& h = heads_[TaskIndex(task)];
    const std::string prefix = std::string("head.") + TaskName(task);
    h.first_param = static_cast<int>(params_.size());
    h.proj_w = AddParam(prefix + ".proj.weight", {d, hd}, rng, 1.0 / std::sqrt(d), false);
    h.proj_b = AddParam(prefix + ".proj.bias", {hd}, rng, 1.0 / std::sqrt(d), false);
    for (int l = 0; l < config_.head.layers; ++l) {
      h.encoder.push_back(
          AddEncoderLayer(prefix + ".layer" + std::to_string(l), config_.head, rng));
    }
    const int ph = config_.pool_hidden;
    h.pool1_w = AddParam(prefix + ".pool.hidden.weight", {hd, ph}, rng, 1.0 / std::sqrt(hd), false);
    h.pool1_b = AddParam(prefix + ".pool.hidden.bias", {ph}, rng, 1.0 / std::sqrt(hd), false);
    h.pool2_w = AddParam(prefix + ".pool.score.weight", {ph, 1}, rng, 1.0 / std::sqrt(ph), false);
    h.pool2_b = AddParam(prefix + ".pool.score.bias", {1}, rng, 1.0 / std::sqrt(ph), false);
    h.out_w = AddParam(prefix + ".out.weight", {hd, 1}, rng, 1.0 / std::sqrt(hd), false);
    // MOS is trained on the raw 1..5 scale; start it mid-scale.
    h.out_b = task == Task::kMos ? AddConst(prefix + ".out.bias", {1}, 3.0)
                                 : AddConst(prefix + ".out.bias", {1}, 0.0);
    h.end_param = static_cast<int>(params_.size());
  }
}

template <typename T>
int MosraNet<T>::AddParam(const std::string& name, ad::Shape shape, std::mt19937_64& rng,
                          double init_scale, bool normal) {
  std::vector<T> values(ad::NumElements(shape));
  if (normal) {
    std::normal_distribution<double> dist(0.0, init_scale);
    for (T& v : values) v = static_cast<T>(dist(rng));
  } else {
    std::uniform_real_distribution<double> dist(-init_scale, init_scale);
    for (T& v : values) v = static_cast<T>(dist(rng));
  }
  params_.push_back({name, Tensor<T>(std::move(shape), std::move(values), true)});
  return static_cast<int>(params_.size()) - 1;
}

template <typename T>
int MosraNet<T>::AddConst(const std::string& name, ad::Shape shape, double value) {
  std::vector<T> values(ad::NumElements(shape), static_cast<T>(value));
  params_.push_back({name, Tensor<T>(std::move(shape), std::move(values), true)});
  return static_cast<int>(params_.size()) - 1;
}

template <typename T>
typename MosraNet<T>::EncoderLayerParams MosraNet<T>::AddEncoderLayer(
    const std::string& prefix, const EncoderConfig& cfg, std::mt19937_64& rng) {
  const int d = cfg.d_model, ff = cfg.d_ff;
  const double sd = 1.0 / std::sqrt(d), sff = 1.0 / std::sqrt(ff);
  EncoderLayerParams p;
  p.wq = AddParam(prefix + ".attn.q.weight", {d, d}, rng, sd, false);
  p.bq = AddParam(prefix + ".attn.q.bias", {d}, rng, sd, false);
  p.wk = AddParam(prefix + ".attn.k.weight", {d, d}, rng, sd, false);
  p.bk = AddParam(prefix + ".attn.k.bias", {d}, rng, sd, false);
  p.wv = AddParam(prefix + ".attn.v.weight", {d, d}, rng, sd, false);
  p.bv = AddParam(prefix + ".attn.v.bias", {d}, rng, sd, false);
  p.wo = AddParam(prefix + ".attn.out.weight", {d, d}, rng, sd, false);
  p.bo = AddParam(prefix + ".attn.out.bias", {d}, rng, sd, false);
  p.ln1_g = AddConst(prefix + ".norm1.gamma", {d}, 1.0);
  p.ln1_b = AddConst(prefix + ".norm1.beta", {d}, 0.0);
  p.ff1_w = AddParam(prefix + ".ff1.weight", {d, ff}, rng, sd, false);
  p.ff1_b = AddParam(prefix + ".ff1.bias", {ff}, rng, sd, false);
  p.ff2_w = AddParam(prefix + ".ff2.weight", {ff, d}, rng, sff, false);
  p.ff2_b = AddParam(prefix + ".ff2.bias", {d}, rng, sff, false);
  p.ln2_g = AddConst(prefix + ".norm2.gamma", {d}, 1.0);
  p.ln2_b = AddConst(prefix + ".norm2.beta", {d}, 0.0);
  return p;
}

template <typename T>
Tensor<T> MosraNet<T>::Cnn(const Tensor<T>& segments, std::vector<NamedStats>* update,
                           std::mt19937_64* /*rng*/) const {
  if (segments.rank() != 4 || segments.dim(1) != 1 || segments.dim(2) != config_.n_mels ||
      segments.dim(3) != config_.segment_width) {
    throw ShapeError("CNN expects segments [S, 1, " + std::to_string(config_.n_mels) + ", " +
                     std::to_string(config_.segment_width) + "], got " +
                     ad::ShapeString(segments.shape()));
  }
  const auto stats_update = [update](std::size_t i) {
    return update ? &(*update)[i].stats : nullptr;
  };
  Tensor<T> h = ad::BatchNorm2d(segments, P(input_bn_g_), P(input_bn_b_), stats_[0].stats,
                                stats_update(0));
  for (std::size_t b = 0; b < conv_w_.size(); ++b) {
    h = ad::Conv2d(h, P(conv_w_[b]), Tensor<T>(), 1, 1);
    h = ad::BatchNorm2d(h, P(bn_g_[b]), P(bn_b_[b]), stats_[b + 1].stats, stats_update(b + 1));
    h = ad::Relu(h);
    if (std::find(config_.pool_after.begin(), config_.pool_after.end(), static_cast<int>(b)) !=
        config_.pool_after.end()) {
      h = ad::MaxPool2d(h, 2);
    }
  }
  return ad::Linear(ad::GlobalAvgPool(h), P(cnn_proj_w_), P(cnn_proj_b_));
}

template <typename T>
Tensor<T> MosraNet<T>::CnnForward(const Tensor<T>& segments) const {
  return Cnn(segments, nullptr, nullptr);
}

template <typename T>
Tensor<T> MosraNet<T>::EncoderLayer(const Tensor<T>& x, const EncoderLayerParams& p,
                                    std::mt19937_64* rng) const {
  const T drop = static_cast<T>(config_.dropout);
  const int d = x.dim(1);
  const Tensor<T> q = ad::Linear(x, P(p.wq), P(p.bq));
  const Tensor<T> k = ad::Linear(x, P(p.wk), P(p.bk));
  const Tensor<T> v = ad::Linear(x, P(p.wv), P(p.bv));
  Tensor<T> attn = ad::SoftmaxRows(ad::Scale(ad::MatMulTransB(q, k), T(1) / std::sqrt(T(d))));
  attn = ad::Dropout(attn, drop, rng);
  const Tensor<T> mixed = ad::Linear(ad::MatMul(attn, v), P(p.wo), P(p.bo));
  Tensor<T> h = ad::LayerNorm(ad::Add(x, ad::Dropout(mixed, drop, rng)), P(p.ln1_g), P(p.ln1_b));
  Tensor<T> ff = ad::Dropout(ad::Relu(ad::Linear(h, P(p.ff1_w), P(p.ff1_b))), drop, rng);
  ff = ad::Linear(ff, P(p.ff2_w), P(p.ff2_b));
  return ad::LayerNorm(ad::Add(h, ad::Dropout(ff, drop, rng)), P(p.ln2_g), P(p.ln2_b));
}

template <typename T>
Tensor<T> MosraNet<T>::SharedEncode(const Tensor<T>& features, std::mt19937_64* rng) const {
  const int n = features.dim(0), d = features.dim(1);
  if (d != config_.shared.d_model) {
    throw ShapeError("shared encoder expects width " + std::to_string(config_.shared.d_model) +
                     ", got " + ad::ShapeString(features.shape()));
  }
  std::vector<T> pe(static_cast<std::size_t>(n) * d);
  for (int pos = 0; pos < n; ++pos) {
    for (int i = 0; i < d; ++i) {
      const double freq = std::pow(10000.0, -static_cast<double>(i - i % 2) / d);
      pe[pos * d + i] = static_cast<T>(i % 2 == 0 ? std::sin(pos * freq) : std::cos(pos * freq));
    }
  }
  Tensor<T> x = ad::Add(features, Tensor<T>({n, d}, std::move(pe)));
  for (const EncoderLayerParams& layer : shared_) x = EncoderLayer(x, layer, rng);
  return x;
}

template <typename T>
Tensor<T> MosraNet<T>::HeadForward(const Tensor<T>& context, Task task, std::mt19937_64* rng,
                                   Tensor<T>* pool_weights) const {
  const HeadParams& h = heads_[TaskIndex(task)];
  Tensor<T> x = ad::Linear(context, P(h.proj_w), P(h.proj_b));
  for (const EncoderLayerParams& layer : h.encoder) x = EncoderLayer(x, layer, rng);
  const int n = x.dim(0);
  const Tensor<T> scores =
      ad::Linear(ad::Relu(ad::Linear(x, P(h.pool1_w), P(h.pool1_b))), P(h.pool2_w), P(h.pool2_b));
  const Tensor<T> weights = ad::SoftmaxRows(ad::Reshape(scores, {1, n}));
  if (pool_weights) *pool_weights = weights;
  return ad::Linear(ad::MatMul(weights, x), P(h.out_w), P(h.out_b));
}

template <typename T>
TaskOutputs<T> MosraNet<T>::Run(const SegmentBatch<T>& batch, std::vector<NamedStats>* update,
                                std::mt19937_64* rng) const {
  const Tensor<T> features = Cnn(batch.segments, update, rng);
  std::array<std::vector<Tensor<T>>, kNumTasks> outputs;
  int offset = 0;
  for (int count : batch.counts) {
    const Tensor<T> context = SharedEncode(ad::SliceRows(features, offset, count), rng);
    offset += count;
    for (Task task : kAllTasks) {
      outputs[TaskIndex(task)].push_back(HeadForward(context, task, rng));
    }
  }
  if (offset != features.dim(0)) {
    throw ShapeError("segment counts sum to " + std::to_string(offset) + " but batch holds " +
                     std::to_string(features.dim(0)) + " segments");
  }
  TaskOutputs<T> result;
  for (int t = 0; t < kNumTasks; ++t) result.per_task[t] = ad::Stack(outputs[t]);
  return result;
}

template <typename T>
TaskOutputs<T> MosraNet<T>::Forward(const SegmentBatch<T>& batch) const {
  return Run(batch, nullptr, nullptr);
}

template <typename T>
TaskOutputs<T> MosraNet<T>::TrainForward(const SegmentBatch<T>& batch, std::mt19937_64* rng) {
  return Run(batch, &stats_, rng);
}

template <typename T>
std::vector<Tensor<T>> MosraNet<T>::ParameterTensors() const {
  std::vector<Tensor<T>> out;
  for (const NamedTensor& p : params_) out.push_back(p.tensor);
  return out;
}

template <typename T>
std::vector<Tensor<T>> MosraNet<T>::HeadParameters(Task task) const {
  const HeadParams& h = heads_[TaskIndex(task)];
  std::vector<Tensor<T>> out;
  for (int i = h.first_param; i < h.end_param; ++i) out.push_back(params_[i].tensor);
  return out;
}

template <typename T>
long long MosraNet<T>::ParamCount() const {
  long long total = 0;
  for (const NamedTensor& p : params_) total += static_cast<long long>(p.tensor.size());
  return total;
}

template <typename T>
double MosraNet<T>::Denormalize(Task task, double normalized) const {
  if (task == Task::kMos) return normalized;
  const LabelNorm& n = label_norm_[TaskIndex(task) - 1];
  return normalized * n.std + n.mean;
}

template <typename T>
double MosraNet<T>::Normalize(Task task, double physical) const {
  if (task == Task::kMos) return physical;
  const LabelNorm& n = label_norm_[TaskIndex(task) - 1];
  return (physical - n.mean) / n.std;
}

template <typename T>
typename MosraNet<T>::Snapshot MosraNet<T>::TakeSnapshot() const {
  Snapshot s;
  for (const NamedTensor& p : params_) {
    s.params.emplace_back(p.tensor.data().begin(), p.tensor.data().end());
  }
  for (const NamedStats& st : stats_) s.stats.push_back(st.stats);
  return s;
}

template <typename T>
void MosraNet<T>::RestoreSnapshot(const Snapshot& snapshot) {
  if (snapshot.params.size() != params_.size() || snapshot.stats.size() != stats_.size()) {
    throw InvalidArgument("snapshot does not match model layout");
  }
  for (std::size_t i = 0; i < params_.size(); ++i) {
    std::copy(snapshot.params[i].begin(), snapshot.params[i].end(),
              params_[i].tensor.data().begin());
  }
  for (std::size_t i = 0; i < stats_.size(); ++i) stats_[i].stats = snapshot.stats[i];
}

template class MosraNet<float>;
template class MosraNet<double>;
template SegmentBatch<float> MakeBatch(std::span<const SegmentTensor* const>);
template SegmentBatch<double> MakeBatch(std::span<const SegmentTensor* const>);

Prediction Predict(const MosraModel& model, const SegmentTensor& segments) {
  ad::NoGradGuard no_grad;
  const SegmentTensor* one[] = {&segments};
  const TaskOutputs<float> out = model.Forward(MakeBatch<float>(one));
  Prediction p;
  for (Task task : kAllTasks) {
    p[task] = model.Denormalize(task, out.per_task[TaskIndex(task)].data()[0]);
  }
  return p;
}

Prediction Predict(const MosraModel& model, const AudioBuffer& audio,
                   const FrontendConfig& frontend) {
  return Predict(model, Featurize(audio, frontend));
}

}  // namespace mosra
