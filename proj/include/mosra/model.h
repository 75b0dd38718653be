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

#ifndef MOSRA_MODEL_H_
#define MOSRA_MODEL_H_

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "mosra/autodiff/ops.h"
#include "mosra/autodiff/tensor.h"
#include "mosra/frontend.h"

namespace mosra {

enum class Task { kMos = 0, kSnr, kSti, kT60, kDrr, kC50 };
inline constexpr int kNumTasks = 6;
inline constexpr int kNumAcousticTasks = 5;
inline constexpr std::array<Task, kNumTasks> kAllTasks = {
    Task::kMos, Task::kSnr, Task::kSti, Task::kT60, Task::kDrr, Task::kC50};

const char* TaskName(Task task);
inline int TaskIndex(Task task) { return static_cast<int>(task); }

struct EncoderConfig {
  int layers = 2;
  int d_model = 64;
  int d_ff = 64;
  // Single-head attention only.
  int heads = 1;
};

struct ModelConfig {
  int n_mels = 48;
  int segment_width = 15;
  // 3x3 conv -> batch norm -> ReLU blocks; 2x2 max pool after the blocks
  // listed in pool_after (0-based).
  std::vector<int> cnn_channels = {16, 16, 32, 32, 160, 160};
  std::vector<int> pool_after = {1, 3, 5};
  EncoderConfig shared = {2, 64, 64, 1};
  EncoderConfig head = {1, 32, 32, 1};
  int pool_hidden = 32;
  double dropout = 0.1;

  // Throws InvalidArgument for inconsistent settings.
  void Validate() const;
};

// Mean and standard deviation of one acoustic label over the training set.
struct LabelNorm {
  double mean = 0.0;
  double std = 1.0;
};

// Acoustic values are in physical units; mos is the raw head output.
struct Prediction {
  double mos = 0.0;
  double snr_db = 0.0;
  double sti = 0.0;
  double t60_s = 0.0;
  double drr_db = 0.0;
  double c50_db = 0.0;

  double& operator[](Task task);
  double operator[](Task task) const;
};

// A mini-batch of utterances: all segments stacked as [S, 1, mels, width]
// plus the number of segments contributed by each utterance, in order.
template <typename T>
struct SegmentBatch {
  ad::Tensor<T> segments;
  std::vector<int> counts;
};

template <typename T>
SegmentBatch<T> MakeBatch(std::span<const SegmentTensor* const> utterances);

// Per-task outputs for a batch, each of shape {batch}. Acoustic outputs are
// in normalized units.
template <typename T>
struct TaskOutputs {
  std::array<ad::Tensor<T>, kNumTasks> per_task;
};

// Shared CNN + transformer trunk with six task heads. Scalar type T is float
// for training and inference and double for gradient checking.
template <typename T>
class MosraNet {
 public:
  struct NamedTensor {
    std::string name;
    ad::Tensor<T> tensor;
  };
  struct NamedStats {
    std::string name;
    ad::BatchNormStats<T> stats;
  };
  struct Snapshot {
    std::vector<std::vector<T>> params;
    std::vector<ad::BatchNormStats<T>> stats;
  };

  explicit MosraNet(ModelConfig config, uint64_t seed = 0);

  const ModelConfig& config() const { return config_; }

  // Evaluation mode: batch norm uses running statistics, dropout is off and
  // nothing in the model is modified.
  TaskOutputs<T> Forward(const SegmentBatch<T>& batch) const;
  // Training mode: batch statistics (folded into the running ones) and
  // dropout drawn from `rng`. A null rng disables dropout.
  TaskOutputs<T> TrainForward(const SegmentBatch<T>& batch, std::mt19937_64* rng);

  // Stages of the evaluation-mode forward pass, exposed for inspection and
  // testing. A non-null rng enables dropout.
  ad::Tensor<T> CnnForward(const ad::Tensor<T>& segments) const;
  ad::Tensor<T> SharedEncode(const ad::Tensor<T>& features, std::mt19937_64* rng = nullptr) const;
  ad::Tensor<T> HeadForward(const ad::Tensor<T>& context, Task task,
                            std::mt19937_64* rng = nullptr,
                            ad::Tensor<T>* pool_weights = nullptr) const;

  // Trainable tensors in a fixed order.
  const std::vector<NamedTensor>& parameters() const { return params_; }
  std::vector<NamedTensor>& parameters() { return params_; }
  std::vector<ad::Tensor<T>> ParameterTensors() const;
  const std::vector<NamedStats>& batch_norm_stats() const { return stats_; }
  std::vector<NamedStats>& batch_norm_stats() { return stats_; }
  // Parameters belonging to one task head.
  std::vector<ad::Tensor<T>> HeadParameters(Task task) const;

  long long ParamCount() const;

  const std::array<LabelNorm, kNumAcousticTasks>& label_norm() const { return label_norm_; }
  void set_label_norm(const std::array<LabelNorm, kNumAcousticTasks>& norm) { label_norm_ = norm; }
  // Physical value of an acoustic task from its normalized output.
  double Denormalize(Task task, double normalized) const;
  double Normalize(Task task, double physical) const;

  Snapshot TakeSnapshot() const;
  void RestoreSnapshot(const Snapshot& snapshot);

 private:
  struct EncoderLayerParams {
    int wq, bq, wk, bk, wv, bv, wo, bo, ln1_g, ln1_b, ff1_w, ff1_b, ff2_w, ff2_b, ln2_g, ln2_b;
  };
  struct HeadParams {
    int proj_w, proj_b;
    std::vector<EncoderLayerParams> encoder;
    int pool1_w, pool1_b, pool2_w, pool2_b, out_w, out_b;
    int first_param, end_param;
  };

  int AddParam(const std::string& name, ad::Shape shape, std::mt19937_64& rng,
               double init_scale, bool normal);
  int AddConst(const std::string& name, ad::Shape shape, double value);
  EncoderLayerParams AddEncoderLayer(const std::string& prefix, const EncoderConfig& cfg,
                                     std::mt19937_64& rng);
  const ad::Tensor<T>& P(int index) const { return params_[index].tensor; }

  ad::Tensor<T> Cnn(const ad::Tensor<T>& segments, std::vector<NamedStats>* update,
                    std::mt19937_64* rng) const;
  ad::Tensor<T> EncoderLayer(const ad::Tensor<T>& x, const EncoderLayerParams& p,
                             std::mt19937_64* rng) const;
  TaskOutputs<T> Run(const SegmentBatch<T>& batch, std::vector<NamedStats>* update,
                     std::mt19937_64* rng) const;

  ModelConfig config_;
  std::vector<NamedTensor> params_;
  std::vector<NamedStats> stats_;
  std::array<LabelNorm, kNumAcousticTasks> label_norm_;

  int input_bn_g_ = -1, input_bn_b_ = -1;
  std::vector<int> conv_w_, bn_g_, bn_b_;
  int cnn_proj_w_ = -1, cnn_proj_b_ = -1;
  std::vector<EncoderLayerParams> shared_;
  std::array<HeadParams, kNumTasks> heads_;
};

using MosraModel = MosraNet<float>;

// Featurizes `audio` (resampling to 48 kHz when needed) and runs the model
// in evaluation mode. Throws InvalidArgument for audio shorter than one FFT
// window.
Prediction Predict(const MosraModel& model, const AudioBuffer& audio,
                   const FrontendConfig& frontend = {});
Prediction Predict(const MosraModel& model, const SegmentTensor& segments);

// Model container: "MOSRA1", u32 little-endian JSON length, JSON metadata
// (config, label_norm, tensor index), then little-endian float32 blobs.
void SaveModel(const MosraModel& model, const std::string& path);
MosraModel LoadModel(const std::string& path);

}  // namespace mosra

#endif  // MOSRA_MODEL_H_
