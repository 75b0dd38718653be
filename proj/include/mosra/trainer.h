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

#ifndef MOSRA_TRAINER_H_
#define MOSRA_TRAINER_H_

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mosra/autodiff/adam.h"
#include "mosra/frontend.h"
#include "mosra/manifest.h"
#include "mosra/model.h"

namespace mosra {

// Weights of the MOS loss and of the summed acoustic losses. acoustics = 0
// turns training into single-task MOS training.
struct LossWeights {
  double mos = 2.0;
  double acoustics = 0.2;

  void Validate() const;
};

struct TrainConfig {
  double lr = 5e-4;
  int batch_size = 32;
  int patience = 15;
  int max_epochs = 200;
  uint64_t seed = 0;
  LossWeights weights;

  void Validate() const;
};

using NormStats = std::array<LabelNorm, kNumAcousticTasks>;
// Acoustic labels in task order (snr_db, sti, t60_s, drr_db, c50_db).
using AcousticVector = std::array<double, kNumAcousticTasks>;

// One featurized utterance with its labels.
struct Example {
  SegmentTensor features;
  double mos = 0.0;
  AcousticVector acoustics{};
};

struct TrainingData {
  std::vector<Example> mos;
  std::vector<Example> acoustics;
};

AcousticVector AcousticLabelsOf(const ManifestRow& row);

// Loads and featurizes every row, split by role.
TrainingData LoadTrainingData(const DatasetManifest& manifest, const FrontendConfig& frontend);

// Per-task mean and (population) standard deviation. Throws InvalidArgument
// for an empty set or a constant column.
NormStats ComputeNormStats(std::span<const AcousticVector> labels);
// Uses only rows whose role is acoustics.
NormStats ComputeNormStats(const DatasetManifest& manifest);

// weights.mos * MSE(mos).
template <typename T>
ad::Tensor<T> MosLoss(const ad::Tensor<T>& mos_pred, const ad::Tensor<T>& mos_true,
                      const LossWeights& weights);
// weights.acoustics * sum of the five acoustic MSEs (normalized units).
template <typename T>
ad::Tensor<T> AcousticLoss(std::span<const ad::Tensor<T>, kNumAcousticTasks> pred,
                           std::span<const ad::Tensor<T>, kNumAcousticTasks> target,
                           const LossWeights& weights);
// Sum of the two terms above.
template <typename T>
ad::Tensor<T> ComputeLoss(const ad::Tensor<T>& mos_pred, const ad::Tensor<T>& mos_true,
                          std::span<const ad::Tensor<T>, kNumAcousticTasks> ra_pred,
                          std::span<const ad::Tensor<T>, kNumAcousticTasks> ra_true,
                          const LossWeights& weights);

// Patience bookkeeping on a metric where lower is better.
class EarlyStopping {
 public:
  explicit EarlyStopping(int patience);
  // Records the metric of `epoch`; returns true when it is a new best.
  bool Update(int epoch, double metric);
  bool ShouldStop() const { return since_best_ >= patience_; }
  int best_epoch() const { return best_epoch_; }
  double best_metric() const { return best_; }

 private:
  int patience_;
  int since_best_ = 0;
  int best_epoch_ = 0;
  double best_;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double train_mos_loss = 0.0;
  double train_acoustic_loss = 0.0;
  double val_mos_mse = 0.0;
  double seconds = 0.0;
};

// Serves shuffled mini-batches; reshuffles when a pass completes.
class BatchCycler {
 public:
  BatchCycler(std::size_t size, int batch_size, uint64_t seed);
  // Index list of the next batch; the last batch of a pass may be short.
  std::vector<std::size_t> Next();
  std::size_t batches_per_pass() const;

 private:
  void Shuffle();

  std::vector<std::size_t> order_;
  std::size_t pos_ = 0;
  int batch_size_;
  std::mt19937_64 rng_;
};

struct EpochLosses {
  double total = 0.0;
  double mos = 0.0;
  double acoustics = 0.0;
};

class Trainer {
 public:
  // `data` must outlive the trainer. Label normalization is taken from the
  // model, so call model.set_label_norm first.
  Trainer(MosraModel& model, const TrainingData& data, const TrainConfig& config);

  // One pass over the MOS rows. Each iteration runs a MOS batch and an
  // acoustics batch and takes one Adam step on the accumulated gradients.
  // Returns mean losses per iteration.
  EpochLosses TrainEpoch();

 private:
  ad::Tensor<float> MosStep(const std::vector<std::size_t>& idx);
  ad::Tensor<float> AcousticStep(const std::vector<std::size_t>& idx);

  MosraModel& model_;
  const TrainingData& data_;
  TrainConfig config_;
  ad::Adam<float> adam_;
  BatchCycler mos_batches_;
  std::optional<BatchCycler> ra_batches_;
  std::mt19937_64 dropout_rng_;
};

// Eval-mode outputs for every example: MOS raw, acoustic outputs in
// normalized units.
std::vector<std::array<double, kNumTasks>> PredictNormalized(
    const MosraModel& model, std::span<const Example> examples, int batch_size = 32);

// Mean squared error per task: MOS on the raw scale, acoustic tasks in
// normalized units.
std::array<double, kNumTasks> NormalizedMse(const MosraModel& model,
                                            std::span<const Example> examples, bool with_mos,
                                            bool with_acoustics);

struct FitResult {
  std::vector<EpochRecord> history;
  int best_epoch = 0;
  double best_val_mos_mse = 0.0;
  bool stopped_early = false;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Computes label normalization from data.acoustics (when present), trains
// with MOS-based early stopping on `val_mos` and leaves the model at its
// best validation snapshot.
FitResult Fit(MosraModel& model, const TrainingData& data, std::span<const Example> val_mos,
              const TrainConfig& config, const EpochCallback& on_epoch = {});

void WriteHistoryCsv(const std::string& path, const std::vector<EpochRecord>& history);

}  // namespace mosra

#endif  // MOSRA_TRAINER_H_
