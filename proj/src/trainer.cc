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

#include "mosra/trainer.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "mosra/audio_io.h"
#include "mosra/errors.h"
#include "mosra/synth.h"

namespace mosra {

using ad::Tensor;

void LossWeights::Validate() const {
  if (!(mos > 0.0)) throw InvalidArgument("MOS loss weight must be positive");
  if (!(acoustics >= 0.0)) throw InvalidArgument("acoustic loss weight must be non-negative");
}

void TrainConfig::Validate() const {
  if (!(lr > 0.0)) throw InvalidArgument("learning rate must be positive");
  if (batch_size < 1) throw InvalidArgument("batch size must be at least 1");
  if (patience < 1) throw InvalidArgument("patience must be at least 1");
  if (max_epochs < 1) throw InvalidArgument("max_epochs must be at least 1");
  weights.Validate();
}

AcousticVector AcousticLabelsOf(const ManifestRow& row) {
  const std::optional<double>* cells[] = {&row.snr_db, &row.sti, &row.t60_s, &row.drr_db,
                                          &row.c50_db};
  AcousticVector out{};
  for (int i = 0; i < kNumAcousticTasks; ++i) {
    if (!cells[i]->has_value()) {
      throw InvalidArgument("row '" + row.path + "' lacks the " +
                            TaskName(static_cast<Task>(i + 1)) + " label");
    }
    out[i] = **cells[i];
  }
  return out;
}

TrainingData LoadTrainingData(const DatasetManifest& manifest, const FrontendConfig& frontend) {
  TrainingData data;
  for (const ManifestRow& row : manifest.rows) {
    Example ex;
    ex.features = Featurize(LoadWav(manifest.ResolvePath(row)), frontend);
    if (row.role == Role::kMos) {
      ex.mos = row.mos.value();
      data.mos.push_back(std::move(ex));
    } else {
      ex.acoustics = AcousticLabelsOf(row);
      if (row.mos) ex.mos = *row.mos;
      data.acoustics.push_back(std::move(ex));
    }
  }
  return data;
}

NormStats ComputeNormStats(std::span<const AcousticVector> labels) {
  if (labels.empty()) throw InvalidArgument("cannot normalize labels of an empty set");
  NormStats stats;
  const double n = static_cast<double>(labels.size());
  for (int t = 0; t < kNumAcousticTasks; ++t) {
    double mean = 0.0;
    for (const AcousticVector& l : labels) mean += l[t];
    mean /= n;
    double var = 0.0;
    for (const AcousticVector& l : labels) var += (l[t] - mean) * (l[t] - mean);
    const double sd = std::sqrt(var / n);
    if (!(sd > 0.0) || !std::isfinite(sd)) {
      throw InvalidArgument(std::string("label column ") + TaskName(static_cast<Task>(t + 1)) +
                            " has zero variance; cannot normalize");
    }
    stats[t] = {mean, sd};
  }
  return stats;
}

NormStats ComputeNormStats(const DatasetManifest& manifest) {
  std::vector<AcousticVector> labels;
  for (const ManifestRow& row : manifest.rows) {
    if (row.role == Role::kAcoustics) labels.push_back(AcousticLabelsOf(row));
  }
  return ComputeNormStats(labels);
}

template <typename T>
Tensor<T> MosLoss(const Tensor<T>& mos_pred, const Tensor<T>& mos_true,
                  const LossWeights& weights) {
  return ad::Scale(ad::Mse(mos_pred, mos_true), static_cast<T>(weights.mos));
}

template <typename T>
Tensor<T> AcousticLoss(std::span<const Tensor<T>, kNumAcousticTasks> pred,
                       std::span<const Tensor<T>, kNumAcousticTasks> target,
                       const LossWeights& weights) {
  Tensor<T> sum = ad::Mse(pred[0], target[0]);
  for (int t = 1; t < kNumAcousticTasks; ++t) sum = ad::Add(sum, ad::Mse(pred[t], target[t]));
  return ad::Scale(sum, static_cast<T>(weights.acoustics));
}

template <typename T>
Tensor<T> ComputeLoss(const Tensor<T>& mos_pred, const Tensor<T>& mos_true,
                      std::span<const Tensor<T>, kNumAcousticTasks> ra_pred,
                      std::span<const Tensor<T>, kNumAcousticTasks> ra_true,
                      const LossWeights& weights) {
  return ad::Add(MosLoss(mos_pred, mos_true, weights), AcousticLoss(ra_pred, ra_true, weights));
}

#define MOSRA_INSTANTIATE_LOSSES(T)                                                          \
  template Tensor<T> MosLoss(const Tensor<T>&, const Tensor<T>&, const LossWeights&);       \
  template Tensor<T> AcousticLoss(std::span<const Tensor<T>, kNumAcousticTasks>,            \
                                  std::span<const Tensor<T>, kNumAcousticTasks>,            \
                                  const LossWeights&);                                      \
  template Tensor<T> ComputeLoss(const Tensor<T>&, const Tensor<T>&,                        \
                                 std::span<const Tensor<T>, kNumAcousticTasks>,             \
                                 std::span<const Tensor<T>, kNumAcousticTasks>,             \
                                 const LossWeights&);
MOSRA_INSTANTIATE_LOSSES(float)
MOSRA_INSTANTIATE_LOSSES(double)
#undef MOSRA_INSTANTIATE_LOSSES

EarlyStopping::EarlyStopping(int patience)
    : patience_(patience), best_(std::numeric_limits<double>::infinity()) {
  if (patience < 1) throw InvalidArgument("patience must be at least 1");
}

bool EarlyStopping::Update(int epoch, double metric) {
  if (metric < best_) {
    best_ = metric;
    best_epoch_ = epoch;
    since_best_ = 0;
    return true;
  }
  ++since_best_;
  return false;
}

BatchCycler::BatchCycler(std::size_t size, int batch_size, uint64_t seed)
    : order_(size), batch_size_(batch_size), rng_(seed) {
  if (size == 0) throw InvalidArgument("empty data loader");
  if (batch_size < 1) throw InvalidArgument("batch size must be at least 1");
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  Shuffle();
}

void BatchCycler::Shuffle() { std::shuffle(order_.begin(), order_.end(), rng_); }

std::size_t BatchCycler::batches_per_pass() const {
  return (order_.size() + batch_size_ - 1) / batch_size_;
}

std::vector<std::size_t> BatchCycler::Next() {
  if (pos_ >= order_.size()) {
    pos_ = 0;
    Shuffle();
  }
  const std::size_t end = std::min(order_.size(), pos_ + batch_size_);
  std::vector<std::size_t> out(order_.begin() + pos_, order_.begin() + end);
  pos_ = end;
  return out;
}

namespace {

SegmentBatch<float> BatchOf(std::span<const Example> examples,
                            const std::vector<std::size_t>& idx) {
  std::vector<const SegmentTensor*> ptrs;
  ptrs.reserve(idx.size());
  for (std::size_t i : idx) ptrs.push_back(&examples[i].features);
  return MakeBatch<float>(ptrs);
}

}  // namespace

Trainer::Trainer(MosraModel& model, const TrainingData& data, const TrainConfig& config)
    : model_(model),
      data_(data),
      config_(config),
      adam_(model.ParameterTensors(), ad::AdamOptions{config.lr, 0.9, 0.999, 1e-8}),
      mos_batches_(data.mos.size(), config.batch_size, DeriveSeed(config.seed, 1)),
      dropout_rng_(DeriveSeed(config.seed, 3)) {
  config_.Validate();
  if (config_.weights.acoustics > 0.0) {
    ra_batches_.emplace(data.acoustics.size(), config.batch_size, DeriveSeed(config.seed, 2));
  }
}

Tensor<float> Trainer::MosStep(const std::vector<std::size_t>& idx) {
  const TaskOutputs<float> out = model_.TrainForward(BatchOf(data_.mos, idx), &dropout_rng_);
  std::vector<float> labels;
  for (std::size_t i : idx) labels.push_back(static_cast<float>(data_.mos[i].mos));
  const Tensor<float> target({static_cast<int>(idx.size())}, std::move(labels));
  Tensor<float> loss = MosLoss(out.per_task[TaskIndex(Task::kMos)], target, config_.weights);
  loss.Backward();
  return loss;
}

Tensor<float> Trainer::AcousticStep(const std::vector<std::size_t>& idx) {
  const TaskOutputs<float> out =
      model_.TrainForward(BatchOf(data_.acoustics, idx), &dropout_rng_);
  std::array<Tensor<float>, kNumAcousticTasks> pred, target;
  for (int t = 0; t < kNumAcousticTasks; ++t) {
    const Task task = static_cast<Task>(t + 1);
    std::vector<float> labels;
    for (std::size_t i : idx) {
      labels.push_back(static_cast<float>(model_.Normalize(task, data_.acoustics[i].acoustics[t])));
    }
    pred[t] = out.per_task[TaskIndex(task)];
    target[t] = Tensor<float>({static_cast<int>(idx.size())}, std::move(labels));
  }
  Tensor<float> loss = AcousticLoss<float>(pred, target, config_.weights);
  loss.Backward();
  return loss;
}

EpochLosses Trainer::TrainEpoch() {
  EpochLosses sum;
  const std::size_t iterations = mos_batches_.batches_per_pass();
  for (std::size_t it = 0; it < iterations; ++it) {
    adam_.ZeroGrad();
    // The two backward passes accumulate into the same parameter gradients,
    // which equals one backward over the summed loss.
    const double mos_loss = MosStep(mos_batches_.Next()).item();
    double ra_loss = 0.0;
    if (ra_batches_) ra_loss = AcousticStep(ra_batches_->Next()).item();
    adam_.Step();
    if (!std::isfinite(mos_loss) || !std::isfinite(ra_loss)) {
      throw NumericalError("training loss became non-finite at iteration " + std::to_string(it));
    }
    sum.mos += mos_loss;
    sum.acoustics += ra_loss;
  }
  sum.mos /= static_cast<double>(iterations);
  sum.acoustics /= static_cast<double>(iterations);
  sum.total = sum.mos + sum.acoustics;
  return sum;
}

std::vector<std::array<double, kNumTasks>> PredictNormalized(const MosraModel& model,
                                                             std::span<const Example> examples,
                                                             int batch_size) {
  ad::NoGradGuard no_grad;
  std::vector<std::array<double, kNumTasks>> out;
  out.reserve(examples.size());
  for (std::size_t start = 0; start < examples.size(); start += batch_size) {
    const std::size_t end = std::min(examples.size(), start + batch_size);
    std::vector<std::size_t> idx(end - start);
    std::iota(idx.begin(), idx.end(), start);
    const TaskOutputs<float> res = model.Forward(BatchOf(examples, idx));
    for (std::size_t i = 0; i < idx.size(); ++i) {
      std::array<double, kNumTasks> row;
      for (int t = 0; t < kNumTasks; ++t) row[t] = res.per_task[t].data()[i];
      out.push_back(row);
    }
  }
  return out;
}

std::array<double, kNumTasks> NormalizedMse(const MosraModel& model,
                                            std::span<const Example> examples, bool with_mos,
                                            bool with_acoustics) {
  if (examples.empty()) throw InvalidArgument("cannot score an empty set");
  const auto preds = PredictNormalized(model, examples);
  std::array<double, kNumTasks> mse{};
  for (std::size_t i = 0; i < examples.size(); ++i) {
    if (with_mos) mse[0] += std::pow(preds[i][0] - examples[i].mos, 2);
    if (with_acoustics) {
      for (int t = 1; t < kNumTasks; ++t) {
        const double target = model.Normalize(static_cast<Task>(t), examples[i].acoustics[t - 1]);
        mse[t] += std::pow(preds[i][t] - target, 2);
      }
    }
  }
  for (double& v : mse) v /= static_cast<double>(examples.size());
  return mse;
}

FitResult Fit(MosraModel& model, const TrainingData& data, std::span<const Example> val_mos,
              const TrainConfig& config, const EpochCallback& on_epoch) {
  config.Validate();
  if (data.mos.empty()) throw InvalidArgument("training set has no MOS rows");
  if (val_mos.empty()) throw InvalidArgument("validation set has no MOS rows");
  if (config.weights.acoustics > 0.0 && data.acoustics.empty()) {
    throw InvalidArgument("training set has no acoustics rows (use MOS-only training)");
  }
  if (!data.acoustics.empty()) {
    std::vector<AcousticVector> labels;
    for (const Example& ex : data.acoustics) labels.push_back(ex.acoustics);
    model.set_label_norm(ComputeNormStats(labels));
  }

  Trainer trainer(model, data, config);
  EarlyStopping stopper(config.patience);
  FitResult result;
  auto best = model.TakeSnapshot();
  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const EpochLosses losses = trainer.TrainEpoch();
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = losses.total;
    rec.train_mos_loss = losses.mos;
    rec.train_acoustic_loss = losses.acoustics;
    rec.val_mos_mse = NormalizedMse(model, val_mos, true, false)[0];
    rec.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);
    if (stopper.Update(epoch, rec.val_mos_mse)) best = model.TakeSnapshot();
    if (stopper.ShouldStop()) {
      result.stopped_early = true;
      break;
    }
  }
  model.RestoreSnapshot(best);
  result.best_epoch = stopper.best_epoch();
  result.best_val_mos_mse = stopper.best_metric();
  return result;
}

void WriteHistoryCsv(const std::string& path, const std::vector<EpochRecord>& history) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "epoch,train_loss,val_mos_mse,train_mos_loss,train_acoustic_loss,seconds\n";
  out.precision(10);
  for (const EpochRecord& r : history) {
    out << r.epoch << ',' << r.train_loss << ',' << r.val_mos_mse << ',' << r.train_mos_loss
        << ',' << r.train_acoustic_loss << ',' << r.seconds << '\n';
  }
  if (!out) throw IoError("failed writing '" + path + "'");
}

}  // namespace mosra
