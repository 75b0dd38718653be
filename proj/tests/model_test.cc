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
#include <iterator>

#include "grad_check.h"
#include "mosra/errors.h"
#include "mosra/model.h"
#include "mosra/synth.h"
#include "test_util.h"

namespace mosra {
namespace {

ModelConfig TinyConfig() {
  ModelConfig c;
  c.n_mels = 8;
  c.segment_width = 4;
  c.cnn_channels = {2, 3};
  c.pool_after = {1};
  c.shared = {2, 8, 8, 1};
  c.head = {1, 4, 4, 1};
  c.pool_hidden = 4;
  c.dropout = 0.0;
  return c;
}

SegmentTensor RandomSegments(int n, int mels, int width, uint64_t seed) {
  SegmentTensor s;
  s.num_segments = n;
  s.n_mels = mels;
  s.width = width;
  const auto v = testing::Gaussian(static_cast<std::size_t>(n) * mels * width, seed, 10.0);
  s.values.assign(v.begin(), v.end());
  for (float& x : s.values) x -= 40.0f;
  return s;
}

std::string ReadBytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

TEST(Model, ParameterCountInBudgetAndConsistent) {
  const MosraModel model(ModelConfig{}, 1);
  const long long count = model.ParamCount();
  EXPECT_GE(count, 350000);
  EXPECT_LE(count, 470000);
  long long brute = 0;
  for (const auto& p : model.parameters()) brute += ad::NumElements(p.tensor.shape());
  EXPECT_EQ(count, brute);
  // Heads are identical in size and together hold a fixed share.
  const auto mos = model.HeadParameters(Task::kMos);
  const auto c50 = model.HeadParameters(Task::kC50);
  ASSERT_EQ(mos.size(), c50.size());
  for (std::size_t i = 0; i < mos.size(); ++i) EXPECT_EQ(mos[i].shape(), c50[i].shape());
}

TEST(Model, ConfigValidation) {
  ModelConfig c = TinyConfig();
  c.pool_after = {0, 1, 2};
  c.cnn_channels = {2, 2, 2};
  EXPECT_THROW(MosraModel(c, 0), InvalidArgument);
  c = TinyConfig();
  c.shared.heads = 2;
  EXPECT_THROW(MosraModel(c, 0), InvalidArgument);
  c = TinyConfig();
  c.dropout = 1.0;
  EXPECT_THROW(MosraModel(c, 0), InvalidArgument);
}

TEST(Model, CnnShapesForEightSecondClip) {
  const MosraModel model(ModelConfig{}, 3);
  const SegmentTensor seg = Featurize(SynthesizeSpeechLike(8.0, 1), FrontendConfig{});
  ASSERT_EQ(seg.num_segments, 197);
  const SegmentTensor* one[] = {&seg};
  ad::NoGradGuard no_grad;
  const auto features = model.CnnForward(MakeBatch<float>(one).segments);
  EXPECT_EQ(features.shape(), (ad::Shape{197, 64}));
  const auto context = model.SharedEncode(features);
  EXPECT_EQ(context.shape(), (ad::Shape{197, 64}));
  for (float v : context.data()) ASSERT_TRUE(std::isfinite(v));
}

TEST(Model, CnnIsDeterministicPerSegmentAndFiniteOnSilence) {
  const MosraModel model(TinyConfig(), 4);
  SegmentTensor seg = RandomSegments(3, 8, 4, 2);
  // Segment 2 duplicates segment 0; segment 1 is all floor.
  std::copy(seg.values.begin(), seg.values.begin() + 32, seg.values.begin() + 64);
  std::fill(seg.values.begin() + 32, seg.values.begin() + 64, -80.0f);
  const SegmentTensor* one[] = {&seg};
  ad::NoGradGuard no_grad;
  const auto f = model.CnnForward(MakeBatch<float>(one).segments);
  for (int j = 0; j < 8; ++j) {
    EXPECT_EQ(f.data()[j], f.data()[16 + j]);
    EXPECT_TRUE(std::isfinite(f.data()[8 + j]));
  }
}

TEST(Model, SharedEncoderIsPositionSensitive) {
  const MosraNet<double> model(TinyConfig(), 5);
  const auto x = testing::RandomTensor({4, 8}, 6, false);
  std::vector<double> swapped(x.data().begin(), x.data().end());
  std::swap_ranges(swapped.begin(), swapped.begin() + 8, swapped.begin() + 8);
  const auto a = model.SharedEncode(x);
  const auto b = model.SharedEncode(ad::Tensor<double>({4, 8}, swapped));
  EXPECT_EQ(a.shape(), (ad::Shape{4, 8}));
  // Without positional information rows 0 and 1 would just trade places.
  double diff = 0.0;
  for (int j = 0; j < 8; ++j) diff += std::abs(a.data()[j] - b.data()[8 + j]);
  EXPECT_GT(diff, 1e-3);
}

TEST(Model, AttentionPoolingWeights) {
  const MosraNet<double> model(TinyConfig(), 7);
  ad::Tensor<double> weights;
  model.HeadForward(testing::RandomTensor({5, 8}, 8, false), Task::kSti, nullptr, &weights);
  ASSERT_EQ(weights.shape(), (ad::Shape{1, 5}));
  double sum = 0.0;
  for (double w : weights.data()) sum += w;
  EXPECT_NEAR(sum, 1.0, 1e-6);
  model.HeadForward(testing::RandomTensor({1, 8}, 9, false), Task::kSti, nullptr, &weights);
  EXPECT_EQ(weights.data()[0], 1.0);
}

TEST(Model, HeadsAreIndependent) {
  MosraNet<double> model(TinyConfig(), 8);
  const auto ctx = testing::RandomTensor({3, 8}, 10, false);
  const double before_t60 = model.HeadForward(ctx, Task::kT60).item();
  const double before_snr = model.HeadForward(ctx, Task::kSnr).item();
  for (auto& p : model.HeadParameters(Task::kSnr)) {
    for (double& v : p.data()) v += 0.3;
  }
  EXPECT_EQ(model.HeadForward(ctx, Task::kT60).item(), before_t60);
  EXPECT_NE(model.HeadForward(ctx, Task::kSnr).item(), before_snr);
}

TEST(Model, MosHeadStartsMidScale) {
  const MosraModel model(ModelConfig{}, 1);
  const auto& params = model.parameters();
  const auto it = std::find_if(params.begin(), params.end(),
                               [](const auto& p) { return p.name == "head.mos.out.bias"; });
  ASSERT_NE(it, params.end());
  EXPECT_EQ(it->tensor.data()[0], 3.0f);
}

TEST(ModelGrad, TinyEndToEnd) {
  MosraNet<double> model(TinyConfig(), 11);
  SegmentTensor a = RandomSegments(2, 8, 4, 12);
  const SegmentTensor* one[] = {&a};
  SegmentBatch<double> batch = MakeBatch<double>(one);
  batch.segments = ad::Tensor<double>(batch.segments.shape(),
                                      std::vector<double>(batch.segments.data().begin(),
                                                          batch.segments.data().end()),
                                      true);
  auto loss = [&] {
    const TaskOutputs<double> out = model.TrainForward(batch, nullptr);
    ad::Tensor<double> total = testing::Project(out.per_task[0], 1);
    for (int t = 1; t < kNumTasks; ++t) {
      total = ad::Add(total, testing::Project(out.per_task[t], 1 + t));
    }
    return total;
  };
  std::vector<std::pair<std::string, ad::Tensor<double>>> inputs = {{"segments", batch.segments}};
  for (const auto& p : model.parameters()) inputs.emplace_back(p.name, p.tensor);
  const auto r = testing::GradCheck(loss, inputs);
  EXPECT_LT(r.worst_error, 1e-4) << r.worst_input;
}

TEST(ModelGrad, EveryInputSegmentInfluencesEveryHead) {
  MosraNet<double> model(TinyConfig(), 13);
  SegmentTensor s = RandomSegments(4, 8, 4, 14);
  const SegmentTensor* one[] = {&s};
  SegmentBatch<double> batch = MakeBatch<double>(one);
  ad::Tensor<double> x(batch.segments.shape(),
                       std::vector<double>(batch.segments.data().begin(),
                                           batch.segments.data().end()),
                       true);
  batch.segments = x;
  for (Task task : kAllTasks) {
    x.ZeroGrad();
    model.Forward(batch).per_task[TaskIndex(task)].Backward();
    for (int seg = 0; seg < 4; ++seg) {
      double norm = 0.0;
      for (int j = 0; j < 32; ++j) norm += std::abs(x.grad()[seg * 32 + j]);
      EXPECT_GT(norm, 0.0) << TaskName(task) << " segment " << seg;
    }
  }
}

TEST(Model, PredictIsDeterministicAndDenormalizes) {
  MosraModel model(ModelConfig{}, 21);
  std::array<LabelNorm, kNumAcousticTasks> norm;
  for (int t = 0; t < kNumAcousticTasks; ++t) norm[t] = {1.0 + t, 2.0 + t};
  model.set_label_norm(norm);
  const AudioBuffer audio = SynthesizeSpeechLike(1.0, 2);
  const Prediction a = Predict(model, audio);
  const Prediction b = Predict(model, audio);
  for (Task task : kAllTasks) EXPECT_EQ(a[task], b[task]);

  const SegmentTensor seg = Featurize(audio, FrontendConfig{});
  const SegmentTensor* one[] = {&seg};
  ad::NoGradGuard no_grad;
  const TaskOutputs<float> raw = model.Forward(MakeBatch<float>(one));
  EXPECT_EQ(a.mos, static_cast<double>(raw.per_task[0].data()[0]));
  for (int t = 1; t < kNumTasks; ++t) {
    const double z = raw.per_task[t].data()[0];
    EXPECT_NEAR(a[static_cast<Task>(t)], z * norm[t - 1].std + norm[t - 1].mean, 1e-9);
  }
  for (double v : {-3.0, 0.0, 17.5}) {
    for (int t = 1; t < kNumTasks; ++t) {
      const Task task = static_cast<Task>(t);
      EXPECT_NEAR(model.Denormalize(task, model.Normalize(task, v)), v, 1e-12);
    }
  }
  AudioBuffer tiny;
  tiny.samples.assign(500, 0.1f);
  EXPECT_THROW(Predict(model, tiny), InvalidArgument);
}

TEST(Model, BatchedForwardMatchesSingleUtterances) {
  const MosraModel model(TinyConfig(), 22);
  const SegmentTensor a = RandomSegments(3, 8, 4, 1), b = RandomSegments(1, 8, 4, 2);
  const SegmentTensor* both[] = {&a, &b};
  const SegmentTensor* only_b[] = {&b};
  ad::NoGradGuard no_grad;
  const auto joint = model.Forward(MakeBatch<float>(both));
  const auto single = model.Forward(MakeBatch<float>(only_b));
  for (int t = 0; t < kNumTasks; ++t) {
    EXPECT_NEAR(joint.per_task[t].data()[1], single.per_task[t].data()[0], 1e-5);
  }
}

TEST(ModelIo, RoundTripIsBitExact) {
  const auto dir = testing::TempDir("model_io");
  MosraModel model(ModelConfig{}, 31);
  std::array<LabelNorm, kNumAcousticTasks> norm;
  for (int t = 0; t < kNumAcousticTasks; ++t) norm[t] = {0.1 * t, 1.0 / (t + 3)};
  model.set_label_norm(norm);
  model.batch_norm_stats()[2].stats.mean[1] = 0.123f;
  SaveModel(model, (dir / "a.mosra").string());
  const MosraModel loaded = LoadModel((dir / "a.mosra").string());
  SaveModel(loaded, (dir / "b.mosra").string());
  EXPECT_EQ(ReadBytes(dir / "a.mosra"), ReadBytes(dir / "b.mosra"));
  EXPECT_EQ(loaded.ParamCount(), model.ParamCount());
  EXPECT_EQ(loaded.batch_norm_stats()[2].stats.mean[1], 0.123f);
  for (int t = 0; t < kNumAcousticTasks; ++t) {
    EXPECT_EQ(loaded.label_norm()[t].mean, norm[t].mean);
    EXPECT_EQ(loaded.label_norm()[t].std, norm[t].std);
  }
  const AudioBuffer audio = SynthesizeSpeechLike(0.7, 3);
  const Prediction p = Predict(model, audio), q = Predict(loaded, audio);
  for (Task task : kAllTasks) EXPECT_EQ(p[task], q[task]);
}

TEST(ModelIo, RejectsCorruptFiles) {
  const auto dir = testing::TempDir("model_io_bad");
  EXPECT_THROW(LoadModel((dir / "missing.mosra").string()), IoError);
  std::ofstream((dir / "magic.mosra").string(), std::ios::binary) << "MOSRA9xxxxxxxx";
  EXPECT_THROW(LoadModel((dir / "magic.mosra").string()), FormatError);

  SaveModel(MosraModel(TinyConfig(), 1), (dir / "tiny.mosra").string());
  const std::string good = ReadBytes(dir / "tiny.mosra");
  // Truncated tensor data.
  std::ofstream((dir / "short.mosra").string(), std::ios::binary)
      << good.substr(0, good.size() - 8);
  EXPECT_THROW(LoadModel((dir / "short.mosra").string()), FormatError);
  // A tensor whose declared shape disagrees with the config.
  std::string bad_shape = good;
  const auto pos = bad_shape.find("[2,1,3,3]");
  ASSERT_NE(pos, std::string::npos);
  bad_shape.replace(pos, 9, "[1,2,3,3]");
  std::ofstream((dir / "shape.mosra").string(), std::ios::binary) << bad_shape;
  EXPECT_THROW(LoadModel((dir / "shape.mosra").string()), FormatError);
  // Unsupported version.
  std::string bad_version = good;
  const auto vpos = bad_version.find("\"version\":1");
  ASSERT_NE(vpos, std::string::npos);
  bad_version.replace(vpos, 11, "\"version\":7");
  std::ofstream((dir / "version.mosra").string(), std::ios::binary) << bad_version;
  EXPECT_THROW(LoadModel((dir / "version.mosra").string()), FormatError);
}

TEST(Model, SnapshotRestore) {
  MosraModel model(TinyConfig(), 41);
  const auto snap = model.TakeSnapshot();
  const float before = model.parameters()[3].tensor.data()[0];
  model.parameters()[3].tensor.data()[0] += 1.0f;
  model.batch_norm_stats()[0].stats.var[0] = 9.0f;
  model.RestoreSnapshot(snap);
  EXPECT_EQ(model.parameters()[3].tensor.data()[0], before);
  EXPECT_EQ(model.batch_norm_stats()[0].stats.var[0], 1.0f);
}

}  // namespace
}  // namespace mosra
