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
#include <fstream>
#include <random>
#include <sstream>

#include "mosra/errors.h"
#include "mosra/evaluator.h"
#include "test_util.h"

namespace mosra {
namespace {

// Textbook two-pass Pearson in long double.
double PearsonOracle(const std::vector<double>& x, const std::vector<double>& y) {
  long double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= x.size();
  my /= y.size();
  long double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return static_cast<double>(sxy / std::sqrt(sxx * syy));
}

// Cubic least squares through the normal equations in long double, solved
// by Gauss-Jordan elimination with partial pivoting.
std::array<long double, 4> CubicOracle(const std::vector<double>& x, const std::vector<double>& y) {
  long double a[4][5] = {};
  for (std::size_t i = 0; i < x.size(); ++i) {
    long double p[4] = {1, x[i], static_cast<long double>(x[i]) * x[i],
                        static_cast<long double>(x[i]) * x[i] * x[i]};
    for (int r = 0; r < 4; ++r) {
      for (int c = 0; c < 4; ++c) a[r][c] += p[r] * p[c];
      a[r][4] += p[r] * y[i];
    }
  }
  for (int col = 0; col < 4; ++col) {
    int piv = col;
    for (int r = col + 1; r < 4; ++r) {
      if (std::fabs(a[r][col]) > std::fabs(a[piv][col])) piv = r;
    }
    for (int c = 0; c < 5; ++c) std::swap(a[col][c], a[piv][c]);
    for (int r = 0; r < 4; ++r) {
      if (r == col) continue;
      const long double f = a[r][col] / a[col][col];
      for (int c = 0; c < 5; ++c) a[r][c] -= f * a[col][c];
    }
  }
  std::array<long double, 4> out;
  for (int r = 0; r < 4; ++r) out[r] = a[r][4] / a[r][r];
  return out;
}

std::vector<double> Uniform(std::size_t n, double lo, double hi, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

TEST(Metrics, PearsonMatchesOracle) {
  const auto x = Uniform(200, 1.0, 5.0, 1);
  auto y = Uniform(200, -1.0, 1.0, 2);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += 0.8 * x[i];
  EXPECT_NEAR(Pearson(x, y), PearsonOracle(x, y), 1e-12);
  std::vector<double> neg(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) neg[i] = 7.0 - 2.0 * x[i];
  EXPECT_NEAR(Pearson(x, neg), -1.0, 1e-12);
}

TEST(Metrics, PearsonRejectsDegenerateInput) {
  const std::vector<double> two = {1.0, 2.0}, two_b = {3.0, 1.0};
  EXPECT_THROW(Pearson(two, two_b), InvalidArgument);
  const std::vector<double> flat = {2.0, 2.0, 2.0}, ramp = {1.0, 2.0, 3.0};
  EXPECT_THROW(Pearson(flat, ramp), InvalidArgument);
  EXPECT_THROW(Pearson(ramp, flat), InvalidArgument);
  const std::vector<double> four = {1, 2, 3, 4};
  EXPECT_THROW(Pearson(ramp, four), InvalidArgument);
}

TEST(Metrics, Rmse) {
  const std::vector<double> p = {1.0, 2.0, 4.0}, t = {2.0, 2.0, 2.0};
  EXPECT_DOUBLE_EQ(Rmse(p, t), std::sqrt(5.0 / 3.0));
}

TEST(CubicMapping, RecoversExactCubic) {
  const auto x = Uniform(50, 1.0, 5.0, 3);
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    y[i] = 0.5 - 1.5 * x[i] + 0.7 * x[i] * x[i] - 0.05 * x[i] * x[i] * x[i];
  }
  const CubicMapping m = FitCubicMapping(x, y);
  EXPECT_FALSE(m.linear_fallback);
  EXPECT_NEAR(m.coeffs[0], 0.5, 1e-8);
  EXPECT_NEAR(m.coeffs[1], -1.5, 1e-8);
  EXPECT_NEAR(m.coeffs[2], 0.7, 1e-8);
  EXPECT_NEAR(m.coeffs[3], -0.05, 1e-9);
  EXPECT_NEAR(RmseAfterMapping(x, y), 0.0, 1e-10);
}

TEST(CubicMapping, NoisyFitMatchesNormalEquations) {
  const auto x = Uniform(300, 1.0, 5.0, 4);
  auto y = Uniform(300, -0.5, 0.5, 5);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += std::sqrt(x[i]) * 2.0;
  const CubicMapping m = FitCubicMapping(x, y);
  const auto oracle = CubicOracle(x, y);
  for (double v : {1.0, 2.2, 3.7, 5.0}) {
    const long double expect = oracle[0] + oracle[1] * v + oracle[2] * v * v + oracle[3] * v * v * v;
    EXPECT_NEAR(m(v), static_cast<double>(expect), 1e-9);
    long double direct = 0;
    for (int k = 3; k >= 0; --k) direct = direct * v + m.coeffs[k];
    EXPECT_NEAR(static_cast<double>(direct), m(v), 1e-8);
  }
  // The identity is itself a cubic, so the fitted map cannot do worse.
  EXPECT_LT(RmseAfterMapping(x, y), Rmse(x, y));
}

TEST(CubicMapping, FallsBackWithFewDistinctValues) {
  const std::vector<double> x = {1, 1, 2, 2, 3, 3}, y = {1.1, 0.9, 2.1, 1.9, 3.2, 2.8};
  const CubicMapping m = FitCubicMapping(x, y);
  EXPECT_TRUE(m.linear_fallback);
  EXPECT_EQ(m.coeffs[2], 0.0);
  EXPECT_EQ(m.coeffs[3], 0.0);
  EXPECT_NEAR(m(2.0), 2.0, 1e-12);
  const std::vector<double> c = {4, 4, 4};
  const std::vector<double> yc = {1, 2, 6};
  const CubicMapping k = FitCubicMapping(c, yc);
  EXPECT_TRUE(k.linear_fallback);
  EXPECT_NEAR(k(4.0), 3.0, 1e-12);
}

TEST(CubicMapping, DetectsNonMonotoneFit) {
  std::vector<double> x, y;
  for (int i = 0; i <= 40; ++i) {
    x.push_back(1.0 + 0.1 * i);
    y.push_back((x.back() - 3.0) * (x.back() - 3.0));
  }
  EXPECT_TRUE(FitCubicMapping(x, y).NonMonotoneOn(1.0, 5.0));
  EXPECT_FALSE(FitCubicMapping(x, y).NonMonotoneOn(3.5, 5.0));
  std::vector<double> mono(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) mono[i] = x[i] * x[i] * x[i];
  EXPECT_FALSE(FitCubicMapping(x, mono).NonMonotoneOn(1.0, 5.0));
  EXPECT_TRUE(ScoreMos(x, y).non_monotone_mapping);
}

TEST(ScoreMos, ConsistentFields) {
  const auto x = Uniform(60, 1.0, 5.0, 6);
  auto y = Uniform(60, -0.3, 0.3, 7);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += 0.6 * x[i] + 1.0;
  const MosScores s = ScoreMos(x, y);
  EXPECT_EQ(s.n_files, 60u);
  EXPECT_NEAR(s.pcc_raw, PearsonOracle(x, y), 1e-12);
  EXPECT_NEAR(s.rmse_mapped, RmseAfterMapping(x, y), 1e-12);
  std::vector<double> mapped;
  for (double v : x) mapped.push_back(s.mapping(v));
  EXPECT_NEAR(s.pcc_mapped, PearsonOracle(mapped, y), 1e-12);
}

TEST(AcousticRmse, PerTask) {
  std::vector<Prediction> pred(2);
  pred[0].snr_db = 10;
  pred[1].snr_db = 20;
  pred[0].c50_db = 1;
  std::vector<std::array<double, kNumAcousticTasks>> truth = {{13, 0, 0, 0, 0}, {16, 0, 0, 0, 0}};
  const auto r = AcousticRmse(pred, truth);
  EXPECT_DOUBLE_EQ(r[0], std::sqrt(12.5));
  EXPECT_DOUBLE_EQ(r[1], 0.0);
  EXPECT_DOUBLE_EQ(r[4], std::sqrt(0.5));
  truth.pop_back();
  EXPECT_THROW(AcousticRmse(pred, truth), InvalidArgument);
}

TEST(Report, CsvAndTable) {
  EvalReport with_mos;
  with_mos.dataset = "val";
  const auto x = Uniform(10, 1, 5, 8);
  auto y = x;
  y[0] += 0.5;
  with_mos.mos = ScoreMos(x, y);
  EvalReport ra_only;
  ra_only.dataset = "room";
  ra_only.n_acoustics = 4;
  ra_only.acoustic_rmse = {1, 2, 3, 4, 5};
  const auto dir = testing::TempDir("report");
  WriteReportCsv((dir / "r.csv").string(), {with_mos, ra_only});
  std::ifstream in(dir / "r.csv");
  std::string header, first, second;
  std::getline(in, header);
  std::getline(in, first);
  std::getline(in, second);
  EXPECT_EQ(header,
            "dataset,n_files,pcc_raw,pcc_mapped,rmse_raw,rmse_mapped,non_monotone_mapping,"
            "n_acoustics,rmse_snr_db,rmse_sti,rmse_t60_s,rmse_drr_db,rmse_c50_db");
  EXPECT_EQ(first.substr(0, 7), "val,10,");
  EXPECT_EQ(first.substr(first.size() - 7), ",0,,,,,");
  EXPECT_EQ(second, "room,0,,,,,,4,1,2,3,4,5");
  std::ostringstream table;
  PrintReportTable(table, {with_mos, ra_only});
  EXPECT_NE(table.str().find("dataset val"), std::string::npos);
  EXPECT_NE(table.str().find("acoustics n=4"), std::string::npos);
}

TEST(Evaluate, UsesModelPredictions) {
  ModelConfig cfg;
  cfg.n_mels = 8;
  cfg.segment_width = 4;
  cfg.cnn_channels = {2, 2};
  cfg.pool_after = {1};
  cfg.shared = {1, 8, 8, 1};
  cfg.head = {1, 4, 4, 1};
  cfg.pool_hidden = 4;
  const MosraModel model(cfg, 3);
  TrainingData data;
  for (int i = 0; i < 6; ++i) {
    Example ex;
    ex.features = {1 + i % 2, 8, 4, {}};
    const auto g = testing::Gaussian(ex.features.num_segments * 32, 10 + i, 5.0);
    ex.features.values.assign(g.begin(), g.end());
    ex.mos = 1.0 + 0.5 * i;
    ex.acoustics = {1.0 * i, 0.1 * i, 0.2, 3.0, -1.0};
    (i < 4 ? data.mos : data.acoustics).push_back(ex);
  }
  const EvalReport r = Evaluate(model, data, "tiny");
  ASSERT_TRUE(r.mos.has_value());
  EXPECT_EQ(r.mos->n_files, 4u);
  EXPECT_EQ(r.n_acoustics, 2u);
  const auto preds = PredictExamples(model, data.acoustics);
  std::vector<std::array<double, kNumAcousticTasks>> truth = {data.acoustics[0].acoustics,
                                                              data.acoustics[1].acoustics};
  const auto expected = AcousticRmse(preds, truth);
  for (int t = 0; t < kNumAcousticTasks; ++t) EXPECT_EQ(r.acoustic_rmse[t], expected[t]);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const Prediction single = Predict(model, data.acoustics[i].features);
    EXPECT_NEAR(preds[i].t60_s, single.t60_s, 1e-5);
  }
}

}  // namespace
}  // namespace mosra
