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

#include "mosra/evaluator.h"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>

#include "mosra/errors.h"

namespace mosra {
namespace {

void CheckPairs(std::span<const double> pred, std::span<const double> truth, std::size_t min_n) {
  if (pred.size() != truth.size()) throw InvalidArgument("prediction and label counts differ");
  if (pred.size() < min_n) {
    throw InvalidArgument("need at least " + std::to_string(min_n) + " pairs, got " +
                          std::to_string(pred.size()));
  }
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!std::isfinite(pred[i]) || !std::isfinite(truth[i])) {
      throw InvalidArgument("non-finite value in evaluation pair " + std::to_string(i));
    }
  }
}

double Mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

double Pearson(std::span<const double> pred, std::span<const double> truth) {
  CheckPairs(pred, truth, 3);
  const double mp = Mean(pred), mt = Mean(truth);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double a = pred[i] - mp, b = truth[i] - mt;
    sxy += a * b;
    sxx += a * a;
    syy += b * b;
  }
  if (sxx <= 0.0 || syy <= 0.0) throw InvalidArgument("Pearson correlation of a constant series");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double Rmse(std::span<const double> pred, std::span<const double> truth) {
  CheckPairs(pred, truth, 1);
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += (pred[i] - truth[i]) * (pred[i] - truth[i]);
  return std::sqrt(s / static_cast<double>(pred.size()));
}

double CubicMapping::operator()(double x) const {
  const double z = (x - center) / scale;
  const auto& c = scaled_coeffs;
  return c[0] + z * (c[1] + z * (c[2] + z * c[3]));
}

bool CubicMapping::NonMonotoneOn(double lo, double hi) const {
  // dy/dz = c1 + 2 c2 z + 3 c3 z^2; a sign change needs a simple root inside.
  const double zlo = (lo - center) / scale, zhi = (hi - center) / scale;
  const double a = 3.0 * scaled_coeffs[3], b = 2.0 * scaled_coeffs[2], c = scaled_coeffs[1];
  std::vector<double> roots;
  if (a == 0.0) {
    if (b != 0.0) roots.push_back(-c / b);
  } else {
    const double disc = b * b - 4.0 * a * c;
    if (disc > 0.0) {
      const double s = std::sqrt(disc);
      roots.push_back((-b - s) / (2.0 * a));
      roots.push_back((-b + s) / (2.0 * a));
    }
  }
  for (double r : roots) {
    if (r > std::min(zlo, zhi) && r < std::max(zlo, zhi)) return true;
  }
  return false;
}

CubicMapping FitCubicMapping(std::span<const double> pred, std::span<const double> truth) {
  CheckPairs(pred, truth, 1);
  const std::size_t n = pred.size();
  std::vector<double> distinct(pred.begin(), pred.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

  CubicMapping m;
  m.center = Mean(pred);
  double var = 0.0;
  for (double x : pred) var += (x - m.center) * (x - m.center);
  m.scale = distinct.size() > 1 ? std::sqrt(var / static_cast<double>(n)) : 1.0;

  int degree = 3;
  if (distinct.size() < 4) {
    m.linear_fallback = true;
    degree = distinct.size() > 1 ? 1 : 0;
  }
  Eigen::MatrixXd a(n, degree + 1);
  Eigen::VectorXd y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double z = (pred[i] - m.center) / m.scale;
    double p = 1.0;
    for (int k = 0; k <= degree; ++k, p *= z) a(i, k) = p;
    y(i) = truth[i];
  }
  const Eigen::VectorXd sol = a.householderQr().solve(y);
  for (int k = 0; k <= degree; ++k) m.scaled_coeffs[k] = sol(k);

  // Expand sum c_k ((x - center) / scale)^k into powers of x.
  for (int k = 0; k <= 3; ++k) {
    const double ck = m.scaled_coeffs[k] / std::pow(m.scale, k);
    double binom = 1.0;
    for (int j = 0; j <= k; ++j) {
      m.coeffs[j] += ck * binom * std::pow(-m.center, k - j);
      binom = binom * (k - j) / (j + 1);
    }
  }
  return m;
}

double RmseAfterMapping(std::span<const double> pred, std::span<const double> truth) {
  const CubicMapping m = FitCubicMapping(pred, truth);
  std::vector<double> mapped(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) mapped[i] = m(pred[i]);
  return Rmse(mapped, truth);
}

MosScores ScoreMos(std::span<const double> pred, std::span<const double> truth) {
  MosScores s;
  s.n_files = pred.size();
  s.pcc_raw = Pearson(pred, truth);
  s.rmse_raw = Rmse(pred, truth);
  s.mapping = FitCubicMapping(pred, truth);
  std::vector<double> mapped(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) mapped[i] = s.mapping(pred[i]);
  s.rmse_mapped = Rmse(mapped, truth);
  s.pcc_mapped = Pearson(mapped, truth);
  const auto [lo, hi] = std::minmax_element(pred.begin(), pred.end());
  s.non_monotone_mapping = s.mapping.NonMonotoneOn(*lo, *hi);
  return s;
}

std::array<double, kNumAcousticTasks> AcousticRmse(
    std::span<const Prediction> pred,
    std::span<const std::array<double, kNumAcousticTasks>> truth) {
  if (pred.size() != truth.size()) throw InvalidArgument("prediction and label counts differ");
  if (pred.empty()) throw InvalidArgument("no acoustic rows to score");
  std::array<double, kNumAcousticTasks> out{};
  for (int t = 0; t < kNumAcousticTasks; ++t) {
    std::vector<double> p, y;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      p.push_back(pred[i][static_cast<Task>(t + 1)]);
      y.push_back(truth[i][t]);
    }
    out[t] = Rmse(p, y);
  }
  return out;
}

std::vector<Prediction> PredictExamples(const MosraModel& model,
                                        std::span<const Example> examples) {
  std::vector<Prediction> out;
  out.reserve(examples.size());
  for (const auto& row : PredictNormalized(model, examples)) {
    Prediction p;
    for (Task task : kAllTasks) p[task] = model.Denormalize(task, row[TaskIndex(task)]);
    out.push_back(p);
  }
  return out;
}

EvalReport Evaluate(const MosraModel& model, const TrainingData& data, const std::string& name) {
  EvalReport report;
  report.dataset = name;
  if (data.mos.size() >= 3) {
    std::vector<double> pred, truth;
    for (const Prediction& p : PredictExamples(model, data.mos)) pred.push_back(p.mos);
    for (const Example& ex : data.mos) truth.push_back(ex.mos);
    report.mos = ScoreMos(pred, truth);
  }
  report.n_acoustics = data.acoustics.size();
  if (!data.acoustics.empty()) {
    std::vector<std::array<double, kNumAcousticTasks>> truth;
    for (const Example& ex : data.acoustics) truth.push_back(ex.acoustics);
    report.acoustic_rmse = AcousticRmse(PredictExamples(model, data.acoustics), truth);
  }
  return report;
}

void WriteReportCsv(const std::string& path, const std::vector<EvalReport>& reports) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "dataset,n_files,pcc_raw,pcc_mapped,rmse_raw,rmse_mapped,non_monotone_mapping,"
         "n_acoustics";
  for (int t = 1; t < kNumTasks; ++t) out << ",rmse_" << TaskName(static_cast<Task>(t));
  out << '\n' << std::setprecision(10);
  for (const EvalReport& r : reports) {
    out << r.dataset << ',';
    if (r.mos) {
      out << r.mos->n_files << ',' << r.mos->pcc_raw << ',' << r.mos->pcc_mapped << ','
          << r.mos->rmse_raw << ',' << r.mos->rmse_mapped << ','
          << (r.mos->non_monotone_mapping ? 1 : 0);
    } else {
      out << "0,,,,,";
    }
    out << ',' << r.n_acoustics;
    for (double v : r.acoustic_rmse) {
      out << ',';
      if (r.n_acoustics > 0) out << v;
    }
    out << '\n';
  }
  if (!out) throw IoError("failed writing '" + path + "'");
}

void PrintReportTable(std::ostream& out, const std::vector<EvalReport>& reports) {
  const auto flags = out.flags();
  out << std::fixed << std::setprecision(3);
  for (const EvalReport& r : reports) {
    out << "dataset " << r.dataset << '\n';
    if (r.mos) {
      const MosScores& m = *r.mos;
      out << "  MOS  n=" << m.n_files << "  PCC raw " << m.pcc_raw << "  mapped " << m.pcc_mapped
          << "  RMSE raw " << m.rmse_raw << "  mapped " << m.rmse_mapped << '\n';
      if (m.non_monotone_mapping) out << "  note: fitted cubic is non-monotone over the range\n";
      if (m.mapping.linear_fallback) out << "  note: too few distinct values, linear mapping\n";
    }
    if (r.n_acoustics > 0) {
      out << "  acoustics n=" << r.n_acoustics << '\n';
      for (int t = 0; t < kNumAcousticTasks; ++t) {
        out << "    " << std::left << std::setw(8) << TaskName(static_cast<Task>(t + 1))
            << std::right << " RMSE " << r.acoustic_rmse[t] << '\n';
      }
    }
  }
  out.flags(flags);
}

}  // namespace mosra
