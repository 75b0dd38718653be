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

#ifndef MOSRA_EVALUATOR_H_
#define MOSRA_EVALUATOR_H_

#include <array>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mosra/model.h"
#include "mosra/trainer.h"

namespace mosra {

// Pearson correlation. Throws InvalidArgument when fewer than 3 pairs are
// given or either side has zero variance.
double Pearson(std::span<const double> pred, std::span<const double> truth);

double Rmse(std::span<const double> pred, std::span<const double> truth);

// y ~ a0 + a1 x + a2 x^2 + a3 x^3, least squares.
struct CubicMapping {
  // Coefficients a0..a3 in the original x units.
  std::array<double, 4> coeffs{};
  // The fit itself is in z = (x - center) / scale, which keeps evaluation
  // well conditioned.
  double center = 0.0;
  double scale = 1.0;
  std::array<double, 4> scaled_coeffs{};
  // Fewer than 4 distinct x values: a straight line (or a constant for
  // constant x) was fitted instead.
  bool linear_fallback = false;

  double operator()(double x) const;
  // True if the derivative changes sign inside [lo, hi].
  bool NonMonotoneOn(double lo, double hi) const;
};

// Solves the least-squares problem by Householder QR on the Vandermonde
// matrix of the centred and scaled predictions.
CubicMapping FitCubicMapping(std::span<const double> pred, std::span<const double> truth);

double RmseAfterMapping(std::span<const double> pred, std::span<const double> truth);

struct MosScores {
  std::size_t n_files = 0;
  double pcc_raw = 0.0;
  double pcc_mapped = 0.0;
  double rmse_raw = 0.0;
  double rmse_mapped = 0.0;
  bool non_monotone_mapping = false;
  CubicMapping mapping;
};

MosScores ScoreMos(std::span<const double> pred, std::span<const double> truth);

struct EvalReport {
  std::string dataset;
  // Present when the set has at least 3 MOS rows.
  std::optional<MosScores> mos;
  std::size_t n_acoustics = 0;
  // Physical-unit RMSE per acoustic task, in task order (snr_db ... c50_db).
  std::array<double, kNumAcousticTasks> acoustic_rmse{};
};

// Plain RMSE of each acoustic task over rows that carry acoustic labels.
std::array<double, kNumAcousticTasks> AcousticRmse(
    std::span<const Prediction> pred, std::span<const std::array<double, kNumAcousticTasks>> truth);

// Physical-unit predictions for featurized examples (batched, eval mode).
std::vector<Prediction> PredictExamples(const MosraModel& model, std::span<const Example> examples);

// Scores MOS rows and acoustics rows of one dataset.
EvalReport Evaluate(const MosraModel& model, const TrainingData& data, const std::string& name);

void WriteReportCsv(const std::string& path, const std::vector<EvalReport>& reports);
void PrintReportTable(std::ostream& out, const std::vector<EvalReport>& reports);

}  // namespace mosra

#endif  // MOSRA_EVALUATOR_H_
