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

#ifndef MOSRA_FFT_H_
#define MOSRA_FFT_H_

#include <complex>
#include <memory>
#include <span>
#include <vector>

namespace mosra {

// Real-input DFT of fixed length backed by FFTW. Plans are built with
// FFTW_ESTIMATE so results are reproducible run to run. An instance is not
// safe for concurrent use; construct one per thread.
class RealFft {
 public:
  explicit RealFft(int n);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  int size() const { return n_; }
  int num_bins() const { return n_ / 2 + 1; }

  // `in` holds size() samples; `out` receives num_bins() coefficients.
  void Forward(std::span<const double> in,
               std::span<std::complex<double>> out);
  // Unnormalized inverse: Inverse(Forward(x)) == size() * x.
  void Inverse(std::span<const std::complex<double>> in,
               std::span<double> out);

 private:
  struct Plans;
  int n_;
  std::unique_ptr<Plans> plans_;
};

// Full linear convolution (length a.size() + b.size() - 1) via FFT.
std::vector<double> FftConvolve(std::span<const double> a,
                                std::span<const double> b);

}  // namespace mosra

#endif  // MOSRA_FFT_H_
