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

#include "mosra/fft.h"

#include <fftw3.h>

#include <algorithm>
#include <cstring>
#include <mutex>

#include "mosra/errors.h"

namespace mosra {
namespace {

// The FFTW planner keeps global state.
std::mutex& PlannerMutex() {
  static std::mutex m;
  return m;
}

int NextFastSize(int n) {
  int size = 1;
  while (size < n) size <<= 1;
  return size;
}

}  // namespace

struct RealFft::Plans {
  double* real = nullptr;
  fftw_complex* spec = nullptr;
  fftw_plan forward = nullptr;
  fftw_plan inverse = nullptr;
};

RealFft::RealFft(int n) : n_(n), plans_(std::make_unique<Plans>()) {
  if (n < 1) throw InvalidArgument("RealFft: size must be >= 1");
  std::lock_guard<std::mutex> lock(PlannerMutex());
  plans_->real = fftw_alloc_real(n);
  plans_->spec = fftw_alloc_complex(n / 2 + 1);
  plans_->forward = fftw_plan_dft_r2c_1d(n, plans_->real, plans_->spec,
                                         FFTW_ESTIMATE);
  plans_->inverse = fftw_plan_dft_c2r_1d(n, plans_->spec, plans_->real,
                                         FFTW_ESTIMATE);
}

RealFft::~RealFft() {
  std::lock_guard<std::mutex> lock(PlannerMutex());
  fftw_destroy_plan(plans_->forward);
  fftw_destroy_plan(plans_->inverse);
  fftw_free(plans_->real);
  fftw_free(plans_->spec);
}

void RealFft::Forward(std::span<const double> in,
                      std::span<std::complex<double>> out) {
  std::copy(in.begin(), in.end(), plans_->real);
  fftw_execute(plans_->forward);
  std::memcpy(static_cast<void*>(out.data()), plans_->spec,
              sizeof(fftw_complex) * num_bins());
}

void RealFft::Inverse(std::span<const std::complex<double>> in,
                      std::span<double> out) {
  std::memcpy(plans_->spec, in.data(), sizeof(fftw_complex) * num_bins());
  fftw_execute(plans_->inverse);
  std::copy(plans_->real, plans_->real + n_, out.begin());
}

std::vector<double> FftConvolve(std::span<const double> a,
                                std::span<const double> b) {
  if (a.empty() || b.empty()) return {};
  const std::size_t out_len = a.size() + b.size() - 1;
  const int n = NextFastSize(static_cast<int>(out_len));
  RealFft fft(n);
  std::vector<double> pa(n, 0.0), pb(n, 0.0);
  std::copy(a.begin(), a.end(), pa.begin());
  std::copy(b.begin(), b.end(), pb.begin());
  std::vector<std::complex<double>> fa(fft.num_bins()), fb(fft.num_bins());
  fft.Forward(pa, fa);
  fft.Forward(pb, fb);
  for (int k = 0; k < fft.num_bins(); ++k) fa[k] *= fb[k] / static_cast<double>(n);
  fft.Inverse(fa, pa);
  pa.resize(out_len);
  return pa;
}

}  // namespace mosra
