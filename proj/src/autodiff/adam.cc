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

#include "mosra/autodiff/adam.h"

#include <cmath>

namespace mosra::ad {

template <typename T>
Adam<T>::Adam(std::vector<Tensor<T>> params, AdamOptions options)
    : params_(std::move(params)), options_(options) {
  for (const Tensor<T>& p : params_) {
    m_.emplace_back(p.size(), T(0));
    v_.emplace_back(p.size(), T(0));
  }
}

template <typename T>
void Adam<T>::Step() {
  ++t_;
  const double b1 = options_.beta1, b2 = options_.beta2;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  const double step = options_.lr / correction1;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Tensor<T>& p = params_[i];
    std::span<T> value = p.data();
    const bool has_grad = p.has_grad();
    std::span<const T> grad = has_grad ? p.grad() : std::span<const T>();
    std::vector<T>& m = m_[i];
    std::vector<T>& v = v_[i];
    for (std::size_t j = 0; j < value.size(); ++j) {
      const double g = has_grad ? grad[j] : 0.0;
      m[j] = static_cast<T>(b1 * m[j] + (1.0 - b1) * g);
      v[j] = static_cast<T>(b2 * v[j] + (1.0 - b2) * g * g);
      const double denom = std::sqrt(v[j] / correction2) + options_.eps;
      value[j] = static_cast<T>(value[j] - step * m[j] / denom);
    }
  }
}

template <typename T>
void Adam<T>::ZeroGrad() {
  for (Tensor<T>& p : params_) p.ZeroGrad();
}

template class Adam<float>;
template class Adam<double>;

}  // namespace mosra::ad
