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

#ifndef MOSRA_AUTODIFF_ADAM_H_
#define MOSRA_AUTODIFF_ADAM_H_

#include <vector>

#include "mosra/autodiff/tensor.h"

namespace mosra::ad {

struct AdamOptions {
  double lr = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with bias correction over a fixed list of parameters. Moments are
// allocated on construction and kept in parameter order.
template <typename T>
class Adam {
 public:
  Adam(std::vector<Tensor<T>> params, AdamOptions options = {});

  // One update from the gradients currently accumulated on the parameters.
  // Parameters that never received a gradient count as zero-gradient.
  void Step();
  void ZeroGrad();

  long long step_count() const { return t_; }
  const AdamOptions& options() const { return options_; }
  const std::vector<std::vector<T>>& first_moments() const { return m_; }
  const std::vector<std::vector<T>>& second_moments() const { return v_; }

 private:
  std::vector<Tensor<T>> params_;
  AdamOptions options_;
  std::vector<std::vector<T>> m_;
  std::vector<std::vector<T>> v_;
  long long t_ = 0;
};

}  // namespace mosra::ad

#endif  // MOSRA_AUTODIFF_ADAM_H_
