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

#ifndef MOSRA_AUTODIFF_OPS_H_
#define MOSRA_AUTODIFF_OPS_H_

#include <random>
#include <vector>

#include "mosra/autodiff/tensor.h"

namespace mosra::ad {

// Elementwise, equal shapes.
template <typename T> Tensor<T> Add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> Mul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> Scale(const Tensor<T>& x, T factor);
template <typename T> Tensor<T> Relu(const Tensor<T>& x);

// Sum of all elements, shape {1}.
template <typename T> Tensor<T> Sum(const Tensor<T>& x);

// Same values under a new shape with equal element count.
template <typename T> Tensor<T> Reshape(const Tensor<T>& x, Shape shape);

// [m, k] x [k, n] -> [m, n].
template <typename T> Tensor<T> MatMul(const Tensor<T>& a, const Tensor<T>& b);
// [m, k] x [n, k]^T -> [m, n].
template <typename T> Tensor<T> MatMulTransB(const Tensor<T>& a, const Tensor<T>& b);

// x [n, in] * weight [in, out] + bias [out].
template <typename T>
Tensor<T> Linear(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias);

// Normalizes each row of x [n, d] over its d entries, then scales/shifts.
template <typename T>
Tensor<T> LayerNorm(const Tensor<T>& x, const Tensor<T>& gamma,
                    const Tensor<T>& beta, T eps = T(1e-5));

// Row-wise softmax of x [n, m].
template <typename T> Tensor<T> SoftmaxRows(const Tensor<T>& x);

// Inverted dropout drawing its mask from `rng`; the identity when `rng` is
// null (evaluation) or p == 0.
template <typename T>
Tensor<T> Dropout(const Tensor<T>& x, T p, std::mt19937_64* rng);

// x [N, C, H, W], weight [O, C, k, k], bias [O] (may be undefined).
template <typename T>
Tensor<T> Conv2d(const Tensor<T>& x, const Tensor<T>& weight,
                 const Tensor<T>& bias, int stride = 1, int padding = 1);

// Running statistics of a batch-norm layer. Not trainable.
template <typename T>
struct BatchNormStats {
  std::vector<T> mean;
  std::vector<T> var;
};

// Per-channel normalization of x [N, C, H, W]. With `update` null this is
// evaluation mode and normalizes by `running`. Otherwise batch statistics
// are used and update = (1 - momentum) * running + momentum * batch (the
// two may alias).
template <typename T>
Tensor<T> BatchNorm2d(const Tensor<T>& x, const Tensor<T>& gamma,
                      const Tensor<T>& beta, const BatchNormStats<T>& running,
                      BatchNormStats<T>* update, T momentum = T(0.1),
                      T eps = T(1e-5));

// Non-overlapping max pooling with window == stride == `size`; trailing
// rows/columns that do not fill a window are dropped.
template <typename T> Tensor<T> MaxPool2d(const Tensor<T>& x, int size = 2);

// [N, C, H, W] -> [N, C].
template <typename T> Tensor<T> GlobalAvgPool(const Tensor<T>& x);

// Rows [start, start + count) of x [n, d].
template <typename T> Tensor<T> SliceRows(const Tensor<T>& x, int start, int count);

// Concatenates single-element tensors into shape {k}.
template <typename T> Tensor<T> Stack(const std::vector<Tensor<T>>& scalars);

// Mean squared error between pred and a same-shape target; shape {1}.
template <typename T> Tensor<T> Mse(const Tensor<T>& pred, const Tensor<T>& target);

}  // namespace mosra::ad

#endif  // MOSRA_AUTODIFF_OPS_H_
