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

#include "mosra/autodiff/ops.h"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>

#include "mosra/errors.h"

namespace mosra::ad {
namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMat<T>>;

// Parent i of `self` when it wants a gradient, else nullptr.
template <typename T>
Node<T>* GradParent(Node<T>& self, std::size_t i) {
  if (i >= self.parents.size()) return nullptr;
  Node<T>* p = self.parents[i].get();
  return p && p->requires_grad ? p : nullptr;
}

template <typename T>
void RequireSameShape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + ShapeString(a.shape()) +
                     " vs " + ShapeString(b.shape()));
  }
}

template <typename T>
void RequireRank(const Tensor<T>& x, int rank, const char* op) {
  if (x.rank() != rank) {
    throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) +
                     ", got " + ShapeString(x.shape()));
  }
}

// Output columns [lo, hi) of a row whose input column ow * stride - pad + kj
// falls inside [0, w).
inline void ValidRange(int wo, int w, int stride, int pad, int kj, int& lo, int& hi) {
  lo = 0;
  while (lo < wo && lo * stride - pad + kj < 0) ++lo;
  hi = wo;
  while (hi > lo && (hi - 1) * stride - pad + kj >= w) --hi;
}

// Gathers the k x k receptive fields of one [C, H, W] image into the
// [C * k * k, Ho * Wo] block of a row-major matrix with row stride ld.
template <typename T>
void Im2Col(const T* x, int c, int h, int w, int k, int stride, int pad, int ho,
            int wo, std::size_t ld, T* col) {
  for (int ci = 0; ci < c; ++ci) {
    const T* plane = x + static_cast<std::size_t>(ci) * h * w;
    for (int ki = 0; ki < k; ++ki) {
      for (int kj = 0; kj < k; ++kj) {
        T* row = col + static_cast<std::size_t>((ci * k + ki) * k + kj) * ld;
        int lo, hi;
        ValidRange(wo, w, stride, pad, kj, lo, hi);
        for (int oh = 0; oh < ho; ++oh) {
          T* dst = row + static_cast<std::size_t>(oh) * wo;
          const int ih = oh * stride - pad + ki;
          if (ih < 0 || ih >= h) {
            std::fill(dst, dst + wo, T(0));
            continue;
          }
          const T* src = plane + static_cast<std::size_t>(ih) * w - pad + kj;
          std::fill(dst, dst + lo, T(0));
          if (stride == 1) {
            std::copy(src + lo, src + hi, dst + lo);
          } else {
            for (int ow = lo; ow < hi; ++ow) dst[ow] = src[ow * stride];
          }
          std::fill(dst + hi, dst + wo, T(0));
        }
      }
    }
  }
}

template <typename T>
void Col2ImAdd(const T* col, int c, int h, int w, int k, int stride, int pad,
               int ho, int wo, std::size_t ld, T* dx) {
  for (int ci = 0; ci < c; ++ci) {
    T* plane = dx + static_cast<std::size_t>(ci) * h * w;
    for (int ki = 0; ki < k; ++ki) {
      for (int kj = 0; kj < k; ++kj) {
        const T* row = col + static_cast<std::size_t>((ci * k + ki) * k + kj) * ld;
        int lo, hi;
        ValidRange(wo, w, stride, pad, kj, lo, hi);
        for (int oh = 0; oh < ho; ++oh) {
          const int ih = oh * stride - pad + ki;
          if (ih < 0 || ih >= h) continue;
          const T* src = row + static_cast<std::size_t>(oh) * wo;
          T* dst = plane + static_cast<std::size_t>(ih) * w - pad + kj;
          for (int ow = lo; ow < hi; ++ow) dst[ow * stride] += src[ow];
        }
      }
    }
  }
}

}  // namespace

template <typename T>
Tensor<T> Add(const Tensor<T>& a, const Tensor<T>& b) {
  RequireSameShape(a, b, "Add");
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + b.data()[i];
  return MakeResult<T>(a.shape(), std::move(out), {a, b}, [](Node<T>& self) {
    for (std::size_t p = 0; p < 2; ++p) {
      if (Node<T>* in = GradParent(self, p)) {
        auto& g = in->Grad();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
      }
    }
  });
}

template <typename T>
Tensor<T> Mul(const Tensor<T>& a, const Tensor<T>& b) {
  RequireSameShape(a, b, "Mul");
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
  return MakeResult<T>(a.shape(), std::move(out), {a, b}, [](Node<T>& self) {
    Node<T>* na = self.parents[0].get();
    Node<T>* nb = self.parents[1].get();
    if (Node<T>* in = GradParent(self, 0)) {
      auto& g = in->Grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * nb->value[i];
    }
    if (Node<T>* in = GradParent(self, 1)) {
      auto& g = in->Grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * na->value[i];
    }
  });
}

template <typename T>
Tensor<T> Scale(const Tensor<T>& x, T factor) {
  std::vector<T> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.data()[i] * factor;
  return MakeResult<T>(x.shape(), std::move(out), {x}, [factor](Node<T>& self) {
    if (Node<T>* in = GradParent(self, 0)) {
      auto& g = in->Grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * factor;
    }
  });
}

template <typename T>
Tensor<T> Relu(const Tensor<T>& x) {
  std::vector<T> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::max(x.data()[i], T(0));
  return MakeResult<T>(x.shape(), std::move(out), {x}, [](Node<T>& self) {
    if (Node<T>* in = GradParent(self, 0)) {
      auto& g = in->Grad();
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (self.value[i] > T(0)) g[i] += self.grad[i];
      }
    }
  });
}

template <typename T>
Tensor<T> Sum(const Tensor<T>& x) {
  T total = 0;
  for (T v : x.data()) total += v;
  return MakeResult<T>({1}, {total}, {x}, [](Node<T>& self) {
    if (Node<T>* in = GradParent(self, 0)) {
      for (T& g : in->Grad()) g += self.grad[0];
    }
  });
}

template <typename T>
Tensor<T> Reshape(const Tensor<T>& x, Shape shape) {
  if (NumElements(shape) != x.size()) {
    throw ShapeError("Reshape: cannot view " + ShapeString(x.shape()) + " as " +
                     ShapeString(shape));
  }
  std::vector<T> out(x.data().begin(), x.data().end());
  return MakeResult<T>(std::move(shape), std::move(out), {x}, [](Node<T>& self) {
    if (Node<T>* in = GradParent(self, 0)) {
      auto& g = in->Grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
  });
}

template <typename T>
Tensor<T> MatMul(const Tensor<T>& a, const Tensor<T>& b) {
  RequireRank(a, 2, "MatMul");
  RequireRank(b, 2, "MatMul");
  const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) {
    throw ShapeError("MatMul: inner dimensions differ, " + ShapeString(a.shape()) +
                     " x " + ShapeString(b.shape()));
  }
  std::vector<T> out(static_cast<std::size_t>(m) * n);
  MatMap<T>(out.data(), m, n).noalias() =
      ConstMatMap<T>(a.data().data(), m, k) * ConstMatMap<T>(b.data().data(), k, n);
  return MakeResult<T>({m, n}, std::move(out), {a, b}, [m, k, n](Node<T>& self) {
    ConstMatMap<T> dy(self.grad.data(), m, n);
    if (Node<T>* in = GradParent(self, 0)) {
      MatMap<T>(in->Grad().data(), m, k).noalias() +=
          dy * ConstMatMap<T>(self.parents[1]->value.data(), k, n).transpose();
    }
    if (Node<T>* in = GradParent(self, 1)) {
      MatMap<T>(in->Grad().data(), k, n).noalias() +=
          ConstMatMap<T>(self.parents[0]->value.data(), m, k).transpose() * dy;
    }
  });
}

template <typename T>
Tensor<T> MatMulTransB(const Tensor<T>& a, const Tensor<T>& b) {
  RequireRank(a, 2, "MatMulTransB");
  RequireRank(b, 2, "MatMulTransB");
  const int m = a.dim(0), k = a.dim(1), n = b.dim(0);
  if (b.dim(1) != k) {
    throw ShapeError("MatMulTransB: inner dimensions differ, " +
                     ShapeString(a.shape()) + " x " + ShapeString(b.shape()) + "^T");
  }
  std::vector<T> out(static_cast<std::size_t>(m) * n);
  MatMap<T>(out.data(), m, n).noalias() =
      ConstMatMap<T>(a.data().data(), m, k) *
      ConstMatMap<T>(b.data().data(), n, k).transpose();
  return MakeResult<T>({m, n}, std::move(out), {a, b}, [m, k, n](Node<T>& self) {
    ConstMatMap<T> dy(self.grad.data(), m, n);
    if (Node<T>* in = GradParent(self, 0)) {
      MatMap<T>(in->Grad().data(), m, k).noalias() +=
          dy * ConstMatMap<T>(self.parents[1]->value.data(), n, k);
    }
    if (Node<T>* in = GradParent(self, 1)) {
      MatMap<T>(in->Grad().data(), n, k).noalias() +=
          dy.transpose() * ConstMatMap<T>(self.parents[0]->value.data(), m, k);
    }
  });
}

template <typename T>
Tensor<T> Linear(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias) {
  RequireRank(x, 2, "Linear");
  RequireRank(weight, 2, "Linear");
  const int n = x.dim(0), in_dim = x.dim(1), out_dim = weight.dim(1);
  if (weight.dim(0) != in_dim || bias.size() != static_cast<std::size_t>(out_dim)) {
    throw ShapeError("Linear: input " + ShapeString(x.shape()) + " incompatible with weight " +
                     ShapeString(weight.shape()) + " and bias " + ShapeString(bias.shape()));
  }
  std::vector<T> out(static_cast<std::size_t>(n) * out_dim);
  MatMap<T> y(out.data(), n, out_dim);
  y.noalias() = ConstMatMap<T>(x.data().data(), n, in_dim) *
                ConstMatMap<T>(weight.data().data(), in_dim, out_dim);
  y.rowwise() += Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>>(bias.data().data(), out_dim);
  return MakeResult<T>({n, out_dim}, std::move(out), {x, weight, bias},
                       [n, in_dim, out_dim](Node<T>& self) {
    ConstMatMap<T> dy(self.grad.data(), n, out_dim);
    if (Node<T>* in = GradParent(self, 0)) {
      MatMap<T>(in->Grad().data(), n, in_dim).noalias() +=
          dy * ConstMatMap<T>(self.parents[1]->value.data(), in_dim, out_dim).transpose();
    }
    if (Node<T>* in = GradParent(self, 1)) {
      MatMap<T>(in->Grad().data(), in_dim, out_dim).noalias() +=
          ConstMatMap<T>(self.parents[0]->value.data(), n, in_dim).transpose() * dy;
    }
    if (Node<T>* in = GradParent(self, 2)) {
      Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>>(in->Grad().data(), out_dim) +=
          dy.colwise().sum();
    }
  });
}

template <typename T>
Tensor<T> LayerNorm(const Tensor<T>& x, const Tensor<T>& gamma,
                    const Tensor<T>& beta, T eps) {
  RequireRank(x, 2, "LayerNorm");
  const int n = x.dim(0), d = x.dim(1);
  if (gamma.size() != static_cast<std::size_t>(d) || beta.size() != static_cast<std::size_t>(d)) {
    throw ShapeError("LayerNorm: input " + ShapeString(x.shape()) + " vs gamma " +
                     ShapeString(gamma.shape()));
  }
  std::vector<T> out(x.size());
  std::vector<T> mean(n), inv_std(n);
  const T* xv = x.data().data();
  for (int r = 0; r < n; ++r) {
    double mu = 0.0, var = 0.0;
    for (int j = 0; j < d; ++j) mu += xv[r * d + j];
    mu /= d;
    for (int j = 0; j < d; ++j) {
      const double c = xv[r * d + j] - mu;
      var += c * c;
    }
    var /= d;
    mean[r] = static_cast<T>(mu);
    inv_std[r] = static_cast<T>(1.0 / std::sqrt(var + eps));
    for (int j = 0; j < d; ++j) {
      out[r * d + j] = (xv[r * d + j] - mean[r]) * inv_std[r] * gamma.data()[j] + beta.data()[j];
    }
  }
  return MakeResult<T>(x.shape(), std::move(out), {x, gamma, beta},
                       [n, d, mean = std::move(mean), inv_std = std::move(inv_std)](Node<T>& self) {
    const T* xv = self.parents[0]->value.data();
    const T* gv = self.parents[1]->value.data();
    Node<T>* nx = GradParent(self, 0);
    Node<T>* ng = GradParent(self, 1);
    Node<T>* nb = GradParent(self, 2);
    std::vector<T> xhat(d), dxhat(d);
    for (int r = 0; r < n; ++r) {
      const T* dy = &self.grad[static_cast<std::size_t>(r) * d];
      T sum_dxhat = 0, sum_dxhat_xhat = 0;
      for (int j = 0; j < d; ++j) {
        xhat[j] = (xv[r * d + j] - mean[r]) * inv_std[r];
        dxhat[j] = dy[j] * gv[j];
        sum_dxhat += dxhat[j];
        sum_dxhat_xhat += dxhat[j] * xhat[j];
      }
      if (ng) {
        auto& g = ng->Grad();
        for (int j = 0; j < d; ++j) g[j] += dy[j] * xhat[j];
      }
      if (nb) {
        auto& g = nb->Grad();
        for (int j = 0; j < d; ++j) g[j] += dy[j];
      }
      if (nx) {
        T* g = &nx->Grad()[static_cast<std::size_t>(r) * d];
        for (int j = 0; j < d; ++j) {
          g[j] += inv_std[r] / d * (d * dxhat[j] - sum_dxhat - xhat[j] * sum_dxhat_xhat);
        }
      }
    }
  });
}

template <typename T>
Tensor<T> SoftmaxRows(const Tensor<T>& x) {
  RequireRank(x, 2, "SoftmaxRows");
  const int n = x.dim(0), m = x.dim(1);
  std::vector<T> out(x.size());
  const T* xv = x.data().data();
  for (int r = 0; r < n; ++r) {
    T mx = -std::numeric_limits<T>::infinity();
    for (int j = 0; j < m; ++j) mx = std::max(mx, xv[r * m + j]);
    T total = 0;
    for (int j = 0; j < m; ++j) {
      out[r * m + j] = std::exp(xv[r * m + j] - mx);
      total += out[r * m + j];
    }
    for (int j = 0; j < m; ++j) out[r * m + j] /= total;
  }
  return MakeResult<T>(x.shape(), std::move(out), {x}, [n, m](Node<T>& self) {
    if (Node<T>* in = GradParent(self, 0)) {
      auto& g = in->Grad();
      for (int r = 0; r < n; ++r) {
        const T* y = &self.value[static_cast<std::size_t>(r) * m];
        const T* dy = &self.grad[static_cast<std::size_t>(r) * m];
        T dot = 0;
        for (int j = 0; j < m; ++j) dot += dy[j] * y[j];
        for (int j = 0; j < m; ++j) g[r * m + j] += y[j] * (dy[j] - dot);
      }
    }
  });
}

template <typename T>
Tensor<T> Dropout(const Tensor<T>& x, T p, std::mt19937_64* rng) {
  if (rng == nullptr || p <= T(0)) return x;
  if (p >= T(1)) throw InvalidArgument("dropout probability must be < 1");
  std::vector<T> mask(x.size());
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const T keep_scale = T(1) / (T(1) - p);
  for (T& v : mask) v = u(*rng) < p ? T(0) : keep_scale;
  std::vector<T> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.data()[i] * mask[i];
  return MakeResult<T>(x.shape(), std::move(out), {x}, [mask = std::move(mask)](Node<T>& self) {
    if (Node<T>* in = GradParent(self, 0)) {
      auto& g = in->Grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * mask[i];
    }
  });
}

template <typename T>
Tensor<T> Conv2d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias,
                 int stride, int padding) {
  RequireRank(x, 4, "Conv2d");
  RequireRank(weight, 4, "Conv2d");
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const int o = weight.dim(0), k = weight.dim(2);
  if (weight.dim(1) != c || weight.dim(3) != k) {
    throw ShapeError("Conv2d: input " + ShapeString(x.shape()) + " incompatible with weight " +
                     ShapeString(weight.shape()));
  }
  if (bias.defined() && bias.size() != static_cast<std::size_t>(o)) {
    throw ShapeError("Conv2d: bias " + ShapeString(bias.shape()) + " vs weight " +
                     ShapeString(weight.shape()));
  }
  if (stride < 1 || padding < 0) throw InvalidArgument("Conv2d: bad stride/padding");
  const int ho = (h + 2 * padding - k) / stride + 1;
  const int wo = (w + 2 * padding - k) / stride + 1;
  if (ho < 1 || wo < 1) {
    throw ShapeError("Conv2d: kernel " + ShapeString(weight.shape()) +
                     " larger than padded input " + ShapeString(x.shape()));
  }
  const int ckk = c * k * k;
  const int hw = ho * wo;
  const std::size_t in_stride = static_cast<std::size_t>(c) * h * w;
  const std::size_t out_stride = static_cast<std::size_t>(o) * hw;

  // Samples are processed in groups so each GEMM has a wide right-hand side
  // while the column buffer stays around a million elements.
  const int group = std::clamp(static_cast<int>((std::size_t{1} << 18) / (std::size_t(ckk) * hw)),
                               1, n);

  std::vector<T> out(static_cast<std::size_t>(n) * out_stride);
  {
    std::vector<T> col(static_cast<std::size_t>(ckk) * hw * group);
    std::vector<T> y(static_cast<std::size_t>(o) * hw * group);
    ConstMatMap<T> wmat(weight.data().data(), o, ckk);
    for (int i0 = 0; i0 < n; i0 += group) {
      const int g = std::min(group, n - i0);
      const std::size_t ld = static_cast<std::size_t>(g) * hw;
      for (int i = 0; i < g; ++i) {
        Im2Col(x.data().data() + (i0 + i) * in_stride, c, h, w, k, stride, padding, ho, wo, ld,
               col.data() + i * hw);
      }
      MatMap<T> ymat(y.data(), o, ld);
      ymat.noalias() = wmat * ConstMatMap<T>(col.data(), ckk, ld);
      for (int i = 0; i < g; ++i) {
        MatMap<T> dst(out.data() + (i0 + i) * out_stride, o, hw);
        dst = ymat.middleCols(static_cast<Eigen::Index>(i) * hw, hw);
        if (bias.defined()) {
          dst.colwise() +=
              Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>>(bias.data().data(), o);
        }
      }
    }
  }

  return MakeResult<T>({n, o, ho, wo}, std::move(out), {x, weight, bias},
                       [=](Node<T>& self) {
    Node<T>* nx = GradParent(self, 0);
    Node<T>* nw = GradParent(self, 1);
    Node<T>* nb = GradParent(self, 2);
    const T* xv = self.parents[0]->value.data();
    ConstMatMap<T> wmat(self.parents[1]->value.data(), o, ckk);
    std::vector<T> col(nw ? static_cast<std::size_t>(ckk) * hw * group : 0);
    std::vector<T> dcol(nx ? static_cast<std::size_t>(ckk) * hw * group : 0);
    std::vector<T> dy(static_cast<std::size_t>(o) * hw * group);
    for (int i0 = 0; i0 < n; i0 += group) {
      const int g = std::min(group, n - i0);
      const std::size_t ld = static_cast<std::size_t>(g) * hw;
      MatMap<T> dymat(dy.data(), o, ld);
      for (int i = 0; i < g; ++i) {
        dymat.middleCols(static_cast<Eigen::Index>(i) * hw, hw) =
            ConstMatMap<T>(self.grad.data() + (i0 + i) * out_stride, o, hw);
      }
      if (nw) {
        for (int i = 0; i < g; ++i) {
          Im2Col(xv + (i0 + i) * in_stride, c, h, w, k, stride, padding, ho, wo, ld,
                 col.data() + i * hw);
        }
        MatMap<T>(nw->Grad().data(), o, ckk).noalias() +=
            dymat * ConstMatMap<T>(col.data(), ckk, ld).transpose();
      }
      if (nb) {
        Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>>(nb->Grad().data(), o) +=
            dymat.rowwise().sum();
      }
      if (nx) {
        MatMap<T> dcolmat(dcol.data(), ckk, ld);
        dcolmat.noalias() = wmat.transpose() * dymat;
        for (int i = 0; i < g; ++i) {
          Col2ImAdd(dcol.data() + i * hw, c, h, w, k, stride, padding, ho, wo, ld,
                    nx->Grad().data() + (i0 + i) * in_stride);
        }
      }
    }
  });
}

template <typename T>
Tensor<T> BatchNorm2d(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                      const BatchNormStats<T>& running, BatchNormStats<T>* update,
                      T momentum, T eps) {
  const bool training = update != nullptr;
  RequireRank(x, 4, "BatchNorm2d");
  const int n = x.dim(0), c = x.dim(1);
  const std::size_t plane = static_cast<std::size_t>(x.dim(2)) * x.dim(3);
  if (gamma.size() != static_cast<std::size_t>(c) || beta.size() != static_cast<std::size_t>(c) ||
      running.mean.size() != static_cast<std::size_t>(c) ||
      running.var.size() != static_cast<std::size_t>(c)) {
    throw ShapeError("BatchNorm2d: input " + ShapeString(x.shape()) +
                     " vs per-channel parameters " + ShapeString(gamma.shape()));
  }
  const std::size_t count = static_cast<std::size_t>(n) * plane;
  std::vector<T> mean(c), inv_std(c);
  const T* xv = x.data().data();
  for (int ch = 0; ch < c; ++ch) {
    if (training) {
      double mu = 0.0;
      for (int i = 0; i < n; ++i) {
        const T* p = xv + (static_cast<std::size_t>(i) * c + ch) * plane;
        for (std::size_t j = 0; j < plane; ++j) mu += p[j];
      }
      mu /= static_cast<double>(count);
      double var = 0.0;
      for (int i = 0; i < n; ++i) {
        const T* p = xv + (static_cast<std::size_t>(i) * c + ch) * plane;
        for (std::size_t j = 0; j < plane; ++j) {
          const double d = p[j] - mu;
          var += d * d;
        }
      }
      const double biased = var / static_cast<double>(count);
      const double unbiased = count > 1 ? var / static_cast<double>(count - 1) : biased;
      mean[ch] = static_cast<T>(mu);
      inv_std[ch] = static_cast<T>(1.0 / std::sqrt(biased + eps));
      update->mean.resize(c);
      update->var.resize(c);
      update->mean[ch] = (T(1) - momentum) * running.mean[ch] + momentum * static_cast<T>(mu);
      update->var[ch] = (T(1) - momentum) * running.var[ch] + momentum * static_cast<T>(unbiased);
    } else {
      mean[ch] = running.mean[ch];
      inv_std[ch] = static_cast<T>(1.0 / std::sqrt(static_cast<double>(running.var[ch]) + eps));
    }
  }

  std::vector<T> out(x.size());
  for (int i = 0; i < n; ++i) {
    for (int ch = 0; ch < c; ++ch) {
      const std::size_t base = (static_cast<std::size_t>(i) * c + ch) * plane;
      const T scale = gamma.data()[ch] * inv_std[ch];
      const T shift = beta.data()[ch] - mean[ch] * scale;
      for (std::size_t j = 0; j < plane; ++j) out[base + j] = xv[base + j] * scale + shift;
    }
  }

  return MakeResult<T>(x.shape(), std::move(out), {x, gamma, beta},
                       [n, c, plane, count, training, mean = std::move(mean),
                        inv_std = std::move(inv_std)](Node<T>& self) {
    const T* xv = self.parents[0]->value.data();
    const T* gv = self.parents[1]->value.data();
    Node<T>* nx = GradParent(self, 0);
    Node<T>* ng = GradParent(self, 1);
    Node<T>* nb = GradParent(self, 2);
    for (int ch = 0; ch < c; ++ch) {
      double sum_dy = 0.0, sum_dy_xhat = 0.0;
      for (int i = 0; i < n; ++i) {
        const std::size_t base = (static_cast<std::size_t>(i) * c + ch) * plane;
        for (std::size_t j = 0; j < plane; ++j) {
          const T xhat = (xv[base + j] - mean[ch]) * inv_std[ch];
          sum_dy += self.grad[base + j];
          sum_dy_xhat += self.grad[base + j] * xhat;
        }
      }
      if (ng) ng->Grad()[ch] += static_cast<T>(sum_dy_xhat);
      if (nb) nb->Grad()[ch] += static_cast<T>(sum_dy);
      if (!nx) continue;
      auto& g = nx->Grad();
      const T k = gv[ch] * inv_std[ch];
      const T mean_dy = static_cast<T>(sum_dy / count);
      const T mean_dy_xhat = static_cast<T>(sum_dy_xhat / count);
      for (int i = 0; i < n; ++i) {
        const std::size_t base = (static_cast<std::size_t>(i) * c + ch) * plane;
        for (std::size_t j = 0; j < plane; ++j) {
          if (training) {
            const T xhat = (xv[base + j] - mean[ch]) * inv_std[ch];
            g[base + j] += k * (self.grad[base + j] - mean_dy - xhat * mean_dy_xhat);
          } else {
            g[base + j] += k * self.grad[base + j];
          }
        }
      }
    }
  });
}

template <typename T>
Tensor<T> MaxPool2d(const Tensor<T>& x, int size) {
  RequireRank(x, 4, "MaxPool2d");
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const int ho = h / size, wo = w / size;
  if (ho < 1 || wo < 1) {
    throw ShapeError("MaxPool2d: window " + std::to_string(size) +
                     " larger than input " + ShapeString(x.shape()));
  }
  std::vector<T> out(static_cast<std::size_t>(n) * c * ho * wo);
  std::vector<int> argmax(out.size());
  const T* xv = x.data().data();
  std::size_t o = 0;
  for (int nc = 0; nc < n * c; ++nc) {
    const std::size_t base = static_cast<std::size_t>(nc) * h * w;
    for (int oh = 0; oh < ho; ++oh) {
      for (int ow = 0; ow < wo; ++ow, ++o) {
        int best = (oh * size) * w + ow * size;
        for (int i = 0; i < size; ++i) {
          for (int j = 0; j < size; ++j) {
            const int idx = (oh * size + i) * w + ow * size + j;
            if (xv[base + idx] > xv[base + best]) best = idx;
          }
        }
        out[o] = xv[base + best];
        argmax[o] = best;
      }
    }
  }
  const int out_plane = ho * wo;
  return MakeResult<T>({n, c, ho, wo}, std::move(out), {x},
                       [h, w, out_plane, argmax = std::move(argmax)](Node<T>& self) {
    if (Node<T>* in = GradParent(self, 0)) {
      auto& g = in->Grad();
      for (std::size_t o = 0; o < argmax.size(); ++o) {
        const std::size_t base = (o / out_plane) * static_cast<std::size_t>(h) * w;
        g[base + argmax[o]] += self.grad[o];
      }
    }
  });
}

template <typename T>
Tensor<T> GlobalAvgPool(const Tensor<T>& x) {
  RequireRank(x, 4, "GlobalAvgPool");
  const int n = x.dim(0), c = x.dim(1);
  const std::size_t plane = static_cast<std::size_t>(x.dim(2)) * x.dim(3);
  std::vector<T> out(static_cast<std::size_t>(n) * c);
  for (std::size_t i = 0; i < out.size(); ++i) {
    T total = 0;
    for (std::size_t j = 0; j < plane; ++j) total += x.data()[i * plane + j];
    out[i] = total / static_cast<T>(plane);
  }
  return MakeResult<T>({n, c}, std::move(out), {x}, [plane](Node<T>& self) {
    if (Node<T>* in = GradParent(self, 0)) {
      auto& g = in->Grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) {
        const T share = self.grad[i] / static_cast<T>(plane);
        for (std::size_t j = 0; j < plane; ++j) g[i * plane + j] += share;
      }
    }
  });
}

template <typename T>
Tensor<T> SliceRows(const Tensor<T>& x, int start, int count) {
  RequireRank(x, 2, "SliceRows");
  const int d = x.dim(1);
  if (start < 0 || count < 0 || start + count > x.dim(0)) {
    throw ShapeError("SliceRows: rows [" + std::to_string(start) + ", " +
                     std::to_string(start + count) + ") outside " + ShapeString(x.shape()));
  }
  const auto first = x.data().begin() + static_cast<std::ptrdiff_t>(start) * d;
  std::vector<T> out(first, first + static_cast<std::ptrdiff_t>(count) * d);
  return MakeResult<T>({count, d}, std::move(out), {x}, [start, d](Node<T>& self) {
    if (Node<T>* in = GradParent(self, 0)) {
      auto& g = in->Grad();
      const std::size_t offset = static_cast<std::size_t>(start) * d;
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[offset + i] += self.grad[i];
    }
  });
}

template <typename T>
Tensor<T> Stack(const std::vector<Tensor<T>>& scalars) {
  std::vector<T> out;
  out.reserve(scalars.size());
  bool any = false;
  for (const Tensor<T>& s : scalars) {
    if (s.size() != 1) {
      throw ShapeError("Stack: expected single-element tensors, got " + ShapeString(s.shape()));
    }
    out.push_back(s.data()[0]);
    any = any || s.requires_grad();
  }
  auto node = std::make_shared<Node<T>>();
  node->shape = {static_cast<int>(scalars.size())};
  node->value = std::move(out);
  if (GradEnabled() && any) {
    node->requires_grad = true;
    for (const Tensor<T>& s : scalars) node->parents.push_back(s.node());
    node->backward = [](Node<T>& self) {
      for (std::size_t i = 0; i < self.parents.size(); ++i) {
        if (Node<T>* in = GradParent(self, i)) in->Grad()[0] += self.grad[i];
      }
    };
  }
  return Tensor<T>(std::move(node));
}

template <typename T>
Tensor<T> Mse(const Tensor<T>& pred, const Tensor<T>& target) {
  if (pred.size() != target.size() || pred.size() == 0) {
    throw ShapeError("Mse: prediction " + ShapeString(pred.shape()) + " vs target " +
                     ShapeString(target.shape()));
  }
  const std::size_t count = pred.size();
  double total = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    const double d = static_cast<double>(pred.data()[i]) - target.data()[i];
    total += d * d;
  }
  return MakeResult<T>({1}, {static_cast<T>(total / count)}, {pred, target},
                       [count](Node<T>& self) {
    const auto& p = self.parents[0]->value;
    const auto& t = self.parents[1]->value;
    const T scale = T(2) * self.grad[0] / static_cast<T>(count);
    if (Node<T>* in = GradParent(self, 0)) {
      auto& g = in->Grad();
      for (std::size_t i = 0; i < count; ++i) g[i] += scale * (p[i] - t[i]);
    }
    if (Node<T>* in = GradParent(self, 1)) {
      auto& g = in->Grad();
      for (std::size_t i = 0; i < count; ++i) g[i] -= scale * (p[i] - t[i]);
    }
  });
}

#define MOSRA_INSTANTIATE_OPS(T)                                                      \
  template Tensor<T> Add(const Tensor<T>&, const Tensor<T>&);                         \
  template Tensor<T> Mul(const Tensor<T>&, const Tensor<T>&);                         \
  template Tensor<T> Scale(const Tensor<T>&, T);                                      \
  template Tensor<T> Relu(const Tensor<T>&);                                          \
  template Tensor<T> Sum(const Tensor<T>&);                                           \
  template Tensor<T> Reshape(const Tensor<T>&, Shape);                                \
  template Tensor<T> MatMul(const Tensor<T>&, const Tensor<T>&);                      \
  template Tensor<T> MatMulTransB(const Tensor<T>&, const Tensor<T>&);                \
  template Tensor<T> Linear(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);    \
  template Tensor<T> LayerNorm(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, T); \
  template Tensor<T> SoftmaxRows(const Tensor<T>&);                                   \
  template Tensor<T> Dropout(const Tensor<T>&, T, std::mt19937_64*);                  \
  template Tensor<T> Conv2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, int, int); \
  template Tensor<T> BatchNorm2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, \
                                 const BatchNormStats<T>&, BatchNormStats<T>*, T, T); \
  template Tensor<T> MaxPool2d(const Tensor<T>&, int);                                \
  template Tensor<T> GlobalAvgPool(const Tensor<T>&);                                 \
  template Tensor<T> SliceRows(const Tensor<T>&, int, int);                           \
  template Tensor<T> Stack(const std::vector<Tensor<T>>&);                            \
  template Tensor<T> Mse(const Tensor<T>&, const Tensor<T>&);

MOSRA_INSTANTIATE_OPS(float)
MOSRA_INSTANTIATE_OPS(double)

#undef MOSRA_INSTANTIATE_OPS

}  // namespace mosra::ad
