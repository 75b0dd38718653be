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

#ifndef MOSRA_AUTODIFF_TENSOR_H_
#define MOSRA_AUTODIFF_TENSOR_H_

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace mosra::ad {

using Shape = std::vector<int>;

std::size_t NumElements(const Shape& shape);
std::string ShapeString(const Shape& shape);

// Graph recording is on by default; NoGradGuard turns it off for the
// current thread, so inference builds no backward closures and frees
// intermediates as soon as they go out of scope.
bool GradEnabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

template <typename T>
struct Node {
  Shape shape;
  std::vector<T> value;
  // Empty until a gradient first flows here.
  std::vector<T> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  // Propagates this node's grad into its parents' grads.
  std::function<void(Node&)> backward;

  std::vector<T>& Grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), T(0));
    return grad;
  }
};

// Reference-semantics handle to a graph node. Copies share storage.
template <typename T>
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<T> values, bool requires_grad = false);
  explicit Tensor(std::shared_ptr<Node<T>> node) : node_(std::move(node)) {}

  static Tensor Zeros(Shape shape, bool requires_grad = false);
  static Tensor Scalar(T v) { return Tensor({1}, {v}); }

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  int dim(int i) const;
  int rank() const { return static_cast<int>(node_->shape.size()); }
  std::size_t size() const { return node_->value.size(); }

  std::span<T> data() { return node_->value; }
  std::span<const T> data() const { return node_->value; }
  // Allocates a zero gradient on first access.
  std::span<T> grad() { return node_->Grad(); }
  bool has_grad() const { return !node_->grad.empty(); }
  bool requires_grad() const { return node_->requires_grad; }
  T item() const;

  void ZeroGrad();
  // Reverse-mode sweep from this scalar, seeding d(this)/d(this) = 1.
  void Backward();

  // A new leaf holding a copy of the values, cut from the graph.
  Tensor Detach() const;

  const std::shared_ptr<Node<T>>& node() const { return node_; }

 private:
  std::shared_ptr<Node<T>> node_;
};

// Builds an op result. The backward closure is kept only when recording is
// on and at least one input needs a gradient.
template <typename T>
Tensor<T> MakeResult(Shape shape, std::vector<T> value,
                     std::initializer_list<Tensor<T>> inputs,
                     std::function<void(Node<T>&)> backward);

}  // namespace mosra::ad

#endif  // MOSRA_AUTODIFF_TENSOR_H_
