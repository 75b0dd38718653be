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

#include "mosra/autodiff/tensor.h"

#include <unordered_set>
#include <utility>

#include "mosra/errors.h"

namespace mosra::ad {
namespace {

thread_local bool grad_enabled = true;

}  // namespace

std::size_t NumElements(const Shape& shape) {
  std::size_t n = 1;
  for (int d : shape) {
    if (d < 0) throw ShapeError("negative dimension in " + ShapeString(shape));
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

std::string ShapeString(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

bool GradEnabled() { return grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(grad_enabled) { grad_enabled = false; }
NoGradGuard::~NoGradGuard() { grad_enabled = previous_; }

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> values, bool requires_grad)
    : node_(std::make_shared<Node<T>>()) {
  if (NumElements(shape) != values.size()) {
    throw ShapeError("tensor of shape " + ShapeString(shape) + " given " +
                     std::to_string(values.size()) + " values");
  }
  node_->shape = std::move(shape);
  node_->value = std::move(values);
  node_->requires_grad = requires_grad;
}

template <typename T>
Tensor<T> Tensor<T>::Zeros(Shape shape, bool requires_grad) {
  std::vector<T> values(NumElements(shape), T(0));
  return Tensor(std::move(shape), std::move(values), requires_grad);
}

template <typename T>
int Tensor<T>::dim(int i) const {
  if (i < 0) i += rank();
  if (i < 0 || i >= rank()) {
    throw ShapeError("axis " + std::to_string(i) + " out of range for " +
                     ShapeString(shape()));
  }
  return node_->shape[i];
}

template <typename T>
T Tensor<T>::item() const {
  if (size() != 1) {
    throw ShapeError("item() needs a single element, shape is " +
                     ShapeString(shape()));
  }
  return node_->value[0];
}

template <typename T>
void Tensor<T>::ZeroGrad() {
  if (!node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), T(0));
}

template <typename T>
Tensor<T> Tensor<T>::Detach() const {
  return Tensor(node_->shape, node_->value, false);
}

template <typename T>
void Tensor<T>::Backward() {
  if (size() != 1) {
    throw ShapeError("Backward() needs a scalar, shape is " + ShapeString(shape()));
  }
  if (!node_->requires_grad) return;

  // Iterative post-order DFS gives a topological order (parents first).
  std::vector<Node<T>*> order;
  std::unordered_set<Node<T>*> visited;
  std::vector<std::pair<Node<T>*, std::size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node<T>* parent = node->parents[next++].get();
      if (parent && parent->requires_grad && visited.insert(parent).second) {
        stack.emplace_back(parent, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  node_->Grad()[0] += T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<T>* node = *it;
    if (!node->backward) continue;
    node->backward(*node);
    // Interior gradients are not needed once propagated.
    if (node != node_.get()) std::vector<T>().swap(node->grad);
  }
}

template <typename T>
Tensor<T> MakeResult(Shape shape, std::vector<T> value,
                     std::initializer_list<Tensor<T>> inputs,
                     std::function<void(Node<T>&)> backward) {
  auto node = std::make_shared<Node<T>>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  if (GradEnabled()) {
    bool any = false;
    for (const Tensor<T>& t : inputs) any = any || (t.defined() && t.requires_grad());
    if (any) {
      node->requires_grad = true;
      for (const Tensor<T>& t : inputs) {
        node->parents.push_back(t.defined() ? t.node() : nullptr);
      }
      node->backward = std::move(backward);
    }
  }
  return Tensor<T>(std::move(node));
}

template class Tensor<float>;
template class Tensor<double>;
template Tensor<float> MakeResult(Shape, std::vector<float>,
                                  std::initializer_list<Tensor<float>>,
                                  std::function<void(Node<float>&)>);
template Tensor<double> MakeResult(Shape, std::vector<double>,
                                   std::initializer_list<Tensor<double>>,
                                   std::function<void(Node<double>&)>);

}  // namespace mosra::ad
