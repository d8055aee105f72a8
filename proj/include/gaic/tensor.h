// Copyright 2026 The GAIC Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace gaic::nd {

using Shape = std::vector<int64_t>;

int64_t NumElements(const Shape& shape);
std::string ShapeString(const Shape& shape);

// One vertex of the reverse-mode graph. Ops create a node holding the forward
// value, the parent nodes, and a closure that reads this node's gradient and
// accumulates into the parents' gradients.
struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty until first accumulation
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node& self)> backward;

  // Sizes the gradient buffer (zero-filled) if it is not already.
  std::vector<double>& EnsureGrad();
};

// Value-semantics handle to a graph node. Copies share the node.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  static Tensor Zeros(Shape shape, bool requires_grad = false);
  static Tensor Full(Shape shape, double value, bool requires_grad = false);
  static Tensor FromData(Shape shape, std::vector<double> data,
                         bool requires_grad = false);
  static Tensor Scalar(double value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  int rank() const { return static_cast<int>(node_->shape.size()); }
  int64_t dim(int i) const { return node_->shape.at(static_cast<size_t>(i)); }
  int64_t numel() const { return static_cast<int64_t>(node_->value.size()); }

  std::span<const double> data() const { return node_->value; }
  // Mutating values is only valid when no graph built on this tensor is
  // awaiting backward.
  std::span<double> mutable_data() { return node_->value; }
  double item() const;

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool v) { node_->requires_grad = v; }
  bool has_grad() const { return !node_->grad.empty(); }
  // Empty span when no gradient has been accumulated.
  std::span<const double> grad() const { return node_->grad; }
  std::span<double> mutable_grad() { return node_->EnsureGrad(); }
  void ZeroGrad();

  // New leaf holding a copy of the value, outside any graph.
  Tensor Detach() const;

  Node* node() const { return node_.get(); }
  const std::shared_ptr<Node>& shared_node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

// Builds an op result. `requires_grad` is inherited from the parents; the
// backward closure is dropped when no parent needs a gradient.
Tensor MakeResult(Shape shape, std::vector<double> value,
                  std::vector<Tensor> parents,
                  std::function<void(Node& self)> backward);

// While alive on a thread, ops built on that thread record no graph edges.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

  static bool active();

 private:
  bool previous_;
};

// Reverse-mode sweep from a scalar. Gradients accumulate into every node with
// requires_grad, including leaves, in reverse topological order.
void Backward(const Tensor& loss);

}  // namespace gaic::nd
