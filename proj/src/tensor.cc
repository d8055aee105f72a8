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

#include "gaic/tensor.h"

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace gaic::nd {

int64_t NumElements(const Shape& shape) {
  int64_t n = 1;
  for (int64_t d : shape) {
    if (d <= 0) throw std::domain_error("tensor extents must be positive");
    n *= d;
  }
  return n;
}

std::string ShapeString(const Shape& shape) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << "]";
  return os.str();
}

std::vector<double>& Node::EnsureGrad() {
  if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
  return grad;
}

Tensor Tensor::Zeros(Shape shape, bool requires_grad) {
  return Full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::Full(Shape shape, double value, bool requires_grad) {
  const int64_t n = NumElements(shape);
  return FromData(std::move(shape), std::vector<double>(static_cast<size_t>(n), value),
                  requires_grad);
}

Tensor Tensor::FromData(Shape shape, std::vector<double> data,
                        bool requires_grad) {
  if (NumElements(shape) != static_cast<int64_t>(data.size())) {
    throw std::domain_error("tensor data length " + std::to_string(data.size()) +
                            " does not match shape " + ShapeString(shape));
  }
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(data);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::Scalar(double value, bool requires_grad) {
  return FromData({1}, {value}, requires_grad);
}

double Tensor::item() const {
  if (numel() != 1) throw std::domain_error("item() needs a one-element tensor");
  return node_->value[0];
}

void Tensor::ZeroGrad() {
  if (!node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

Tensor Tensor::Detach() const {
  return FromData(node_->shape, node_->value, false);
}

namespace {
thread_local bool g_no_grad = false;
}  // namespace

NoGradGuard::NoGradGuard() : previous_(g_no_grad) { g_no_grad = true; }
NoGradGuard::~NoGradGuard() { g_no_grad = previous_; }
bool NoGradGuard::active() { return g_no_grad; }

Tensor MakeResult(Shape shape, std::vector<double> value,
                  std::vector<Tensor> parents,
                  std::function<void(Node& self)> backward) {
  if (NumElements(shape) != static_cast<int64_t>(value.size())) {
    throw std::logic_error("op produced a value inconsistent with its shape");
  }
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  if (!g_no_grad) {
    for (const Tensor& p : parents) {
      if (p.requires_grad()) node->requires_grad = true;
    }
  }
  if (node->requires_grad) {
    node->parents.reserve(parents.size());
    for (const Tensor& p : parents) node->parents.push_back(p.shared_node());
    node->backward = std::move(backward);
  }
  return Tensor(std::move(node));
}

void Backward(const Tensor& loss) {
  if (!loss.defined() || loss.numel() != 1) {
    throw std::domain_error("backward needs a scalar loss");
  }
  Node* root = loss.node();
  if (!root->requires_grad) return;

  // Iterative post-order DFS gives a topological order (parents first).
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, size_t>> stack = {{root, 0}};
  visited.insert(root);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* parent = node->parents[next++].get();
      if (parent->requires_grad && visited.insert(parent).second) {
        stack.push_back({parent, 0});
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root->EnsureGrad()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (node->backward && !node->grad.empty()) node->backward(*node);
  }
}

}  // namespace gaic::nd
