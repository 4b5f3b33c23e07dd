// Copyright 2026 The mola Authors
// SPDX-License-Identifier: Apache-2.0

#include "mola/nn/tensor.hpp"

#include "mola/error.hpp"

#include <unordered_set>

namespace mola::nn {

namespace {
thread_local bool g_grad_enabled = true;
thread_local bool g_params_frozen = false;
}  // namespace

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

FrozenParametersGuard::FrozenParametersGuard() : previous_(g_params_frozen) { g_params_frozen = true; }
FrozenParametersGuard::~FrozenParametersGuard() { g_params_frozen = previous_; }

bool Node::wants_grad() const { return requires_grad && !(is_parameter && g_params_frozen); }

void Node::accumulate(const Matrix& g) {
  if (grad.size() == 0)
    grad = g;
  else
    grad += g;
}

Tensor::Tensor(Matrix value, bool requires_grad) : node_(std::make_shared<Node>()) {
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
}

Tensor Tensor::parameter(Matrix value) {
  Tensor t(std::move(value), true);
  t.node_->is_parameter = true;
  return t;
}

bool Tensor::requires_grad() const { return node_->wants_grad(); }

Tensor Tensor::make(Matrix value, std::vector<Tensor> inputs, std::function<void(Node&)> backward) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  if (g_grad_enabled) {
    for (const auto& in : inputs)
      if (in.requires_grad()) {
        node->requires_grad = true;
        break;
      }
  }
  if (node->requires_grad) {
    node->inputs.reserve(inputs.size());
    for (auto& in : inputs) node->inputs.push_back(in.node_);
    node->backward = std::move(backward);
  }
  return Tensor(std::move(node));
}

void Tensor::backward() const {
  require(rows() == 1 && cols() == 1, ErrorKind::shape_mismatch, "backward() needs a scalar; pass a seed");
  backward(Matrix::Ones(1, 1));
}

void Tensor::backward(const Matrix& seed) const {
  require(seed.rows() == rows() && seed.cols() == cols(), ErrorKind::shape_mismatch, "seed gradient shape");
  if (!node_->requires_grad) return;

  // Iterative post-order DFS gives a topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack{{node_.get(), 0}};
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->inputs.size()) {
      Node* child = n->inputs[next++].get();
      if (child->requires_grad && !child->inputs.empty() && visited.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }

  node_->accumulate(seed);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward && n->grad.size() != 0) n->backward(*n);
    // Intermediate gradients are no longer needed once propagated.
    if (n != node_.get()) n->grad.resize(0, 0);
  }
}

}  // namespace mola::nn
