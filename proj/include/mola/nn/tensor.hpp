// Copyright 2026 The mola Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MOLA_NN_TENSOR_HPP
#define MOLA_NN_TENSOR_HPP

#include <Eigen/Core>

#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace mola::nn {

using Real = double;
using Matrix = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;
using Vector = Eigen::Matrix<Real, Eigen::Dynamic, 1>;

/// Graph node of the reverse-mode tape.
struct Node {
  Matrix value;
  Matrix grad;  // empty until the first accumulation
  bool requires_grad = false;
  bool is_parameter = false;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward;  // reads this->grad, accumulates into inputs

  /// False for parameters while a FrozenParametersGuard is alive.
  bool wants_grad() const;
  void accumulate(const Matrix& g);
  template <typename Expr>
  void accumulate_expr(const Expr& g) {
    if (grad.size() == 0)
      grad = g;
    else
      grad += g;
  }
};

/// Shared handle to a graph node. Sequences are stored channels x (batch * length).
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Matrix value, bool requires_grad = false);

  static Tensor parameter(Matrix value);

  const Matrix& value() const { return node_->value; }
  Matrix& mutable_value() { return node_->value; }
  const Matrix& grad() const { return node_->grad; }
  Matrix& mutable_grad() { return node_->grad; }
  bool has_grad() const { return node_->grad.size() != 0; }
  void zero_grad() { node_->grad.resize(0, 0); }

  Eigen::Index rows() const { return node_->value.rows(); }
  Eigen::Index cols() const { return node_->value.cols(); }
  Real item() const { return node_->value(0, 0); }

  bool requires_grad() const;
  bool defined() const { return node_ != nullptr; }
  const std::shared_ptr<Node>& node() const { return node_; }

  /// Runs reverse-mode accumulation from this scalar (seed gradient 1).
  void backward() const;
  /// Same with an explicit seed gradient of this tensor's shape.
  void backward(const Matrix& seed) const;

  /// Builds an op result. `backward` is dropped when no input needs a gradient.
  static Tensor make(Matrix value, std::vector<Tensor> inputs, std::function<void(Node&)> backward);

 private:
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}
  std::shared_ptr<Node> node_;
};

/// Disables graph construction on this thread while alive.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

/// Parameters stop requiring gradients on this thread while alive, so
/// concurrent inference-time backward passes never write shared weights.
class FrozenParametersGuard {
 public:
  FrozenParametersGuard();
  ~FrozenParametersGuard();
  FrozenParametersGuard(const FrozenParametersGuard&) = delete;
  FrozenParametersGuard& operator=(const FrozenParametersGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

using NamedParameters = std::vector<std::pair<std::string, Tensor>>;

}  // namespace mola::nn

#endif  // MOLA_NN_TENSOR_HPP
