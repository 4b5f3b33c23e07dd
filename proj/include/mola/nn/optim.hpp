// Copyright 2026 The mola Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MOLA_NN_OPTIM_HPP
#define MOLA_NN_OPTIM_HPP

#include "mola/nn/tensor.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace mola::nn {

struct AdamWOptions {
  Real beta1 = 0.9;
  Real beta2 = 0.99;
  Real eps = 1e-8;
  Real weight_decay = 1e-4;
  Real max_grad_norm = 1.0;  // <= 0 disables clipping
};

/// Decoupled-weight-decay Adam. Decay skips column-vector parameters
/// (biases, norm gains).
class AdamW {
 public:
  AdamW(NamedParameters params, AdamWOptions options = {});

  /// Applies one update with learning rate `lr`; returns the pre-clip grad norm.
  Real step(Real lr);
  void zero_grad();

  long steps() const { return steps_; }
  const NamedParameters& parameters() const { return params_; }

  /// Moments and step count, keyed by parameter name.
  void save(const std::filesystem::path& path) const;
  void load(const std::filesystem::path& path);

 private:
  NamedParameters params_;
  AdamWOptions options_;
  std::vector<Matrix> m_, v_;
  long steps_ = 0;
};

/// Global L2 norm over the current gradients.
Real gradient_norm(const NamedParameters& params);

}  // namespace mola::nn

#endif  // MOLA_NN_OPTIM_HPP
