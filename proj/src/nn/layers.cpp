// Copyright 2026 The mola Authors
// SPDX-License-Identifier: Apache-2.0

#include "mola/nn/layers.hpp"

#include <cmath>

namespace mola::nn {

Matrix init_weight(int rows, int fan_in, int cols, Rng& rng, Real gain) {
  return rng.normal_matrix(rows, cols) * (gain / std::sqrt(static_cast<Real>(fan_in)));
}

Linear::Linear(int in, int out, Rng& rng, Real gain)
    : weight(Tensor::parameter(init_weight(out, in, in, rng, gain))), bias(Tensor::parameter(Matrix::Zero(out, 1))) {}

void Linear::collect(const std::string& prefix, NamedParameters& out) const {
  out.emplace_back(prefix + ".weight", weight);
  out.emplace_back(prefix + ".bias", bias);
}

void Linear::zero_init() {
  weight.mutable_value().setZero();
  bias.mutable_value().setZero();
}

Conv1d::Conv1d(int in, int out, int kernel_size, int stride_, int padding_, Rng& rng, Real gain)
    : weight(Tensor::parameter(init_weight(out, in * kernel_size, in * kernel_size, rng, gain))),
      bias(Tensor::parameter(Matrix::Zero(out, 1))),
      kernel(kernel_size),
      stride(stride_),
      padding(padding_) {}

void Conv1d::collect(const std::string& prefix, NamedParameters& out) const {
  out.emplace_back(prefix + ".weight", weight);
  out.emplace_back(prefix + ".bias", bias);
}

LayerNorm::LayerNorm(int dim)
    : gamma(Tensor::parameter(Matrix::Ones(dim, 1))), beta(Tensor::parameter(Matrix::Zero(dim, 1))) {}

void LayerNorm::collect(const std::string& prefix, NamedParameters& out) const {
  out.emplace_back(prefix + ".gamma", gamma);
  out.emplace_back(prefix + ".beta", beta);
}

Embedding::Embedding(int count, int dim, Rng& rng, Real stddev)
    : table(Tensor::parameter(rng.normal_matrix(dim, count) * stddev)) {}

void Embedding::collect(const std::string& prefix, NamedParameters& out) const {
  out.emplace_back(prefix + ".table", table);
}

}  // namespace mola::nn
