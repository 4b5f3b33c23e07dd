// Copyright 2026 The mola Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MOLA_NN_LAYERS_HPP
#define MOLA_NN_LAYERS_HPP

#include "mola/nn/ops.hpp"
#include "mola/rng.hpp"

#include <string>

namespace mola::nn {

/// y = W x + b on column vectors (or on every column of a sequence tensor).
struct Linear {
  Tensor weight, bias;

  Linear() = default;
  Linear(int in, int out, Rng& rng, Real gain = 1.0);
  Tensor operator()(const Tensor& x) const { return add_col(matmul(weight, x), bias); }
  void collect(const std::string& prefix, NamedParameters& out) const;
  void zero_init();
};

struct Conv1d {
  Tensor weight, bias;
  int kernel = 3, stride = 1, padding = 1;

  Conv1d() = default;
  Conv1d(int in, int out, int kernel, int stride, int padding, Rng& rng, Real gain = 1.0);
  Tensor operator()(const Tensor& x, const SeqShape& shape) const {
    return conv1d(x, weight, bias, shape, kernel, stride, padding);
  }
  SeqShape output_shape(const SeqShape& shape) const {
    return {shape.batch, conv1d_output_length(shape.length, kernel, stride, padding)};
  }
  void collect(const std::string& prefix, NamedParameters& out) const;
};

struct LayerNorm {
  Tensor gamma, beta;

  LayerNorm() = default;
  explicit LayerNorm(int dim);
  Tensor operator()(const Tensor& x) const { return layer_norm(x, gamma, beta); }
  void collect(const std::string& prefix, NamedParameters& out) const;
};

/// Columns of `table` are the embedding vectors.
struct Embedding {
  Tensor table;

  Embedding() = default;
  Embedding(int count, int dim, Rng& rng, Real stddev = 0.02);
  Tensor operator()(const std::vector<int>& ids) const { return gather_cols(table, ids); }
  void collect(const std::string& prefix, NamedParameters& out) const;
};

/// Gaussian init with variance gain^2 / fan_in.
Matrix init_weight(int rows, int fan_in, int cols, Rng& rng, Real gain);

}  // namespace mola::nn

#endif  // MOLA_NN_LAYERS_HPP
