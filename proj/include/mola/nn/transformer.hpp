// Copyright 2026 The mola Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MOLA_NN_TRANSFORMER_HPP
#define MOLA_NN_TRANSFORMER_HPP

#include "mola/nn/layers.hpp"

namespace mola::nn {

/// Pre-norm block: x + Attn(LN(x)), then x + W_down(silu(W_gate h) * W_up h).
struct TransformerBlock {
  LayerNorm norm1, norm2;
  Linear query, key, value, proj;
  Linear gate, up, down;
  int heads = 1;

  TransformerBlock() = default;
  TransformerBlock(int dim, int heads, int hidden, Rng& rng);

  Tensor operator()(const Tensor& x, const SeqShape& shape, const std::vector<int>& key_lengths = {}) const;
  void collect(const std::string& prefix, NamedParameters& out) const;
};

/// Sinusoidal embedding of integer positions (dim x count).
Matrix sinusoidal_embedding(const std::vector<int>& positions, int dim, Real max_period = 10000.0);

}  // namespace mola::nn

#endif  // MOLA_NN_TRANSFORMER_HPP
