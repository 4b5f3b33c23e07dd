// Copyright 2026 The mola Authors
// SPDX-License-Identifier: Apache-2.0

#include "mola/nn/transformer.hpp"

#include "mola/error.hpp"

#include <cmath>

namespace mola::nn {

TransformerBlock::TransformerBlock(int dim, int heads_, int hidden, Rng& rng)
    : norm1(dim),
      norm2(dim),
      query(dim, dim, rng),
      key(dim, dim, rng),
      value(dim, dim, rng),
      proj(dim, dim, rng, 0.5),
      gate(dim, hidden, rng),
      up(dim, hidden, rng),
      down(hidden, dim, rng, 0.5),
      heads(heads_) {
  require(heads_ >= 1 && dim % heads_ == 0, ErrorKind::invalid_input,
          "transformer width " + std::to_string(dim) + " is not divisible by " + std::to_string(heads_) + " heads");
}

Tensor TransformerBlock::operator()(const Tensor& x, const SeqShape& shape, const std::vector<int>& key_lengths) const {
  const Tensor h = norm1(x);
  const Tensor a = attention(query(h), key(h), value(h), shape, heads, key_lengths);
  const Tensor y = x + proj(a);
  const Tensor g = norm2(y);
  return y + down(mul(silu(gate(g)), up(g)));
}

void TransformerBlock::collect(const std::string& prefix, NamedParameters& out) const {
  norm1.collect(prefix + ".norm1", out);
  query.collect(prefix + ".query", out);
  key.collect(prefix + ".key", out);
  value.collect(prefix + ".value", out);
  proj.collect(prefix + ".proj", out);
  norm2.collect(prefix + ".norm2", out);
  gate.collect(prefix + ".gate", out);
  up.collect(prefix + ".up", out);
  down.collect(prefix + ".down", out);
}

Matrix sinusoidal_embedding(const std::vector<int>& positions, int dim, Real max_period) {
  require(dim % 2 == 0, ErrorKind::invalid_input, "sinusoidal_embedding: dim must be even");
  const int half = dim / 2;
  Matrix out(dim, static_cast<Eigen::Index>(positions.size()));
  for (std::size_t c = 0; c < positions.size(); ++c)
    for (int i = 0; i < half; ++i) {
      const Real freq = std::exp(-std::log(max_period) * i / half);
      const Real arg = positions[c] * freq;
      out(i, static_cast<Eigen::Index>(c)) = std::cos(arg);
      out(half + i, static_cast<Eigen::Index>(c)) = std::sin(arg);
    }
  return out;
}

}  // namespace mola::nn
