// Copyright 2026 The mola Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MOLA_NN_OPS_HPP
#define MOLA_NN_OPS_HPP

#include "mola/nn/tensor.hpp"

#include <vector>

namespace mola::nn {

/// Batch layout of a channels x (batch * length) sequence tensor.
struct SeqShape {
  int batch = 1;
  int length = 1;
  int columns() const { return batch * length; }
};

Tensor constant(Matrix value);

// Arithmetic.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, Real s);
Tensor add_scalar(const Tensor& x, Real s);
/// x + b with b a column vector broadcast over columns.
Tensor add_col(const Tensor& x, const Tensor& b);
/// x (C x B*L) plus p (C x L) tiled over the batch.
Tensor add_tiled(const Tensor& x, const Tensor& p);
/// x (C x B*L) plus b (C x B), each column of b broadcast over its sequence.
Tensor add_per_sequence(const Tensor& x, const Tensor& b, const SeqShape& shape);

/// Per-row affine map x * scale + shift with constant column vectors.
Tensor affine_rows(const Tensor& x, const Vector& scale, const Vector& shift);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(Real s, const Tensor& x) { return scale(x, s); }

// Elementwise nonlinearities.
Tensor leaky_relu(const Tensor& x, Real slope);
Tensor relu(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor silu(const Tensor& x);
Tensor exp(const Tensor& x);

// Reductions.
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
/// Per-column dot products of two equally shaped tensors (1 x cols).
Tensor column_dot(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& x);
/// D(i, j) = ||a_i - b_j||^2 over columns of a (d x n) and b (d x m).
Tensor pairwise_sq_dist(const Tensor& a, const Tensor& b);
/// Mean over each sequence: C x (B*L) -> C x B.
Tensor sequence_mean(const Tensor& x, const SeqShape& shape);

// Reshaping.
Tensor slice_rows(const Tensor& x, Eigen::Index start, Eigen::Index count);
Tensor slice_cols(const Tensor& x, Eigen::Index start, Eigen::Index count);
Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor concat_cols(const std::vector<Tensor>& parts);
/// out.col(i) = table.col(index[i]).
Tensor gather_cols(const Tensor& table, const std::vector<int>& index);
/// Interleaves per-sequence column blocks: sequences of `a` (La cols) then of `b` (Lb cols).
Tensor concat_sequences(const Tensor& a, const SeqShape& sa, const Tensor& b, const SeqShape& sb);
/// Column range [start, start + count) of every sequence.
Tensor slice_sequences(const Tensor& x, const SeqShape& shape, int start, int count);

// Sequence layers.
/// 1D convolution over each sequence. w is Cout x (kernel * Cin), laid out
/// tap-major: w(o, k * Cin + c).
Tensor conv1d(const Tensor& x, const Tensor& w, const Tensor& b, const SeqShape& shape, int kernel, int stride,
              int padding);
int conv1d_output_length(int length, int kernel, int stride, int padding);
/// Nearest-neighbour x2 upsampling along time.
Tensor upsample2(const Tensor& x, const SeqShape& shape);
/// Normalizes each column over rows, then applies gamma/beta (column vectors).
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, Real eps = 1e-5);
/// Multi-head attention over each sequence. q, k, v are D x (B*L).
/// key_lengths (optional, size B) masks keys at positions >= length.
Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v, const SeqShape& shape, int heads,
                 const std::vector<int>& key_lengths = {});

// Losses (scalars).
Tensor mse_loss(const Tensor& pred, const Matrix& target);
Tensor smooth_l1_loss(const Tensor& pred, const Matrix& target, Real beta = 1.0);
Tensor bce_with_logits(const Tensor& logits, const Matrix& target);
/// Mean over columns of -log softmax(logits.col(c))[labels[c]].
Tensor cross_entropy_cols(const Tensor& logits, const std::vector<int>& labels);
/// sum over latent entries of KL(N(mean, exp(logvar)) || N(0, 1)), divided by `batch`.
Tensor gaussian_kl(const Tensor& mean, const Tensor& logvar, int batch);
/// Sum over (joint, frame) of mask * ||x_{joint, frame}||, x laid out 3J x frames.
/// Subgradient 0 where the 3-vector is exactly zero.
Tensor masked_norm_sum(const Tensor& x, const Matrix& mask);

/// Global joints from pose features, per sequence (3J x B*L).
Tensor recover_joints(const Tensor& features, const SeqShape& shape, int n_joints);

}  // namespace mola::nn

#endif  // MOLA_NN_OPS_HPP
