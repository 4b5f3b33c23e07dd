// Copyright 2026 The mola Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MOLA_VAE_MODEL_HPP
#define MOLA_VAE_MODEL_HPP

#include "mola/nn/layers.hpp"
#include "mola/vae/config.hpp"

#include <vector>

namespace mola::vae {

/// x + conv(act(conv(act(x)))).
struct ResBlock1d {
  nn::Conv1d conv1, conv2;

  ResBlock1d() = default;
  ResBlock1d(int width, Rng& rng);
  nn::Tensor operator()(const nn::Tensor& x, const nn::SeqShape& shape) const;
  void collect(const std::string& prefix, nn::NamedParameters& out) const;
};

struct Posterior {
  nn::Tensor mean, logvar;  // d_z x (B * d_l)
};

struct Reconstruction {
  nn::Tensor motion;  // (N - 1) x (B * L), normalized feature space
  nn::Tensor logits;  // 1 x (B * L), activation logits
};

/// Convolutional VAE over normalized, padded feature sequences.
/// Sequences of length L map to latents of length L / 4.
class VaeModel {
 public:
  VaeModel(const VaeConfig& config, Rng& rng);

  Posterior encode(const nn::Tensor& x, const nn::SeqShape& shape) const;
  Reconstruction decode(const nn::Tensor& z, const nn::SeqShape& latent_shape) const;

  nn::NamedParameters parameters() const;
  const VaeConfig& config() const { return config_; }
  int input_dim() const { return input_dim_; }

 private:
  VaeConfig config_;
  int input_dim_;
  nn::Conv1d enc_stem_, enc_down1_, enc_down2_, enc_head_;
  std::vector<ResBlock1d> enc_res1_, enc_res2_;
  nn::Conv1d dec_stem_, dec_up1_, dec_up2_, dec_head_;
  std::vector<ResBlock1d> dec_res0_, dec_res1_;
};

/// z = mean + exp(logvar / 2) * noise.
nn::Tensor sample_posterior(const Posterior& posterior, const nn::Matrix& noise);

/// Discriminator split into a feature net h and a final direction w (1 x d_w).
class Discriminator {
 public:
  Discriminator(const VaeConfig& config, Rng& rng);

  /// h(x): d_w x B, global average pooled.
  nn::Tensor features(const nn::Tensor& x, const nn::SeqShape& shape) const;
  /// f = w^T h, 1 x B.
  nn::Tensor score(const nn::Tensor& h) const { return nn::matmul(direction_, h); }

  const nn::Tensor& direction() const { return direction_; }
  /// Rescales w to unit norm (SAN keeps w on the sphere).
  void project_direction();

  nn::NamedParameters parameters() const;

 private:
  nn::Conv1d stem_, down1_, down2_, head_;
  nn::Tensor direction_;
};

}  // namespace mola::vae

#endif  // MOLA_VAE_MODEL_HPP
