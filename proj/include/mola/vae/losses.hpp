// Copyright 2026 The mola Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MOLA_VAE_LOSSES_HPP
#define MOLA_VAE_LOSSES_HPP

#include "mola/motion/normalize.hpp"
#include "mola/vae/model.hpp"

namespace mola::vae {

struct VaeLossTerms {
  nn::Tensor total;
  double reconstruction = 0.0;
  double activation = 0.0;
  double kl = 0.0;
  double position = 0.0;
};

/// Reconstruction + lambda_act * BCE + lambda_reg * KL (+ position term).
///
/// `x` is the normalized padded target (N x B*L, last row = activation).
/// Reconstruction and BCE are means over elements; KL sums over latent
/// entries and averages over the batch. The position term is the MSE between
/// recovered global joints of target and reconstruction on active frames,
/// computed in denormalized space with `stats`.
VaeLossTerms motion_vae_loss(const nn::Matrix& x, const Reconstruction& recon, const Posterior& posterior,
                             const VaeConfig& config, const motion::NormalizationStats& stats,
                             const nn::SeqShape& shape);

/// min(0, -1 + f_real) + min(0, -1 - f_fake), averaged over the batch.
/// This is the discriminator objective to maximize.
nn::Tensor discriminator_hinge_loss(const nn::Tensor& f_real, const nn::Tensor& f_fake);
double discriminator_hinge_loss(double f_real, double f_fake);

/// -mean(f_fake).
nn::Tensor generator_adv_loss(const nn::Tensor& f_fake);

/// SAN objective to maximize: the hinge term with the direction held fixed,
/// plus direction^T (stopgrad(mean h_real) - stopgrad(mean h_fake)).
/// `direction` must have unit norm.
nn::Tensor san_discriminator_loss(const nn::Tensor& h_real, const nn::Tensor& h_fake, const nn::Tensor& direction);

}  // namespace mola::vae

#endif  // MOLA_VAE_LOSSES_HPP
