// Copyright 2026 The mola Authors
// SPDX-License-Identifier: Apache-2.0

#include "mola/vae/losses.hpp"

#include "mola/error.hpp"

#include <algorithm>
#include <cmath>

namespace mola::vae {

using nn::Matrix;
using nn::Tensor;

VaeLossTerms motion_vae_loss(const Matrix& x, const Reconstruction& recon, const Posterior& posterior,
                             const VaeConfig& config, const motion::NormalizationStats& stats,
                             const nn::SeqShape& shape) {
  const Eigen::Index n = x.rows();
  require(recon.motion.rows() == n - 1 && recon.motion.cols() == x.cols() && recon.logits.rows() == 1 &&
              recon.logits.cols() == x.cols(),
          ErrorKind::shape_mismatch, "motion_vae_loss: reconstruction shape does not match target");
  require(x.cols() == shape.columns(), ErrorKind::shape_mismatch, "motion_vae_loss: target columns");

  const Matrix target_motion = x.topRows(n - 1);
  const Matrix target_act = x.bottomRows(1);

  VaeLossTerms out;
  Tensor recon_term = config.recon_loss == ReconLoss::smooth_l1 ? nn::smooth_l1_loss(recon.motion, target_motion)
                                                                 : nn::mse_loss(recon.motion, target_motion);
  Tensor act_term = nn::bce_with_logits(recon.logits, target_act);
  Tensor kl_term = nn::gaussian_kl(posterior.mean, posterior.logvar, shape.batch);
  out.reconstruction = recon_term.item();
  out.activation = act_term.item();
  out.kl = kl_term.item();
  Tensor total = recon_term + config.lambda_act * act_term + config.lambda_reg * kl_term;

  if (config.position_enhance_weight > 0) {
    require(stats.dim() == n, ErrorKind::shape_mismatch, "motion_vae_loss: stats dimension");
    const nn::Vector scale = stats.std.head(n - 1);
    const nn::Vector shift = stats.mean.head(n - 1);
    const Tensor pred = nn::recover_joints(nn::affine_rows(recon.motion, scale, shift), shape, config.n_joints);
    const Matrix target_features = (target_motion.array().colwise() * scale.array()).colwise() + shift.array();
    Matrix target_joints(3 * config.n_joints, x.cols());
    for (int s = 0; s < shape.batch; ++s)
      target_joints.middleCols(s * shape.length, shape.length) =
          motion::recover_global_joints(target_features.middleCols(s * shape.length, shape.length), config.n_joints);
    // Active-frame mask replicated over joint coordinates.
    const Matrix mask = Matrix::Ones(3 * config.n_joints, 1) * target_act;
    const double active = target_act.sum();
    Tensor pos_term = nn::constant(Matrix::Zero(1, 1));
    if (active > 0) {
      const Tensor diff = nn::mul(nn::sub(pred, nn::constant(target_joints)), nn::constant(mask));
      const double rescale = static_cast<double>(x.cols()) / active;
      pos_term = nn::scale(nn::mse_loss(diff, Matrix::Zero(diff.rows(), diff.cols())), rescale);
    }
    out.position = pos_term.item();
    total = total + config.position_enhance_weight * pos_term;
  }
  out.total = total;
  return out;
}

Tensor discriminator_hinge_loss(const Tensor& f_real, const Tensor& f_fake) {
  const Tensor real_term = nn::scale(nn::relu(nn::add_scalar(nn::scale(f_real, -1.0), 1.0)), -1.0);
  const Tensor fake_term = nn::scale(nn::relu(nn::add_scalar(f_fake, 1.0)), -1.0);
  return nn::mean(real_term) + nn::mean(fake_term);
}

double discriminator_hinge_loss(double f_real, double f_fake) {
  return std::min(0.0, -1.0 + f_real) + std::min(0.0, -1.0 - f_fake);
}

Tensor generator_adv_loss(const Tensor& f_fake) { return nn::scale(nn::mean(f_fake), -1.0); }

Tensor san_discriminator_loss(const Tensor& h_real, const Tensor& h_fake, const Tensor& direction) {
  require(direction.rows() == 1 && direction.cols() == h_real.rows(), ErrorKind::shape_mismatch,
          "san_discriminator_loss: direction must be 1 x d_w");
  const double norm = direction.value().norm();
  require(std::abs(norm - 1.0) < 1e-6, ErrorKind::invalid_input,
          "san_discriminator_loss: direction is not unit norm (|w| = " + std::to_string(norm) + ")");
  const Tensor frozen = nn::constant(direction.value());
  const Tensor hinge = discriminator_hinge_loss(nn::matmul(frozen, h_real), nn::matmul(frozen, h_fake));
  const Matrix gap = h_real.value().rowwise().mean() - h_fake.value().rowwise().mean();
  const Tensor wasserstein = nn::matmul(direction, nn::constant(gap));
  return hinge + wasserstein;
}

}  // namespace mola::vae
