// Copyright 2026 The mola Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MOLA_DIFFUSION_SCHEDULE_HPP
#define MOLA_DIFFUSION_SCHEDULE_HPP

#include "mola/error.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace mola::diffusion {

enum class ScheduleFamily { cosine, linear };

const char* to_string(ScheduleFamily family);
ScheduleFamily schedule_family_from_string(const std::string& name);

/// Discrete variance-preserving schedule with alpha_bar(0) = 1.
class NoiseSchedule {
 public:
  NoiseSchedule() = default;
  /// Cosine: betas from the squared-cosine alpha_bar, clipped to max_beta.
  /// Linear: betas from 1e-4 to max_beta.
  NoiseSchedule(ScheduleFamily family, int steps, double max_beta = 0.02);

  /// alpha_bar given for t = 1..T (alpha_bar(0) = 1 is implied).
  static NoiseSchedule from_alpha_bar(const Eigen::VectorXd& alpha_bar);

  int steps() const { return static_cast<int>(alpha_bar_.size()) - 1; }
  double alpha_bar(int t) const {
    require(t >= 0 && t <= steps(), ErrorKind::schedule,
            "timestep " + std::to_string(t) + " outside [0, " + std::to_string(steps()) + "]");
    return alpha_bar_(t);
  }
  double alpha(int t) const { return alpha_bar(t) / alpha_bar(t - 1); }
  /// eta * sqrt((1 - ab_prev) / (1 - ab_t)) * sqrt(1 - ab_t / ab_prev).
  double sigma(int t, int t_prev, double eta) const;
  const Eigen::VectorXd& alpha_bars() const { return alpha_bar_; }

 private:
  Eigen::VectorXd alpha_bar_;  // index 0..T
};

/// t_k = T - floor(k T / S), k = 0..S-1.
std::vector<int> trailing_timesteps(int total, int sample_steps);

inline void check_timestep(const NoiseSchedule& schedule, int t) {
  require(t >= 1 && t <= schedule.steps(), ErrorKind::schedule,
          "timestep " + std::to_string(t) + " outside [1, " + std::to_string(schedule.steps()) + "]");
}

/// sqrt(ab_t) z0 + sqrt(1 - ab_t) eps.
template <typename D0, typename DE>
typename D0::PlainObject forward_diffuse(const Eigen::MatrixBase<D0>& z0, const Eigen::MatrixBase<DE>& eps, int t,
                                         const NoiseSchedule& schedule) {
  check_timestep(schedule, t);
  require(z0.rows() == eps.rows() && z0.cols() == eps.cols(), ErrorKind::shape_mismatch, "forward_diffuse: shapes");
  const double ab = schedule.alpha_bar(t);
  return std::sqrt(ab) * z0 + std::sqrt(1.0 - ab) * eps;
}

/// (z_t - sqrt(1 - ab_t) eps) / sqrt(ab_t).
template <typename DZ, typename DE>
typename DZ::PlainObject tweedie_estimate(const Eigen::MatrixBase<DZ>& z_t, const Eigen::MatrixBase<DE>& eps, int t,
                                          const NoiseSchedule& schedule) {
  check_timestep(schedule, t);
  const double ab = schedule.alpha_bar(t);
  return (z_t - std::sqrt(1.0 - ab) * eps) / std::sqrt(ab);
}

/// s * eps_cond + (1 - s) * eps_uncond.
template <typename DC, typename DU>
auto cfg_epsilon(const Eigen::MatrixBase<DC>& eps_cond, const Eigen::MatrixBase<DU>& eps_uncond, double s) {
  return (s * eps_cond + (1.0 - s) * eps_uncond).eval();
}

/// Recombines a clean estimate towards t_prev:
/// sqrt(ab_prev) z0 + sqrt(1 - ab_prev - sigma^2) eps + sigma noise.
template <typename D0, typename DE, typename DN>
typename D0::PlainObject ddim_recombine(const Eigen::MatrixBase<D0>& z0_hat, const Eigen::MatrixBase<DE>& eps, int t,
                                        int t_prev, const NoiseSchedule& schedule, double eta,
                                        const Eigen::MatrixBase<DN>& noise) {
  require(t > t_prev && t_prev >= 0, ErrorKind::schedule, "ddim_step: need t > t_prev >= 0");
  const double ab_prev = schedule.alpha_bar(t_prev);
  const double sigma = schedule.sigma(t, t_prev, eta);
  const double rest = 1.0 - ab_prev - sigma * sigma;
  require(rest >= -1e-12, ErrorKind::schedule, "ddim_step: sigma^2 exceeds 1 - alpha_bar(t_prev)");
  typename D0::PlainObject out = std::sqrt(ab_prev) * z0_hat + std::sqrt(std::max(rest, 0.0)) * eps;
  if (sigma > 0) out += sigma * noise;
  return out;
}

template <typename DZ, typename DE, typename DN>
typename DZ::PlainObject ddim_step(const Eigen::MatrixBase<DZ>& z_t, const Eigen::MatrixBase<DE>& eps, int t,
                                   int t_prev, const NoiseSchedule& schedule, double eta,
                                   const Eigen::MatrixBase<DN>& noise) {
  return ddim_recombine(tweedie_estimate(z_t, eps, t, schedule), eps, t, t_prev, schedule, eta, noise);
}

/// Deterministic DDIM (eta = 0).
template <typename DZ, typename DE>
typename DZ::PlainObject ddim_step(const Eigen::MatrixBase<DZ>& z_t, const Eigen::MatrixBase<DE>& eps, int t,
                                   int t_prev, const NoiseSchedule& schedule) {
  return ddim_step(z_t, eps, t, t_prev, schedule, 0.0, DZ::PlainObject::Zero(z_t.rows(), z_t.cols()));
}

}  // namespace mola::diffusion

#endif  // MOLA_DIFFUSION_SCHEDULE_HPP
