// Copyright 2026 The mola Authors
// SPDX-License-Identifier: Apache-2.0

#include "mola/diffusion/schedule.hpp"

#include <numbers>

namespace mola::diffusion {

const char* to_string(ScheduleFamily family) { return family == ScheduleFamily::cosine ? "cosine" : "linear"; }

ScheduleFamily schedule_family_from_string(const std::string& name) {
  if (name == "cosine") return ScheduleFamily::cosine;
  if (name == "linear") return ScheduleFamily::linear;
  throw ConfigError("schedule", "unknown schedule family '" + name + "'");
}

NoiseSchedule::NoiseSchedule(ScheduleFamily family, int steps, double max_beta) {
  require(steps >= 1, ErrorKind::schedule, "schedule needs at least one step");
  require(max_beta > 0 && max_beta < 1, ErrorKind::schedule, "max_beta must lie in (0, 1)");
  alpha_bar_.resize(steps + 1);
  alpha_bar_(0) = 1.0;
  constexpr double offset = 0.008;
  auto f = [&](int t) {
    const double c = std::cos((static_cast<double>(t) / steps + offset) / (1 + offset) * std::numbers::pi / 2);
    return c * c;
  };
  for (int t = 1; t <= steps; ++t) {
    double beta = 0.0;
    if (family == ScheduleFamily::cosine)
      beta = std::min(1.0 - f(t) / f(t - 1), max_beta);
    else
      beta = steps == 1 ? max_beta : 1e-4 + (max_beta - 1e-4) * (t - 1) / (steps - 1);
    alpha_bar_(t) = alpha_bar_(t - 1) * (1.0 - beta);
  }
}

NoiseSchedule NoiseSchedule::from_alpha_bar(const Eigen::VectorXd& alpha_bar) {
  require(alpha_bar.size() >= 1, ErrorKind::schedule, "empty alpha_bar");
  NoiseSchedule s;
  s.alpha_bar_.resize(alpha_bar.size() + 1);
  s.alpha_bar_(0) = 1.0;
  s.alpha_bar_.tail(alpha_bar.size()) = alpha_bar;
  for (Eigen::Index t = 1; t < s.alpha_bar_.size(); ++t)
    require(s.alpha_bar_(t) > 0 && s.alpha_bar_(t) < s.alpha_bar_(t - 1), ErrorKind::schedule,
            "alpha_bar must be strictly decreasing in (0, 1)");
  return s;
}

double NoiseSchedule::sigma(int t, int t_prev, double eta) const {
  if (eta == 0.0) return 0.0;
  const double ab = alpha_bar(t);
  const double ab_prev = alpha_bar(t_prev);
  return eta * std::sqrt((1.0 - ab_prev) / (1.0 - ab)) * std::sqrt(1.0 - ab / ab_prev);
}

std::vector<int> trailing_timesteps(int total, int sample_steps) {
  require(sample_steps >= 1 && sample_steps <= total, ErrorKind::schedule,
          "trailing_timesteps: need 1 <= S <= T (S=" + std::to_string(sample_steps) + ", T=" + std::to_string(total) +
              ")");
  std::vector<int> out(static_cast<std::size_t>(sample_steps));
  for (int k = 0; k < sample_steps; ++k)
    out[static_cast<std::size_t>(k)] =
        total - static_cast<int>(static_cast<long long>(k) * total / sample_steps);
  return out;
}

}  // namespace mola::diffusion
