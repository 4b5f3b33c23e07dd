// Copyright 2026 The mola Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MOLA_DIFFUSION_CONFIG_HPP
#define MOLA_DIFFUSION_CONFIG_HPP

#include "mola/diffusion/schedule.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>

namespace mola::diffusion {

struct DiffusionConfig {
  // Schedule and sampler.
  int diffusion_steps = 1000;
  ScheduleFamily schedule = ScheduleFamily::cosine;
  double max_beta = 0.02;
  int sample_steps = 50;
  double cfg_scale = 11.0;
  double eta = 0.0;
  double delta = 0.5;  // activation threshold for length clipping

  // Denoiser.
  int d_model = 256;
  int blocks = 4;
  int heads = 4;
  int mlp_ratio = 4;

  // Text encoder.
  int d_c = 128;
  int text_width = 128;
  int text_layers = 2;
  int text_heads = 4;
  int max_tokens = 16;

  // Training.
  double cond_drop = 0.1;
  bool sample_z0 = false;  // false: posterior mean
  int batch = 64;
  int iterations = 10000;
  double lr = 1e-4;
  double lr_min = 1e-6;
  int warmup = 500;
  int log_every = 100;
  int eval_every = 1000;
  int checkpoint_every = 1000;
  std::uint64_t seed = 0;

  /// Linear warm-up then cosine annealing to lr_min.
  double learning_rate(int iteration) const;
  NoiseSchedule make_schedule() const { return NoiseSchedule(schedule, diffusion_steps, max_beta); }

  void validate() const;
  nlohmann::json to_json() const;
  static DiffusionConfig from_json(const nlohmann::json& j, const std::string& prefix = "ldm");
};

}  // namespace mola::diffusion

#endif  // MOLA_DIFFUSION_CONFIG_HPP
