// Copyright 2026 The mola Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MOLA_DIFFUSION_SAMPLER_HPP
#define MOLA_DIFFUSION_SAMPLER_HPP

#include "mola/diffusion/stage2.hpp"
#include "mola/motion/motion_file.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace mola::diffusion {

struct SamplerOptions {
  int steps = 50;
  double cfg_scale = 11.0;
  double eta = 0.0;
  double delta = 0.5;

  static SamplerOptions from_config(const DiffusionConfig& config);
  void validate(int diffusion_steps) const;
  nlohmann::json to_json() const;
};

struct Sample {
  motion::MotionSequence motion;  // clipped to the decoded activation length
  motion::JointTrack joints;      // recovered global joints of `motion`
  nn::Matrix latent;              // standardized z0, d_z x d_l
  nlohmann::json metadata;

  motion::MotionFile to_file() const;
};

/// Classifier-free guided noise prediction for a batch (d_z x B * d_l).
nn::Matrix guided_epsilon(const LdmBundle& model, const nn::Matrix& z_t, const std::vector<int>& t,
                          const std::vector<std::vector<int>>& tokens, double cfg_scale);

/// z_T for a seed (d_z x d_l).
nn::Matrix initial_latent(const LdmBundle& model, std::uint64_t seed);

/// Trailing DDIM with CFG from z_T; returns standardized z0 per sample.
std::vector<nn::Matrix> sample_latents(const LdmBundle& model, const std::vector<std::string>& texts,
                                       const std::vector<std::uint64_t>& seeds, const SamplerOptions& options);

/// Un-standardize, decode, denormalize and clip by activation.
Sample decode_sample(const LdmBundle& model, const nn::Matrix& z0, const SamplerOptions& options);

/// Text -> motion. Deterministic in (text, seed, options, weights).
Sample sample_text_to_motion(const LdmBundle& model, const std::string& text, std::uint64_t seed,
                             const SamplerOptions& options);

/// Batched variant for evaluation. Each sample matches the single-prompt
/// result up to floating-point reassociation in the matrix products.
std::vector<Sample> sample_text_to_motion_batch(const LdmBundle& model, const std::vector<std::string>& texts,
                                                const std::vector<std::uint64_t>& seeds,
                                                const SamplerOptions& options);

/// The "generator" metadata block stored with every sampled motion.
nlohmann::json generator_metadata(const LdmBundle& model, const std::string& text, std::uint64_t seed,
                                  const SamplerOptions& options);

}  // namespace mola::diffusion

#endif  // MOLA_DIFFUSION_SAMPLER_HPP
