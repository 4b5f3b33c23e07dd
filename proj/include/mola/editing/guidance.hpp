// Copyright 2026 The mola Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MOLA_EDITING_GUIDANCE_HPP
#define MOLA_EDITING_GUIDANCE_HPP

#include "mola/diffusion/sampler.hpp"
#include "mola/editing/edit_spec.hpp"
#include "mola/nn/ops.hpp"

#include <functional>
#include <vector>

namespace mola::editing {

enum class StepMode {
  normalized,  // rho / sqrt(L + 1e-8)
  constant,    // rho
};

struct GuidanceConfig {
  double rho = 0.1;
  StepMode mode = StepMode::normalized;
  int time_travel = 2;                 // repeats on the tail of the chain
  double time_travel_fraction = 0.25;  // share of steps (from the end) that repeat
  std::vector<int> repeats;            // explicit per-step repeats; overrides the two fields above
  diffusion::SamplerOptions sampler;

  /// Repeats r_k for each of `steps` sampler steps.
  std::vector<int> schedule(int steps) const;
  double step_size(double loss) const;

  void validate() const;
  nlohmann::json to_json() const;
  /// Overrides fields present in `j` ("rho", "mode", "time_travel", ...).
  static GuidanceConfig from_json(const nlohmann::json& j, GuidanceConfig base);
};

/// Standardized latent (d_z x d_l) -> denormalized decoded features (N x 4 d_l).
using LatentDecoder = std::function<nn::Tensor(const nn::Tensor& z)>;

/// Differentiable decoder path of a trained model (standardization, VAE
/// decoder, sigmoid activation, feature denormalization).
LatentDecoder make_latent_decoder(const diffusion::LdmBundle& model);

/// Differentiable L_Motion of decoded features: recover joints, then the
/// masked sum of per-entry Euclidean norms.
nn::Tensor editing_loss(const nn::Tensor& features, const EditSpec& spec);

struct MpgdResult {
  nn::Matrix z_prev;  // updated latent
  nn::Matrix grad;    // dL/dz0
  double loss = 0.0;  // L at z0 before the update
  double step = 0.0;  // rho_t actually used
};

/// z_prev - rho_t sqrt(alpha_bar_prev) grad_{z0} L(decoder(z0)).
MpgdResult mpgd_update(const nn::Matrix& z_prev, const nn::Matrix& z0, const EditSpec& spec,
                       const GuidanceConfig& config, double alpha_bar_prev, const LatentDecoder& decoder);

/// Loss value and gradient with respect to z0.
std::pair<double, nn::Matrix> editing_loss_gradient(const nn::Matrix& z0, const EditSpec& spec,
                                                    const LatentDecoder& decoder);

struct GuidedResult {
  diffusion::Sample sample;
  int gradient_evaluations = 0;
  std::vector<int> evaluations_per_step;
  double final_loss = 0.0;  // L_Motion of the unclipped final decode
  nn::Matrix decoded_joints;  // unclipped, 3J x frames
};

/// Training-free guided sampling with per-step time travel.
GuidedResult guided_sample(const diffusion::LdmBundle& model, const EditSpec& spec, std::uint64_t seed,
                           const GuidanceConfig& config);

}  // namespace mola::editing

#endif  // MOLA_EDITING_GUIDANCE_HPP
