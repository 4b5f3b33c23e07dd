// Copyright 2026 The mola Authors
// SPDX-License-Identifier: Apache-2.0

#include "mola/diffusion/sampler.hpp"

#include "mola/config.hpp"
#include "mola/error.hpp"
#include "mola/motion/skeleton.hpp"

namespace mola::diffusion {

using nn::Matrix;
using nn::Tensor;

SamplerOptions SamplerOptions::from_config(const DiffusionConfig& config) {
  return {config.sample_steps, config.cfg_scale, config.eta, config.delta};
}

void SamplerOptions::validate(int diffusion_steps) const {
  check_field(steps >= 1 && steps <= diffusion_steps, "steps",
              "must lie in [1, " + std::to_string(diffusion_steps) + "]");
  check_field(cfg_scale >= 0, "cfg_scale", "must be >= 0");
  check_field(eta >= 0 && eta <= 1, "eta", "must lie in [0, 1]");
  check_field(delta > 0 && delta < 1, "delta", "must lie in (0, 1)");
}

nlohmann::json SamplerOptions::to_json() const {
  return {{"steps", steps}, {"cfg_scale", cfg_scale}, {"eta", eta}, {"delta", delta}};
}

motion::MotionFile Sample::to_file() const {
  motion::MotionFile file;
  file.motion = motion;
  file.global_joints = joints;
  file.metadata = metadata;
  return file;
}

Matrix guided_epsilon(const LdmBundle& model, const Matrix& z_t, const std::vector<int>& t,
                      const std::vector<std::vector<int>>& tokens, double cfg_scale) {
  nn::NoGradGuard guard;
  const auto batch = static_cast<Eigen::Index>(t.size());
  require(static_cast<Eigen::Index>(tokens.size()) == batch, ErrorKind::shape_mismatch,
          "guided_epsilon: one caption per sequence");
  if (cfg_scale == 1.0) return (*model.denoiser)(Tensor(z_t), t, (*model.text)(tokens)).value();
  if (cfg_scale == 0.0)
    return (*model.denoiser)(Tensor(z_t), t, (*model.text)(tokens, std::vector<bool>(tokens.size(), true))).value();

  Matrix both(z_t.rows(), 2 * z_t.cols());
  both << z_t, z_t;
  std::vector<int> tt = t;
  tt.insert(tt.end(), t.begin(), t.end());
  std::vector<std::vector<int>> toks = tokens;
  toks.insert(toks.end(), tokens.begin(), tokens.end());
  std::vector<bool> drop(toks.size(), false);
  std::fill(drop.begin() + static_cast<std::ptrdiff_t>(tokens.size()), drop.end(), true);
  const Matrix eps = (*model.denoiser)(Tensor(both), tt, (*model.text)(toks, drop)).value();
  return cfg_epsilon(eps.leftCols(z_t.cols()), eps.rightCols(z_t.cols()), cfg_scale);
}

Matrix initial_latent(const LdmBundle& model, std::uint64_t seed) {
  Rng rng(seed);
  return rng.normal_matrix(model.d_z(), model.latent_length());
}

std::vector<Matrix> sample_latents(const LdmBundle& model, const std::vector<std::string>& texts,
                                   const std::vector<std::uint64_t>& seeds, const SamplerOptions& options) {
  options.validate(model.schedule.steps());
  require(texts.size() == seeds.size() && !texts.empty(), ErrorKind::invalid_input,
          "sample_latents: need one seed per text");
  const int d_l = model.latent_length();
  const auto batch = texts.size();
  std::vector<std::vector<int>> tokens;
  for (const auto& text : texts) tokens.push_back(model.tokenizer.encode(text));

  Matrix z(model.d_z(), static_cast<Eigen::Index>(batch) * d_l);
  std::vector<Rng> noise_rngs;
  for (std::size_t b = 0; b < batch; ++b) {
    z.middleCols(static_cast<Eigen::Index>(b) * d_l, d_l) = initial_latent(model, seeds[b]);
    noise_rngs.emplace_back(Rng::mix(seeds[b], 1));
  }
  const auto steps = trailing_timesteps(model.schedule.steps(), options.steps);
  for (std::size_t k = 0; k < steps.size(); ++k) {
    const int t = steps[k];
    const int t_prev = k + 1 < steps.size() ? steps[k + 1] : 0;
    const Matrix eps = guided_epsilon(model, z, std::vector<int>(batch, t), tokens, options.cfg_scale);
    Matrix noise = Matrix::Zero(z.rows(), z.cols());
    if (options.eta > 0)
      for (std::size_t b = 0; b < batch; ++b)
        noise.middleCols(static_cast<Eigen::Index>(b) * d_l, d_l) = noise_rngs[b].normal_matrix(z.rows(), d_l);
    z = ddim_step(z, eps, t, t_prev, model.schedule, options.eta, noise);
  }
  std::vector<Matrix> out;
  for (std::size_t b = 0; b < batch; ++b) out.push_back(z.middleCols(static_cast<Eigen::Index>(b) * d_l, d_l));
  return out;
}

Sample decode_sample(const LdmBundle& model, const Matrix& z0, const SamplerOptions& options) {
  const Matrix raw = (z0.array().colwise() * model.latent_std.array()).colwise() + model.latent_mean.array();
  motion::MotionSequence decoded;
  decoded.features = vae::decode_to_features(model.vae, raw);
  decoded.length = static_cast<int>(decoded.features.cols());
  decoded.representation = model.vae.config.input;
  decoded.skeleton = motion::skeleton_for_joints(model.vae.config.n_joints);
  Sample s;
  s.motion = motion::clip_by_activation(decoded, options.delta);
  s.joints = motion::recover_global_joints(s.motion);
  s.latent = z0;
  return s;
}

nlohmann::json generator_metadata(const LdmBundle& model, const std::string& text, std::uint64_t seed,
                                  const SamplerOptions& options) {
  return {{"text", text},
          {"generator",
           {{"seed", seed},
            {"s", options.cfg_scale},
            {"S", options.steps},
            {"delta", options.delta},
            {"eta", options.eta},
            {"checkpoint_id", model.checkpoint_id}}}};
}

Sample sample_text_to_motion(const LdmBundle& model, const std::string& text, std::uint64_t seed,
                             const SamplerOptions& options) {
  return sample_text_to_motion_batch(model, {text}, {seed}, options).front();
}

std::vector<Sample> sample_text_to_motion_batch(const LdmBundle& model, const std::vector<std::string>& texts,
                                                const std::vector<std::uint64_t>& seeds,
                                                const SamplerOptions& options) {
  const auto latents = sample_latents(model, texts, seeds, options);
  std::vector<Sample> out;
  for (std::size_t i = 0; i < latents.size(); ++i) {
    Sample s = decode_sample(model, latents[i], options);
    s.motion.caption = texts[i];
    s.metadata = generator_metadata(model, texts[i], seeds[i], options);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace mola::diffusion
