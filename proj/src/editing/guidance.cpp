// Copyright 2026 The mola Authors
// SPDX-License-Identifier: Apache-2.0

#include "mola/editing/guidance.hpp"

#include "mola/config.hpp"
#include "mola/error.hpp"

#include <cmath>

namespace mola::editing {

using nn::Matrix;
using nn::Tensor;

std::vector<int> GuidanceConfig::schedule(int steps) const {
  if (!repeats.empty()) {
    require(static_cast<int>(repeats.size()) == steps, ErrorKind::invalid_input,
            "guidance: time_travel list has " + std::to_string(repeats.size()) + " entries for " +
                std::to_string(steps) + " steps");
    return repeats;
  }
  std::vector<int> out(static_cast<std::size_t>(steps), 1);
  const int tail = static_cast<int>(std::ceil(time_travel_fraction * steps - 1e-9));
  for (int k = steps - tail; k < steps; ++k) out[static_cast<std::size_t>(k)] = time_travel;
  return out;
}

double GuidanceConfig::step_size(double loss) const {
  return mode == StepMode::normalized ? rho / std::sqrt(loss + 1e-8) : rho;
}

void GuidanceConfig::validate() const {
  check_field(rho >= 0 && std::isfinite(rho), "guidance.rho", "must be a finite number >= 0");
  check_field(time_travel >= 1, "guidance.time_travel", "repeats must be >= 1");
  check_field(time_travel_fraction >= 0 && time_travel_fraction <= 1, "guidance.time_travel_fraction",
              "must lie in [0, 1]");
  for (int r : repeats) check_field(r >= 1, "guidance.time_travel", "repeats must be >= 1");
}

nlohmann::json GuidanceConfig::to_json() const {
  nlohmann::json j = {{"rho", rho},
                      {"mode", mode == StepMode::normalized ? "normalized" : "constant"},
                      {"time_travel_fraction", time_travel_fraction},
                      {"sampler", sampler.to_json()}};
  if (repeats.empty())
    j["time_travel"] = time_travel;
  else
    j["time_travel"] = repeats;
  return j;
}

GuidanceConfig GuidanceConfig::from_json(const nlohmann::json& j, GuidanceConfig base) {
  ConfigReader r(j, "guidance");
  r.get("rho", base.rho);
  std::string mode = base.mode == StepMode::normalized ? "normalized" : "constant";
  r.get("mode", mode);
  if (mode != "normalized" && mode != "constant") throw ConfigError("guidance.mode", "expected normalized or constant");
  base.mode = mode == "normalized" ? StepMode::normalized : StepMode::constant;
  if (r.has("time_travel")) {
    const auto& tt = r.at("time_travel");
    if (tt.is_number_integer()) {
      base.time_travel = tt.get<int>();
      base.repeats.clear();
    } else if (tt.is_array()) {
      base.repeats.clear();
      for (const auto& v : tt) {
        if (!v.is_number_integer()) throw ConfigError("guidance.time_travel", "expected integers");
        base.repeats.push_back(v.get<int>());
      }
    } else {
      throw ConfigError("guidance.time_travel", "expected an integer or a list of integers");
    }
  }
  r.get("time_travel_fraction", base.time_travel_fraction);
  if (r.has("sampler")) {
    ConfigReader s(r.at("sampler"), "guidance.sampler");
    s.get("steps", base.sampler.steps);
    s.get("cfg_scale", base.sampler.cfg_scale);
    s.get("eta", base.sampler.eta);
    s.get("delta", base.sampler.delta);
    s.reject_unknown();
  }
  r.reject_unknown();
  base.validate();
  return base;
}

LatentDecoder make_latent_decoder(const diffusion::LdmBundle& model) {
  auto vae = model.vae.model;
  const nn::Vector lat_std = model.latent_std;
  const nn::Vector lat_mean = model.latent_mean;
  const nn::Vector feat_std = model.vae.stats.std;
  const nn::Vector feat_mean = model.vae.stats.mean;
  return [=](const Tensor& z) {
    const Tensor raw = nn::affine_rows(z, lat_std, lat_mean);
    const vae::Reconstruction rec = vae->decode(raw, {1, static_cast<int>(z.cols())});
    return nn::affine_rows(nn::concat_rows({rec.motion, nn::sigmoid(rec.logits)}), feat_std, feat_mean);
  };
}

Tensor editing_loss(const Tensor& features, const EditSpec& spec) {
  const int frames = spec.frames();
  require(features.cols() >= frames, ErrorKind::shape_mismatch,
          "editing_loss: decoded motion has " + std::to_string(features.cols()) + " frames, spec needs " +
              std::to_string(frames));
  const Tensor joints = nn::recover_joints(nn::slice_cols(features, 0, frames), {1, frames}, spec.n_joints());
  return nn::masked_norm_sum(joints - nn::constant(spec.targets), spec.mask);
}

std::pair<double, Matrix> editing_loss_gradient(const Matrix& z0, const EditSpec& spec, const LatentDecoder& decoder) {
  nn::FrozenParametersGuard frozen;
  const Tensor z(z0, true);
  const Tensor loss = editing_loss(decoder(z), spec);
  loss.backward();
  Matrix grad = z.has_grad() ? z.grad() : Matrix::Zero(z0.rows(), z0.cols());
  return {loss.item(), std::move(grad)};
}

MpgdResult mpgd_update(const Matrix& z_prev, const Matrix& z0, const EditSpec& spec, const GuidanceConfig& config,
                       double alpha_bar_prev, const LatentDecoder& decoder) {
  require(z_prev.rows() == z0.rows() && z_prev.cols() == z0.cols(), ErrorKind::shape_mismatch,
          "mpgd_update: z_prev and z0 shapes differ");
  MpgdResult out;
  auto [loss, grad] = editing_loss_gradient(z0, spec, decoder);
  if (!std::isfinite(loss) || !grad.allFinite())
    throw Error(ErrorKind::divergence, "guidance gradient is not finite (L_Motion=" + std::to_string(loss) +
                                           ", |grad|=" + std::to_string(grad.norm()) + ")");
  out.loss = loss;
  out.step = config.step_size(loss);
  out.z_prev = z_prev - out.step * std::sqrt(alpha_bar_prev) * grad;
  out.grad = std::move(grad);
  return out;
}

GuidedResult guided_sample(const diffusion::LdmBundle& model, const EditSpec& spec, std::uint64_t seed,
                           const GuidanceConfig& config) {
  spec.validate();
  config.validate();
  const auto& so = config.sampler;
  so.validate(model.schedule.steps());
  const int n_joints = model.vae.config.n_joints;
  require(spec.n_joints() == n_joints, ErrorKind::shape_mismatch,
          "edit spec has " + std::to_string(spec.n_joints()) + " joints, model has " + std::to_string(n_joints));
  require(spec.frames() <= model.vae.config.max_frames, ErrorKind::shape_mismatch,
          "edit spec spans " + std::to_string(spec.frames()) + " frames, model generates at most " +
              std::to_string(model.vae.config.max_frames));

  const std::vector<std::vector<int>> tokens{model.tokenizer.encode(spec.text)};
  const auto steps = diffusion::trailing_timesteps(model.schedule.steps(), so.steps);
  const auto repeats = config.schedule(so.steps);
  const LatentDecoder decoder = make_latent_decoder(model);
  Rng eta_rng(Rng::mix(seed, 1));
  Rng travel_rng(Rng::mix(seed, 2));

  GuidedResult result;
  Matrix z = diffusion::initial_latent(model, seed);
  for (std::size_t k = 0; k < steps.size(); ++k) {
    const int t = steps[k];
    const int t_prev = k + 1 < steps.size() ? steps[k + 1] : 0;
    const double ab_t = model.schedule.alpha_bar(t);
    const double ab_prev = model.schedule.alpha_bar(t_prev);
    int evaluations = 0;
    for (int i = 0; i < repeats[k]; ++i) {
      const Matrix eps = diffusion::guided_epsilon(model, z, {t}, tokens, so.cfg_scale);
      const Matrix z0 = diffusion::tweedie_estimate(z, eps, t, model.schedule);
      const Matrix noise = so.eta > 0 ? eta_rng.normal_matrix(z.rows(), z.cols()) : Matrix::Zero(z.rows(), z.cols());
      Matrix z_prev = diffusion::ddim_recombine(z0, eps, t, t_prev, model.schedule, so.eta, noise);
      if (config.rho > 0) {
        z_prev = mpgd_update(z_prev, z0, spec, config, ab_prev, decoder).z_prev;
        ++evaluations;
      }
      if (i + 1 < repeats[k]) {
        const double a = ab_t / ab_prev;
        z = std::sqrt(a) * z_prev + std::sqrt(1.0 - a) * travel_rng.normal_matrix(z.rows(), z.cols());
      } else {
        z = std::move(z_prev);
      }
    }
    result.evaluations_per_step.push_back(evaluations);
    result.gradient_evaluations += evaluations;
  }

  result.sample = diffusion::decode_sample(model, z, so);
  result.sample.motion.caption = spec.text;
  result.sample.metadata = diffusion::generator_metadata(model, spec.text, seed, so);
  result.sample.metadata["edit"] = {{"task", to_string(spec.task)}, {"guidance", config.to_json()}};
  {
    nn::NoGradGuard guard;
    const Matrix features = decoder(Tensor(z)).value();
    result.decoded_joints = motion::recover_global_joints(features, n_joints);
  }
  result.final_loss = editing_loss(result.decoded_joints, spec);
  return result;
}

}  // namespace mola::editing
