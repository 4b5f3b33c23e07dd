// Copyright 2026 The mola Authors
// SPDX-License-Identifier: Apache-2.0

#include "mola/vae/config.hpp"

#include "mola/config.hpp"

namespace mola::vae {

const char* to_string(Adversary a) {
  switch (a) {
    case Adversary::none: return "none";
    case Adversary::gan: return "gan";
    case Adversary::san: return "san";
  }
  return "?";
}

const char* to_string(ReconLoss r) { return r == ReconLoss::mse ? "mse" : "smooth_l1"; }

Adversary adversary_from_string(const std::string& name) {
  if (name == "none") return Adversary::none;
  if (name == "gan") return Adversary::gan;
  if (name == "san") return Adversary::san;
  throw ConfigError("adversary", "expected none, gan or san; got '" + name + "'");
}

ReconLoss recon_loss_from_string(const std::string& name) {
  if (name == "mse") return ReconLoss::mse;
  if (name == "smooth_l1") return ReconLoss::smooth_l1;
  throw ConfigError("recon_loss", "expected mse or smooth_l1; got '" + name + "'");
}

void VaeConfig::validate() const {
  check_field(n_joints == 5 || n_joints == 22, "vae.n_joints", "must be 5 or 22");
  check_field(d_z >= 1, "vae.d_z", "must be positive");
  check_field(downsample_ratio == 4, "vae.downsample_ratio", "the architecture downsamples by exactly 4");
  check_field(width >= 1, "vae.width", "must be positive");
  check_field(res_blocks >= 0, "vae.res_blocks", "must be non-negative");
  check_field(d_w >= 1, "vae.d_w", "must be positive");
  check_field(disc_width >= 1, "vae.disc_width", "must be positive");
  check_field(lambda_act >= 0, "vae.lambda_act", "must be >= 0");
  check_field(lambda_reg >= 0, "vae.lambda_reg", "must be >= 0");
  check_field(lambda_adv >= 0, "vae.lambda_adv", "must be >= 0");
  check_field(position_enhance_weight >= 0, "vae.position_enhance_weight", "must be >= 0");
  check_field(batch >= 1, "vae.batch", "must be positive");
  check_field(crop_length >= 4 && crop_length % downsample_ratio == 0, "vae.crop_length",
              "must be a positive multiple of downsample_ratio");
  check_field(max_frames % downsample_ratio == 0, "vae.max_frames", "must be divisible by downsample_ratio");
  check_field(crop_length <= max_frames, "vae.crop_length", "must not exceed max_frames");
  check_field(iterations >= 0, "vae.iterations", "must be >= 0");
  check_field(lr > 0 && lr_final > 0, "vae.lr", "learning rates must be positive");
  check_field(checkpoint_every >= 1, "vae.checkpoint_every", "must be positive");
  check_field(log_every >= 1, "vae.log_every", "must be positive");
}

nlohmann::json VaeConfig::to_json() const {
  return {{"n_joints", n_joints},
          {"input", motion::to_string(input)},
          {"d_z", d_z},
          {"downsample_ratio", downsample_ratio},
          {"width", width},
          {"res_blocks", res_blocks},
          {"d_w", d_w},
          {"disc_width", disc_width},
          {"lambda_act", lambda_act},
          {"lambda_reg", lambda_reg},
          {"lambda_adv", lambda_adv},
          {"recon_loss", to_string(recon_loss)},
          {"position_enhance_weight", position_enhance_weight},
          {"adversary", to_string(adversary)},
          {"batch", batch},
          {"crop_length", crop_length},
          {"max_frames", max_frames},
          {"iterations", iterations},
          {"lr", lr},
          {"lr_final", lr_final},
          {"lr_decay_at", lr_decay_at},
          {"checkpoint_every", checkpoint_every},
          {"log_every", log_every},
          {"seed", seed}};
}

VaeConfig VaeConfig::from_json(const nlohmann::json& j, const std::string& prefix) {
  VaeConfig c;
  ConfigReader r(j, prefix);
  r.get("n_joints", c.n_joints);
  std::string input = motion::to_string(c.input);
  r.get("input", input);
  if (input != "encoder" && input != "full") throw ConfigError(r.path("input"), "expected encoder or full");
  c.input = motion::representation_from_string(input);
  r.get("d_z", c.d_z);
  r.get("downsample_ratio", c.downsample_ratio);
  r.get("width", c.width);
  r.get("res_blocks", c.res_blocks);
  r.get("d_w", c.d_w);
  r.get("disc_width", c.disc_width);
  r.get("lambda_act", c.lambda_act);
  r.get("lambda_reg", c.lambda_reg);
  r.get("lambda_adv", c.lambda_adv);
  std::string recon = to_string(c.recon_loss);
  r.get("recon_loss", recon);
  try {
    c.recon_loss = recon_loss_from_string(recon);
  } catch (const ConfigError& e) {
    throw ConfigError(r.path("recon_loss"), "expected mse or smooth_l1");
  }
  r.get("position_enhance_weight", c.position_enhance_weight);
  std::string adversary = to_string(c.adversary);
  r.get("adversary", adversary);
  try {
    c.adversary = adversary_from_string(adversary);
  } catch (const ConfigError& e) {
    throw ConfigError(r.path("adversary"), "expected none, gan or san");
  }
  r.get("batch", c.batch);
  r.get("crop_length", c.crop_length);
  r.get("max_frames", c.max_frames);
  r.get("iterations", c.iterations);
  r.get("lr", c.lr);
  r.get("lr_final", c.lr_final);
  r.get("lr_decay_at", c.lr_decay_at);
  r.get("checkpoint_every", c.checkpoint_every);
  r.get("log_every", c.log_every);
  r.get("seed", c.seed);
  r.reject_unknown();
  c.validate();
  return c;
}

}  // namespace mola::vae
