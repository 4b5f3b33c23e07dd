// Copyright 2026 The mola Authors
// SPDX-License-Identifier: Apache-2.0

#include "mola/diffusion/config.hpp"

#include "mola/config.hpp"

#include <numbers>

namespace mola::diffusion {

double DiffusionConfig::learning_rate(int iteration) const {
  if (warmup > 0 && iteration < warmup) return lr * (iteration + 1) / warmup;
  const int span = std::max(iterations - warmup, 1);
  const double progress = std::min(1.0, static_cast<double>(iteration - warmup) / span);
  return lr_min + 0.5 * (lr - lr_min) * (1.0 + std::cos(std::numbers::pi * progress));
}

void DiffusionConfig::validate() const {
  check_field(diffusion_steps >= 1, "ldm.diffusion_steps", "must be positive");
  check_field(max_beta > 0 && max_beta < 1, "ldm.max_beta", "must lie in (0, 1)");
  check_field(sample_steps >= 1 && sample_steps <= diffusion_steps, "ldm.sample_steps",
              "must satisfy 1 <= sample_steps <= diffusion_steps");
  check_field(cfg_scale >= 0, "ldm.cfg_scale", "must be >= 0");
  check_field(eta >= 0 && eta <= 1, "ldm.eta", "must lie in [0, 1]");
  check_field(delta > 0 && delta < 1, "ldm.delta", "must lie in (0, 1)");
  check_field(d_model >= 2 && d_model % 2 == 0, "ldm.d_model", "must be a positive even number");
  check_field(blocks >= 1, "ldm.blocks", "must be positive");
  check_field(heads >= 1 && d_model % heads == 0, "ldm.heads", "must divide d_model");
  check_field(mlp_ratio >= 1, "ldm.mlp_ratio", "must be positive");
  check_field(d_c >= 1, "ldm.d_c", "must be positive");
  check_field(text_width >= 2 && text_width % 2 == 0, "ldm.text_width", "must be a positive even number");
  check_field(text_layers >= 1, "ldm.text_layers", "must be positive");
  check_field(text_heads >= 1 && text_width % text_heads == 0, "ldm.text_heads", "must divide text_width");
  check_field(max_tokens >= 1, "ldm.max_tokens", "must be positive");
  check_field(cond_drop >= 0 && cond_drop <= 1, "ldm.cond_drop", "must lie in [0, 1]");
  check_field(batch >= 1, "ldm.batch", "must be positive");
  check_field(iterations >= 0, "ldm.iterations", "must be >= 0");
  check_field(lr > 0 && lr_min >= 0 && lr_min <= lr, "ldm.lr", "need 0 <= lr_min <= lr, lr > 0");
  check_field(warmup >= 0, "ldm.warmup", "must be >= 0");
  check_field(log_every >= 1, "ldm.log_every", "must be positive");
  check_field(eval_every >= 1, "ldm.eval_every", "must be positive");
  check_field(checkpoint_every >= 1, "ldm.checkpoint_every", "must be positive");
}

nlohmann::json DiffusionConfig::to_json() const {
  return {{"diffusion_steps", diffusion_steps},
          {"schedule", to_string(schedule)},
          {"max_beta", max_beta},
          {"sample_steps", sample_steps},
          {"cfg_scale", cfg_scale},
          {"eta", eta},
          {"delta", delta},
          {"d_model", d_model},
          {"blocks", blocks},
          {"heads", heads},
          {"mlp_ratio", mlp_ratio},
          {"d_c", d_c},
          {"text_width", text_width},
          {"text_layers", text_layers},
          {"text_heads", text_heads},
          {"max_tokens", max_tokens},
          {"cond_drop", cond_drop},
          {"sample_z0", sample_z0},
          {"batch", batch},
          {"iterations", iterations},
          {"lr", lr},
          {"lr_min", lr_min},
          {"warmup", warmup},
          {"log_every", log_every},
          {"eval_every", eval_every},
          {"checkpoint_every", checkpoint_every},
          {"seed", seed}};
}

DiffusionConfig DiffusionConfig::from_json(const nlohmann::json& j, const std::string& prefix) {
  DiffusionConfig c;
  ConfigReader r(j, prefix);
  r.get("diffusion_steps", c.diffusion_steps);
  std::string family = to_string(c.schedule);
  r.get("schedule", family);
  if (family != "cosine" && family != "linear") throw ConfigError(r.path("schedule"), "expected cosine or linear");
  c.schedule = schedule_family_from_string(family);
  r.get("max_beta", c.max_beta);
  r.get("sample_steps", c.sample_steps);
  r.get("cfg_scale", c.cfg_scale);
  r.get("eta", c.eta);
  r.get("delta", c.delta);
  r.get("d_model", c.d_model);
  r.get("blocks", c.blocks);
  r.get("heads", c.heads);
  r.get("mlp_ratio", c.mlp_ratio);
  r.get("d_c", c.d_c);
  r.get("text_width", c.text_width);
  r.get("text_layers", c.text_layers);
  r.get("text_heads", c.text_heads);
  r.get("max_tokens", c.max_tokens);
  r.get("cond_drop", c.cond_drop);
  r.get("sample_z0", c.sample_z0);
  r.get("batch", c.batch);
  r.get("iterations", c.iterations);
  r.get("lr", c.lr);
  r.get("lr_min", c.lr_min);
  r.get("warmup", c.warmup);
  r.get("log_every", c.log_every);
  r.get("eval_every", c.eval_every);
  r.get("checkpoint_every", c.checkpoint_every);
  r.get("seed", c.seed);
  r.reject_unknown();
  c.validate();
  return c;
}

}  // namespace mola::diffusion
