// Copyright 2026 The mola Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MOLA_VAE_CONFIG_HPP
#define MOLA_VAE_CONFIG_HPP

#include "mola/motion/features.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>

namespace mola::vae {

enum class Adversary { none, gan, san };
enum class ReconLoss { mse, smooth_l1 };

const char* to_string(Adversary a);
const char* to_string(ReconLoss r);
Adversary adversary_from_string(const std::string& name);
ReconLoss recon_loss_from_string(const std::string& name);

struct VaeConfig {
  int n_joints = 22;
  /// encoder: pose features without joint velocities and contacts;
  /// full: every channel plus activation.
  motion::Representation input = motion::Representation::encoder;
  int d_z = 16;
  int downsample_ratio = 4;  // two stride-2 stages; fixed by the architecture
  int width = 128;
  int res_blocks = 1;
  int d_w = 256;
  int disc_width = 128;

  double lambda_act = 1.0;
  double lambda_reg = 1e-4;
  double lambda_adv = 1e-3;
  ReconLoss recon_loss = ReconLoss::smooth_l1;
  double position_enhance_weight = 1.0;
  Adversary adversary = Adversary::san;

  int batch = 128;
  int crop_length = 64;   // training window L
  int max_frames = 196;   // padded sequence length
  int iterations = 15000;
  double lr = 2e-4;
  double lr_final = 2e-5;
  int lr_decay_at = 10000;
  int checkpoint_every = 1000;
  int log_every = 50;
  std::uint64_t seed = 0;

  int input_dim() const { return motion::FeatureLayout{n_joints, input}.dim(); }
  int latent_length(int frames) const { return frames / downsample_ratio; }
  double learning_rate(int iteration) const { return iteration < lr_decay_at ? lr : lr_final; }

  void validate() const;
  nlohmann::json to_json() const;
  /// Missing keys keep their defaults; unknown keys and bad values throw ConfigError.
  static VaeConfig from_json(const nlohmann::json& j, const std::string& prefix = "vae");
};

}  // namespace mola::vae

#endif  // MOLA_VAE_CONFIG_HPP
