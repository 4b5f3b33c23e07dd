// Copyright 2026 The mola Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MOLA_DIFFUSION_STAGE2_HPP
#define MOLA_DIFFUSION_STAGE2_HPP

#include "mola/diffusion/model.hpp"
#include "mola/vae/stage1.hpp"

#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace mola::diffusion {

/// Text-conditioned latent diffusion model on top of a frozen VAE.
struct LdmBundle {
  DiffusionConfig config;
  vae::VaeBundle vae;
  Tokenizer tokenizer;
  std::shared_ptr<TextEncoder> text;
  std::shared_ptr<Denoiser> denoiser;
  NoiseSchedule schedule;
  nn::Vector latent_mean;  // per latent channel; diffusion runs on standardized latents
  nn::Vector latent_std;
  std::string checkpoint_id;

  int d_z() const { return vae.config.d_z; }
  int latent_length() const { return vae.config.latent_length(vae.config.max_frames); }
  nn::NamedParameters parameters() const;
};

/// Posterior statistics of padded dataset motions plus tokenized captions.
struct LatentSet {
  std::vector<nn::Matrix> mean;    // d_z x d_l each
  std::vector<nn::Matrix> logvar;
  std::vector<std::vector<int>> tokens;
  std::vector<std::string> captions;
  std::size_t size() const { return mean.size(); }
};

LatentSet encode_latents(const vae::VaeBundle& vae, const std::vector<data::DatasetItem>& items,
                         const Tokenizer& tokenizer);

struct Stage2LogRow {
  int iteration = 0;
  double lr = 0.0;
  double loss = 0.0;     // squared error summed over latent entries, batch mean
  double eps_mse = 0.0;  // per-entry mean
  double val_eps_mse = -1.0;  // < 0 when not evaluated at this row
  int dropped = 0;            // conditions replaced by the null embedding
};

struct Stage2Options {
  std::filesystem::path out_dir;
  bool resume = false;
  int stop_after = -1;
  std::function<void(const Stage2LogRow&)> on_log;
};

struct Stage2Result {
  LdmBundle bundle;
  std::vector<Stage2LogRow> log;
  int iterations_done = 0;
  long long condition_samples = 0;
  long long condition_drops = 0;
  double final_val_eps_mse = 0.0;
};

/// Minimizes E||eps - eps_theta(z_t, t, tau(c))||^2 on frozen-VAE latents with
/// condition dropout. Deterministic given config.seed; resumable from out_dir.
Stage2Result train_stage2(const vae::VaeBundle& vae, const data::DatasetSplit& dataset, const DiffusionConfig& config,
                          const Stage2Options& options = {});

/// Per-entry epsilon MSE on standardized latent means at seeded timesteps.
double validation_eps_mse(const LdmBundle& model, const LatentSet& set, std::uint64_t seed);

/// Layout: config.json, weights.bin, latent_stats.json, vocabulary.json,
/// checkpoint_id, vae/ (a VAE checkpoint).
void save_ldm(const std::filesystem::path& dir, const LdmBundle& bundle);
/// Throws Error(not_found) when the directory is not an LDM checkpoint.
LdmBundle load_ldm(const std::filesystem::path& dir);

/// Combined identifier of the denoiser, text encoder and VAE weights.
std::string ldm_checkpoint_id(const LdmBundle& bundle);

}  // namespace mola::diffusion

#endif  // MOLA_DIFFUSION_STAGE2_HPP
