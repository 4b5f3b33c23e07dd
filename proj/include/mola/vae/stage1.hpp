// Copyright 2026 The mola Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MOLA_VAE_STAGE1_HPP
#define MOLA_VAE_STAGE1_HPP

#include "mola/data/synthetic.hpp"
#include "mola/motion/normalize.hpp"
#include "mola/vae/losses.hpp"

#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace mola::vae {

/// Normalized, zero-padded training sequences in the VAE's input representation.
struct SequenceBank {
  std::vector<nn::Matrix> sequences;  // N x max_frames each
  std::vector<int> lengths;
};

SequenceBank make_sequence_bank(const std::vector<data::DatasetItem>& items, const VaeConfig& config,
                                const motion::NormalizationStats& stats);

/// Full-representation item -> VAE input representation (unpadded, denormalized).
motion::MotionSequence to_vae_input(const motion::MotionSequence& full, const VaeConfig& config);

struct Stage1LogRow {
  int iteration = 0;
  double lr = 0.0;
  double loss = 0.0;
  double reconstruction = 0.0;
  double activation = 0.0;
  double kl = 0.0;
  double position = 0.0;
  double adversarial = 0.0;
  double discriminator = 0.0;  // objective value (to maximize)
};

struct Stage1Options {
  std::filesystem::path out_dir;  // empty: no checkpoints
  bool resume = false;
  int stop_after = -1;            // stop once this many iterations are done (< 0: run to the end)
  std::function<void(const Stage1LogRow&)> on_log;
};

/// Frozen Stage-1 model plus everything needed to use it.
struct VaeBundle {
  VaeConfig config;
  std::shared_ptr<VaeModel> model;
  motion::NormalizationStats stats;  // of the VAE input representation
  std::string checkpoint_id;
};

struct Stage1Result {
  VaeBundle bundle;
  std::shared_ptr<Discriminator> discriminator;
  std::vector<Stage1LogRow> log;
  int iterations_done = 0;
};

/// Alternating VAE / discriminator training on random crops.
/// Deterministic given config.seed; resumable from out_dir.
Stage1Result train_stage1(const data::DatasetSplit& dataset, const VaeConfig& config, const Stage1Options& options = {});

void save_vae(const std::filesystem::path& dir, const VaeBundle& bundle);
/// Throws Error(not_found) when the directory is not a VAE checkpoint.
VaeBundle load_vae(const std::filesystem::path& dir);

/// Posterior mean latents (d_z x d_l) of a normalized padded sequence.
nn::Matrix encode_mean(const VaeBundle& vae, const nn::Matrix& normalized);

/// Decoded sequence in normalized space with the activation channel passed
/// through a sigmoid (N x 4 d_l).
nn::Matrix decode_latent(const VaeBundle& vae, const nn::Matrix& z);

/// Denormalized decoded features (activation channel in (0, 1)).
nn::Matrix decode_to_features(const VaeBundle& vae, const nn::Matrix& z);

/// Encode-decode of a full-representation motion, cut to its own length
/// (VAE input representation, denormalized).
motion::MotionSequence reconstruct_motion(const VaeBundle& vae, const motion::MotionSequence& full);

/// Reconstruction MPJPE in mm over the active frames of `items`,
/// each padded to the model's max_frames.
double reconstruction_mpjpe(const VaeBundle& vae, const std::vector<data::DatasetItem>& items);

}  // namespace mola::vae

#endif  // MOLA_VAE_STAGE1_HPP
