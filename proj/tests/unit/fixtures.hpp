// Copyright 2026 The mola Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MOLA_TESTS_FIXTURES_HPP
#define MOLA_TESTS_FIXTURES_HPP

#include "mola/diffusion/stage2.hpp"
#include "mola/vae/stage1.hpp"

#include <filesystem>
#include <string>

namespace mola::testing {

inline const data::DatasetSplit& small_dataset() {
  static const data::DatasetSplit ds = data::build_dataset(80, 11, motion::toy_skeleton());
  return ds;
}

inline vae::VaeConfig small_vae_config() {
  vae::VaeConfig c;
  c.n_joints = 5;
  c.d_z = 4;
  c.width = 12;
  c.d_w = 8;
  c.disc_width = 8;
  c.batch = 4;
  c.crop_length = 16;
  c.iterations = 20;
  c.lr = 1e-3;
  c.lr_decay_at = 15;
  c.log_every = 5;
  c.checkpoint_every = 10;
  c.seed = 2;
  return c;
}

inline const vae::VaeBundle& small_vae() {
  static const vae::VaeBundle v = vae::train_stage1(small_dataset(), small_vae_config()).bundle;
  return v;
}

inline diffusion::DiffusionConfig small_ldm_config() {
  diffusion::DiffusionConfig c;
  c.diffusion_steps = 100;
  c.sample_steps = 10;
  c.cfg_scale = 3.0;
  c.d_model = 16;
  c.blocks = 1;
  c.heads = 2;
  c.mlp_ratio = 2;
  c.d_c = 8;
  c.text_width = 8;
  c.text_layers = 1;
  c.text_heads = 2;
  c.batch = 4;
  c.iterations = 6;
  c.lr = 1e-3;
  c.lr_min = 1e-4;
  c.warmup = 2;
  c.log_every = 1;
  c.eval_every = 3;
  c.checkpoint_every = 2;
  c.seed = 9;
  return c;
}

inline const diffusion::LdmBundle& small_ldm() {
  static const diffusion::LdmBundle m =
      diffusion::train_stage2(small_vae(), small_dataset(), small_ldm_config()).bundle;
  return m;
}

inline std::filesystem::path fresh_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("mola_test_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

}  // namespace mola::testing

#endif  // MOLA_TESTS_FIXTURES_HPP
