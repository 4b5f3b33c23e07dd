// Copyright 2026 The mola Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MOLA_EVAL_ABLATION_HPP
#define MOLA_EVAL_ABLATION_HPP

#include "mola/diffusion/config.hpp"
#include "mola/editing/guidance.hpp"
#include "mola/eval/evaluators.hpp"
#include "mola/eval/metrics.hpp"
#include "mola/vae/config.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace mola::eval {

/// Stage-1 ablation grid: one axis varies at a time around a reference cell.
struct AblationGrid {
  vae::VaeConfig vae;                 // base config; the grid overrides d_z, adversary, input
  diffusion::DiffusionConfig ldm;     // used when generation or control rows are enabled
  std::vector<int> d_z{8, 16, 32};
  std::vector<vae::Adversary> adversaries{vae::Adversary::none, vae::Adversary::gan, vae::Adversary::san};
  std::vector<motion::Representation> inputs{motion::Representation::full, motion::Representation::encoder};
  int reference_d_z = 16;
  vae::Adversary reference_adversary = vae::Adversary::san;
  motion::Representation reference_input = motion::Representation::encoder;
  int generation_samples = 0;  // > d_e enables the FID / MMDist columns
  int control_prompts = 0;     // > 0 enables the path-following rows
  diffusion::SamplerOptions sampler;
  editing::GuidanceConfig guidance;

  void validate() const;
  nlohmann::json to_json() const;
  /// Keys: vae, ldm, grid {d_z, adversary, input}, reference {...},
  /// generation {samples, sampler}, control {prompts, guidance}.
  static AblationGrid from_json(const nlohmann::json& j);
};

struct AblationCell {
  int d_z = 16;
  vae::Adversary adversary = vae::Adversary::san;
  motion::Representation input = motion::Representation::encoder;
  std::string key() const;
};

struct AblationRow {
  std::string table;  // "reconstruction" or "editing"
  std::string group;  // "d_z", "adversary" or "input"
  std::string label;
  bool reference = false;
  AblationCell cell;
  std::uint64_t seed = 0;
  std::string vae_checkpoint;
  std::string ldm_checkpoint;  // empty without stage 2
  double rfid = 0.0;
  double mpjpe_mm = 0.0;
  std::optional<double> fid;
  std::optional<double> mm_dist;
  std::optional<ControlErrors> control;
};

struct AblationReport {
  std::vector<AblationRow> rows;
  nlohmann::json metadata = nlohmann::json::object();

  nlohmann::json to_json() const;
  std::string to_csv() const;
};

struct AblationOptions {
  std::filesystem::path work_dir;  // per-cell checkpoints when non-empty
  std::function<void(const std::string&)> on_progress;
};

/// Trains and evaluates every distinct cell once per seed and emits the
/// reconstruction/generation rows per axis plus path-following rows for the
/// input axis. Deterministic in (grid, dataset, seeds, encoders).
AblationReport run_ablation_suite(const AblationGrid& grid, const data::DatasetSplit& dataset,
                                  const std::vector<std::uint64_t>& seeds, const EvalEncoders& encoders,
                                  const AblationOptions& options = {});

}  // namespace mola::eval

#endif  // MOLA_EVAL_ABLATION_HPP
