// Copyright 2026 The mola Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MOLA_EVAL_EVALUATE_HPP
#define MOLA_EVAL_EVALUATE_HPP

#include "mola/diffusion/sampler.hpp"
#include "mola/editing/guidance.hpp"
#include "mola/eval/evaluators.hpp"
#include "mola/eval/metrics.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <cstdint>
#include <functional>
#include <string>

namespace mola::eval {

inline constexpr const char* kEvaluatorBanner =
    "metrics computed with locally trained evaluators on synthetic data; absolute values are not comparable "
    "with published benchmark numbers";

struct MetricsReport {
  std::array<double, 3> r_precision{0, 0, 0};
  double fid = 0.0;
  double rfid = 0.0;
  double mm_dist = 0.0;
  double diversity = 0.0;
  double mmodality = 0.0;
  double mpjpe_mm = 0.0;
  double jsd = 0.0;
  double emd_frames = 0.0;
  double traj_err = 0.0;
  double loc_err = 0.0;
  double avg_err = 0.0;
  double aits_seconds = 0.0;
  nlohmann::json metadata = nlohmann::json::object();  // config, seeds, checkpoint ids, hardware, banner

  /// Every value finite, rates in [0, 1].
  void validate() const;
  nlohmann::json to_json() const;
  static MetricsReport from_json(const nlohmann::json& j);
  static std::string csv_header();
  std::string csv_row() const;
};

struct EvaluationOptions {
  int samples = 0;            // test captions to generate for (0: whole test split)
  int s_d = 300;              // diversity subset size (shrunk to fit)
  int mmodality_captions = 8;
  int s_l = 10;
  int control_prompts = 10;   // path-following prompts for the control errors
  int aits_prompts = 5;
  int r_precision_pool = 32;
  diffusion::SamplerOptions sampler;
  editing::GuidanceConfig guidance;
  std::uint64_t seed = 0;
  std::function<void(const std::string&)> on_progress;

  nlohmann::json to_json() const;
};

/// Full metric suite for a trained model on the dataset's test split.
MetricsReport evaluate_model(const diffusion::LdmBundle& model, const data::DatasetSplit& dataset,
                             const EvalEncoders& encoders, const EvaluationOptions& options);

/// Path-following spec from a reference motion: its pelvis XZ track at its
/// mean pelvis height.
editing::EditSpec path_spec_from_motion(const data::DatasetItem& item);

}  // namespace mola::eval

#endif  // MOLA_EVAL_EVALUATE_HPP
