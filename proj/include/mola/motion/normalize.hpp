// Copyright 2026 The mola Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MOLA_MOTION_NORMALIZE_HPP
#define MOLA_MOTION_NORMALIZE_HPP

#include "mola/motion/features.hpp"

#include <nlohmann/json.hpp>

#include <vector>

namespace mola::motion {

/// Per-channel mean/std. The activation channel is pinned to (0, 1) so the
/// binary target survives normalization.
struct NormalizationStats {
  Eigen::VectorXd mean;
  Eigen::VectorXd std;

  static constexpr double kStdFloor = 1e-6;

  /// Statistics over the active frames of the given (training) motions.
  static NormalizationStats compute(const std::vector<MotionSequence>& motions);

  Eigen::Index dim() const { return mean.size(); }

  nlohmann::json to_json() const;
  static NormalizationStats from_json(const nlohmann::json& j);
};

Eigen::MatrixXd normalize_features(const Eigen::MatrixXd& features, const NormalizationStats& stats);
Eigen::MatrixXd denormalize_features(const Eigen::MatrixXd& features, const NormalizationStats& stats);

MotionSequence normalize(const MotionSequence& motion, const NormalizationStats& stats);
MotionSequence denormalize(const MotionSequence& motion, const NormalizationStats& stats);

}  // namespace mola::motion

#endif  // MOLA_MOTION_NORMALIZE_HPP
