// Copyright 2026 The mola Authors
// SPDX-License-Identifier: Apache-2.0

#include "mola/motion/normalize.hpp"

#include "mola/error.hpp"

namespace mola::motion {

NormalizationStats NormalizationStats::compute(const std::vector<MotionSequence>& motions) {
  require(!motions.empty(), ErrorKind::invalid_input, "normalization stats need at least one motion");
  const Eigen::Index dim = motions.front().features.rows();
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd sum_sq = Eigen::VectorXd::Zero(dim);
  double count = 0.0;
  for (const auto& m : motions) {
    require(m.features.rows() == dim, ErrorKind::shape_mismatch, "motions disagree on channel count");
    const auto active = m.features.leftCols(m.length);
    sum += active.rowwise().sum();
    sum_sq += active.array().square().matrix().rowwise().sum();
    count += m.length;
  }
  NormalizationStats stats;
  stats.mean = sum / count;
  const Eigen::VectorXd var = (sum_sq / count - stats.mean.cwiseAbs2()).cwiseMax(0.0);
  stats.std = var.cwiseSqrt().cwiseMax(kStdFloor);
  stats.mean(dim - 1) = 0.0;
  stats.std(dim - 1) = 1.0;
  return stats;
}

nlohmann::json NormalizationStats::to_json() const {
  return {{"mean", std::vector<double>(mean.data(), mean.data() + mean.size())},
          {"std", std::vector<double>(std.data(), std.data() + std.size())}};
}

NormalizationStats NormalizationStats::from_json(const nlohmann::json& j) {
  const auto m = j.at("mean").get<std::vector<double>>();
  const auto s = j.at("std").get<std::vector<double>>();
  require(m.size() == s.size(), ErrorKind::shape_mismatch, "stats mean/std size mismatch");
  NormalizationStats stats;
  stats.mean = Eigen::Map<const Eigen::VectorXd>(m.data(), static_cast<Eigen::Index>(m.size()));
  stats.std = Eigen::Map<const Eigen::VectorXd>(s.data(), static_cast<Eigen::Index>(s.size()));
  return stats;
}

Eigen::MatrixXd normalize_features(const Eigen::MatrixXd& features, const NormalizationStats& stats) {
  require(features.rows() == stats.dim(), ErrorKind::shape_mismatch,
          "feature dimension " + std::to_string(features.rows()) + " does not match stats dimension " +
              std::to_string(stats.dim()));
  return (features.colwise() - stats.mean).array().colwise() / stats.std.array();
}

Eigen::MatrixXd denormalize_features(const Eigen::MatrixXd& features, const NormalizationStats& stats) {
  require(features.rows() == stats.dim(), ErrorKind::shape_mismatch,
          "feature dimension " + std::to_string(features.rows()) + " does not match stats dimension " +
              std::to_string(stats.dim()));
  return (features.array().colwise() * stats.std.array()).matrix().colwise() + stats.mean;
}

MotionSequence normalize(const MotionSequence& motion, const NormalizationStats& stats) {
  MotionSequence out = motion;
  out.features = normalize_features(motion.features, stats);
  return out;
}

MotionSequence denormalize(const MotionSequence& motion, const NormalizationStats& stats) {
  MotionSequence out = motion;
  out.features = denormalize_features(motion.features, stats);
  return out;
}

}  // namespace mola::motion
