// Copyright 2026 The mola Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MOLA_EDITING_EDIT_SPEC_HPP
#define MOLA_EDITING_EDIT_SPEC_HPP

#include "mola/motion/features.hpp"
#include "mola/motion/skeleton.hpp"

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include <optional>
#include <string>

namespace mola::editing {

enum class Task { path_following, in_betweening, upper_body };

const char* to_string(Task task);
Task task_from_string(const std::string& name);

/// Sparse global-position targets over a (joint, frame) grid.
struct EditSpec {
  Task task = Task::path_following;
  std::string text;
  Eigen::MatrixXd mask;     // J x F, entries 0 or 1
  Eigen::MatrixXd targets;  // 3J x F, meaningful where masked
  std::optional<nlohmann::json> guidance;  // optional guidance overrides from the wire

  int n_joints() const { return static_cast<int>(mask.rows()); }
  int frames() const { return static_cast<int>(mask.cols()); }
  int masked_count() const { return static_cast<int>(mask.sum()); }

  /// Shape, binary mask, finiteness on masked entries, at least one bit set.
  void validate() const;
};

/// Wire format: {"task", "text", "mask": [[0/1] per joint], "targets":
/// [[[x, y, z] or null per frame] per joint], "guidance": {...}}.
nlohmann::json to_json(const EditSpec& spec);
/// Throws Error(invalid_input) on malformed JSON, Error(shape_mismatch) when
/// mask and targets disagree, and Error(invalid_input) on an empty mask.
EditSpec edit_spec_from_json(const nlohmann::json& j);

/// Polyline resampled to `frames` points equally spaced in arc length (frames x 2).
Eigen::MatrixXd resample_polyline(const Eigen::MatrixXd& points, int frames);

/// Pelvis follows `path_xz` (F x 2) at the given height on every frame.
EditSpec build_path_following_spec(const Eigen::MatrixXd& path_xz, const std::string& text,
                                   const motion::SkeletonSpec& skeleton, std::optional<double> pelvis_height = {});

/// All joints pinned on the first and last n_ctx of `frames` frames.
/// start/end poses are 3J x n_ctx (a single column is repeated).
EditSpec build_inbetweening_spec(const Eigen::MatrixXd& start_pose, const Eigen::MatrixXd& end_pose, int n_ctx,
                                 int frames, const std::string& text, const motion::SkeletonSpec& skeleton);

/// Lower-body joints follow `lower_body_motion` (3J x F) on every frame.
EditSpec build_upper_body_spec(const motion::JointTrack& lower_body_motion, const std::string& text,
                               const motion::SkeletonSpec& skeleton);

/// Sum over masked (joint, frame) of ||joints - targets||, joints 3J x F' with F' >= F.
template <typename Derived>
double editing_loss(const Eigen::MatrixBase<Derived>& joints, const EditSpec& spec) {
  double total = 0.0;
  for (int f = 0; f < spec.frames(); ++f)
    for (int j = 0; j < spec.n_joints(); ++j)
      if (spec.mask(j, f) != 0.0) total += (joints.template block<3, 1>(3 * j, f) - spec.targets.block<3, 1>(3 * j, f)).norm();
  return total;
}

}  // namespace mola::editing

#endif  // MOLA_EDITING_EDIT_SPEC_HPP
