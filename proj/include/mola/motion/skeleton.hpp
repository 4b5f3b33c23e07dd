// Copyright 2026 The mola Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MOLA_MOTION_SKELETON_HPP
#define MOLA_MOTION_SKELETON_HPP

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include <array>
#include <string>
#include <utility>
#include <vector>

namespace mola::motion {

/// Kinematic tree plus the tags the feature extractor and editors need.
struct SkeletonSpec {
  int n_joints = 0;
  std::vector<int> parents;                // parents[0] == -1 (pelvis)
  std::vector<Eigen::Vector3d> offsets;    // rest pose, meters, +Y up, +Z forward, +X left
  std::vector<std::string> names;
  int fps = 20;
  double rest_root_height = 0.9;

  /// Heel/toe joints in the order {left heel, left toe, right heel, right toe}.
  std::array<int, 4> foot_joints{-1, -1, -1, -1};
  std::vector<int> lower_body;

  /// Facing is estimated from (left, right) pairs and from (back, front) pairs.
  std::vector<std::pair<int, int>> facing_across;
  std::vector<std::pair<int, int>> facing_forward;

  void validate() const;
  bool has_foot_joints() const;
  int joint_index(const std::string& name) const;
};

/// Pelvis plus heel and toe of each foot. Used for fast tests.
SkeletonSpec toy_skeleton();

/// 22-joint humanoid with the usual SMPL-style joint order.
SkeletonSpec humanoid_skeleton();

/// Built-in skeleton for a joint count (5 or 22).
SkeletonSpec skeleton_for_joints(int n_joints);

/// {"n_joints", "names", "parents", "offsets", "fps", "rest_root_height", "foot_joints", "lower_body"}.
nlohmann::json to_json(const SkeletonSpec& skeleton);

}  // namespace mola::motion

#endif  // MOLA_MOTION_SKELETON_HPP
