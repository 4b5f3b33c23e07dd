// Copyright 2026 The mola Authors
// SPDX-License-Identifier: Apache-2.0

#include "mola/motion/skeleton.hpp"

#include "mola/error.hpp"

#include <algorithm>
#include <cmath>

namespace mola::motion {

void SkeletonSpec::validate() const {
  require(n_joints >= 2, ErrorKind::config, "skeleton needs at least 2 joints");
  require(static_cast<int>(parents.size()) == n_joints && static_cast<int>(offsets.size()) == n_joints,
          ErrorKind::config, "skeleton parents/offsets size mismatch");
  require(parents[0] == -1, ErrorKind::config, "joint 0 must be the root");
  require(fps > 0, ErrorKind::config, "fps must be positive");
  for (int j = 1; j < n_joints; ++j) {
    // Parents precede children, which also rules out cycles.
    require(parents[j] >= 0 && parents[j] < j, ErrorKind::config,
            "skeleton parent graph must be a tree ordered root-first");
    require(offsets[j].allFinite() && offsets[j].norm() > 0.0, ErrorKind::config,
            "bone offsets must be finite and non-zero");
  }
}

bool SkeletonSpec::has_foot_joints() const {
  return std::all_of(foot_joints.begin(), foot_joints.end(),
                     [&](int j) { return j >= 0 && j < n_joints; });
}

int SkeletonSpec::joint_index(const std::string& name) const {
  for (int j = 0; j < static_cast<int>(names.size()); ++j)
    if (names[j] == name) return j;
  return -1;
}

SkeletonSpec toy_skeleton() {
  SkeletonSpec s;
  s.n_joints = 5;
  s.names = {"pelvis", "left_heel", "left_toe", "right_heel", "right_toe"};
  s.parents = {-1, 0, 1, 0, 3};
  s.offsets = {
      {0.0, 0.0, 0.0},
      {0.10, -0.85, 0.0},
      {0.0, -0.05, 0.15},
      {-0.10, -0.85, 0.0},
      {0.0, -0.05, 0.15},
  };
  s.rest_root_height = 0.90;
  s.foot_joints = {1, 2, 3, 4};
  s.lower_body = {0, 1, 2, 3, 4};
  s.facing_forward = {{1, 2}, {3, 4}};
  s.validate();
  return s;
}

SkeletonSpec humanoid_skeleton() {
  SkeletonSpec s;
  s.n_joints = 22;
  s.names = {"pelvis",     "left_hip",       "right_hip",      "spine1",     "left_knee",
             "right_knee", "spine2",         "left_ankle",     "right_ankle", "spine3",
             "left_foot",  "right_foot",     "neck",           "left_collar", "right_collar",
             "head",       "left_shoulder",  "right_shoulder", "left_elbow", "right_elbow",
             "left_wrist", "right_wrist"};
  s.parents = {-1, 0, 0, 0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 9, 9, 12, 13, 14, 16, 17, 18, 19};
  s.offsets = {
      {0.0, 0.0, 0.0},     {0.09, -0.08, 0.0},  {-0.09, -0.08, 0.0}, {0.0, 0.12, 0.0},
      {0.0, -0.40, 0.0},   {0.0, -0.40, 0.0},   {0.0, 0.13, 0.0},    {0.0, -0.40, 0.0},
      {0.0, -0.40, 0.0},   {0.0, 0.05, 0.0},    {0.0, -0.05, 0.13},  {0.0, -0.05, 0.13},
      {0.0, 0.20, 0.0},    {0.08, 0.12, 0.0},   {-0.08, 0.12, 0.0},  {0.0, 0.12, 0.03},
      {0.10, 0.03, 0.0},   {-0.10, 0.03, 0.0},  {0.26, 0.0, 0.0},    {-0.26, 0.0, 0.0},
      {0.25, 0.0, 0.0},    {-0.25, 0.0, 0.0},
  };
  s.rest_root_height = 0.93;
  s.foot_joints = {7, 10, 8, 11};
  s.lower_body = {0, 1, 2, 4, 5, 7, 8, 10, 11};
  s.facing_across = {{1, 2}, {16, 17}};
  s.validate();
  return s;
}

SkeletonSpec skeleton_for_joints(int n_joints) {
  if (n_joints == 5) return toy_skeleton();
  if (n_joints == 22) return humanoid_skeleton();
  throw ConfigError("skeleton", "no built-in skeleton with " + std::to_string(n_joints) + " joints");
}

nlohmann::json to_json(const SkeletonSpec& skeleton) {
  nlohmann::json offsets = nlohmann::json::array();
  for (const auto& o : skeleton.offsets) offsets.push_back({o.x(), o.y(), o.z()});
  return {{"n_joints", skeleton.n_joints},
          {"names", skeleton.names},
          {"parents", skeleton.parents},
          {"offsets", offsets},
          {"fps", skeleton.fps},
          {"rest_root_height", skeleton.rest_root_height},
          {"foot_joints", skeleton.foot_joints},
          {"lower_body", skeleton.lower_body}};
}

}  // namespace mola::motion
