// Copyright 2026 The mola Authors
// SPDX-License-Identifier: Apache-2.0

#include "mola/editing/edit_spec.hpp"

#include "mola/error.hpp"

#include <cmath>

namespace mola::editing {

const char* to_string(Task task) {
  switch (task) {
    case Task::path_following: return "path_following";
    case Task::in_betweening: return "in_betweening";
    case Task::upper_body: return "upper_body";
  }
  return "?";
}

Task task_from_string(const std::string& name) {
  if (name == "path_following") return Task::path_following;
  if (name == "in_betweening") return Task::in_betweening;
  if (name == "upper_body") return Task::upper_body;
  throw Error(ErrorKind::invalid_input, "unknown edit task '" + name + "'");
}

void EditSpec::validate() const {
  require(mask.rows() >= 1 && mask.cols() >= 1, ErrorKind::invalid_input, "edit spec: empty mask");
  require(targets.rows() == 3 * mask.rows() && targets.cols() == mask.cols(), ErrorKind::shape_mismatch,
          "edit spec: targets must be 3J x F for a J x F mask");
  for (Eigen::Index f = 0; f < mask.cols(); ++f)
    for (Eigen::Index j = 0; j < mask.rows(); ++j) {
      const double m = mask(j, f);
      require(m == 0.0 || m == 1.0, ErrorKind::invalid_input, "edit spec: mask entries must be 0 or 1");
      if (m == 1.0)
        require(targets.block<3, 1>(3 * j, f).allFinite(), ErrorKind::invalid_input,
                "edit spec: non-finite target at joint " + std::to_string(j) + ", frame " + std::to_string(f));
    }
  require(mask.sum() > 0, ErrorKind::invalid_input, "edit spec: mask has no set bits");
}

nlohmann::json to_json(const EditSpec& spec) {
  nlohmann::json mask = nlohmann::json::array();
  nlohmann::json targets = nlohmann::json::array();
  for (int j = 0; j < spec.n_joints(); ++j) {
    nlohmann::json mrow = nlohmann::json::array();
    nlohmann::json trow = nlohmann::json::array();
    for (int f = 0; f < spec.frames(); ++f) {
      const bool on = spec.mask(j, f) != 0.0;
      mrow.push_back(on ? 1 : 0);
      if (on)
        trow.push_back({spec.targets(3 * j, f), spec.targets(3 * j + 1, f), spec.targets(3 * j + 2, f)});
      else
        trow.push_back(nullptr);
    }
    mask.push_back(std::move(mrow));
    targets.push_back(std::move(trow));
  }
  nlohmann::json out = {{"task", to_string(spec.task)}, {"text", spec.text}, {"mask", mask}, {"targets", targets}};
  if (spec.guidance) out["guidance"] = *spec.guidance;
  return out;
}

EditSpec edit_spec_from_json(const nlohmann::json& j) {
  require(j.is_object(), ErrorKind::invalid_input, "edit spec must be a JSON object");
  for (const char* key : {"task", "text", "mask", "targets"})
    require(j.contains(key), ErrorKind::invalid_input, std::string("edit spec: missing '") + key + "'");
  require(j["task"].is_string() && j["text"].is_string(), ErrorKind::invalid_input,
          "edit spec: task and text must be strings");
  EditSpec spec;
  spec.task = task_from_string(j["task"].get<std::string>());
  spec.text = j["text"].get<std::string>();
  const auto& mask = j["mask"];
  const auto& targets = j["targets"];
  require(mask.is_array() && !mask.empty() && mask[0].is_array(), ErrorKind::invalid_input,
          "edit spec: mask must be a non-empty array of arrays");
  const auto joints = static_cast<Eigen::Index>(mask.size());
  const auto frames = static_cast<Eigen::Index>(mask[0].size());
  require(frames >= 1, ErrorKind::invalid_input, "edit spec: mask has no frames");
  require(targets.is_array() && static_cast<Eigen::Index>(targets.size()) == joints, ErrorKind::shape_mismatch,
          "edit spec: targets must have one row per mask row");
  spec.mask = Eigen::MatrixXd::Zero(joints, frames);
  spec.targets = Eigen::MatrixXd::Zero(3 * joints, frames);
  for (Eigen::Index jj = 0; jj < joints; ++jj) {
    const auto& mrow = mask[static_cast<std::size_t>(jj)];
    const auto& trow = targets[static_cast<std::size_t>(jj)];
    require(mrow.is_array() && static_cast<Eigen::Index>(mrow.size()) == frames, ErrorKind::shape_mismatch,
            "edit spec: ragged mask row " + std::to_string(jj));
    require(trow.is_array() && static_cast<Eigen::Index>(trow.size()) == frames, ErrorKind::shape_mismatch,
            "edit spec: targets row " + std::to_string(jj) + " does not match the mask length");
    for (Eigen::Index f = 0; f < frames; ++f) {
      const auto& m = mrow[static_cast<std::size_t>(f)];
      require(m.is_number(), ErrorKind::invalid_input, "edit spec: mask entries must be numbers");
      spec.mask(jj, f) = m.get<double>();
      const auto& t = trow[static_cast<std::size_t>(f)];
      if (t.is_null()) continue;
      require(t.is_array() && t.size() == 3, ErrorKind::shape_mismatch,
              "edit spec: target entries must be [x, y, z] or null");
      for (int c = 0; c < 3; ++c) {
        require(t[static_cast<std::size_t>(c)].is_number(), ErrorKind::invalid_input,
                "edit spec: target coordinates must be numbers");
        spec.targets(3 * jj + c, f) = t[static_cast<std::size_t>(c)].get<double>();
      }
    }
  }
  if (j.contains("guidance")) spec.guidance = j["guidance"];
  for (Eigen::Index jj = 0; jj < joints; ++jj)
    for (Eigen::Index f = 0; f < frames; ++f)
      if (spec.mask(jj, f) == 1.0)
        require(!targets[static_cast<std::size_t>(jj)][static_cast<std::size_t>(f)].is_null(),
                ErrorKind::shape_mismatch, "edit spec: masked entry without a target");
  spec.validate();
  return spec;
}

Eigen::MatrixXd resample_polyline(const Eigen::MatrixXd& points, int frames) {
  require(points.rows() >= 2 && points.cols() == 2, ErrorKind::invalid_input,
          "path needs at least two 2D points");
  require(frames >= 2, ErrorKind::invalid_input, "resample_polyline: need at least two frames");
  require(points.allFinite(), ErrorKind::invalid_input, "path has non-finite points");
  const Eigen::Index n = points.rows();
  Eigen::VectorXd cumulative(n);
  cumulative(0) = 0.0;
  for (Eigen::Index i = 1; i < n; ++i) cumulative(i) = cumulative(i - 1) + (points.row(i) - points.row(i - 1)).norm();
  const double total = cumulative(n - 1);
  Eigen::MatrixXd out(frames, 2);
  if (total == 0.0) {
    out.rowwise() = points.row(0);
    return out;
  }
  Eigen::Index seg = 1;
  for (int f = 0; f < frames; ++f) {
    const double s = total * f / (frames - 1);
    while (seg < n - 1 && cumulative(seg) < s) ++seg;
    const double len = cumulative(seg) - cumulative(seg - 1);
    const double u = len > 0 ? std::clamp((s - cumulative(seg - 1)) / len, 0.0, 1.0) : 0.0;
    out.row(f) = (1 - u) * points.row(seg - 1) + u * points.row(seg);
  }
  return out;
}

EditSpec build_path_following_spec(const Eigen::MatrixXd& path_xz, const std::string& text,
                                   const motion::SkeletonSpec& skeleton, std::optional<double> pelvis_height) {
  require(path_xz.rows() >= 2 && path_xz.cols() == 2, ErrorKind::invalid_input,
          "path following needs at least two (x, z) points");
  require(path_xz.allFinite(), ErrorKind::invalid_input, "path has non-finite points");
  const auto frames = path_xz.rows();
  EditSpec spec;
  spec.task = Task::path_following;
  spec.text = text;
  spec.mask = Eigen::MatrixXd::Zero(skeleton.n_joints, frames);
  spec.targets = Eigen::MatrixXd::Zero(3 * skeleton.n_joints, frames);
  spec.mask.row(0).setOnes();
  spec.targets.row(0) = path_xz.col(0).transpose();
  spec.targets.row(1).setConstant(pelvis_height.value_or(skeleton.rest_root_height));
  spec.targets.row(2) = path_xz.col(1).transpose();
  return spec;
}

EditSpec build_inbetweening_spec(const Eigen::MatrixXd& start_pose, const Eigen::MatrixXd& end_pose, int n_ctx,
                                 int frames, const std::string& text, const motion::SkeletonSpec& skeleton) {
  const int j = skeleton.n_joints;
  require(n_ctx >= 1 && 2 * n_ctx < frames, ErrorKind::invalid_input,
          "in-betweening needs 1 <= n_ctx and 2 n_ctx < frames");
  auto check = [&](const Eigen::MatrixXd& pose, const char* name) {
    require(pose.rows() == 3 * j && (pose.cols() == 1 || pose.cols() == n_ctx), ErrorKind::shape_mismatch,
            std::string(name) + " pose must be 3J x 1 or 3J x n_ctx");
  };
  check(start_pose, "start");
  check(end_pose, "end");
  EditSpec spec;
  spec.task = Task::in_betweening;
  spec.text = text;
  spec.mask = Eigen::MatrixXd::Zero(j, frames);
  spec.targets = Eigen::MatrixXd::Zero(3 * j, frames);
  for (int i = 0; i < n_ctx; ++i) {
    spec.mask.col(i).setOnes();
    spec.mask.col(frames - n_ctx + i).setOnes();
    spec.targets.col(i) = start_pose.col(start_pose.cols() == 1 ? 0 : i);
    spec.targets.col(frames - n_ctx + i) = end_pose.col(end_pose.cols() == 1 ? 0 : i);
  }
  return spec;
}

EditSpec build_upper_body_spec(const motion::JointTrack& lower_body_motion, const std::string& text,
                               const motion::SkeletonSpec& skeleton) {
  require(!skeleton.lower_body.empty(), ErrorKind::invalid_input, "skeleton has no lower-body tags");
  require(lower_body_motion.rows() == 3 * skeleton.n_joints && lower_body_motion.cols() >= 1,
          ErrorKind::shape_mismatch, "lower-body motion must be 3J x F");
  EditSpec spec;
  spec.task = Task::upper_body;
  spec.text = text;
  const auto frames = lower_body_motion.cols();
  spec.mask = Eigen::MatrixXd::Zero(skeleton.n_joints, frames);
  spec.targets = Eigen::MatrixXd::Zero(3 * skeleton.n_joints, frames);
  for (int joint : skeleton.lower_body) {
    spec.mask.row(joint).setOnes();
    spec.targets.middleRows(3 * joint, 3) = lower_body_motion.middleRows(3 * joint, 3);
  }
  return spec;
}

}  // namespace mola::editing
