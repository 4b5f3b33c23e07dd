// Copyright 2026 The mola Authors
// SPDX-License-Identifier: Apache-2.0

#include "mola/motion/features.hpp"

#include "mola/error.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <numbers>

namespace mola::motion {

const char* to_string(Representation rep) {
  return rep == Representation::full ? "full" : "encoder";
}

Representation representation_from_string(const std::string& name) {
  if (name == "full") return Representation::full;
  if (name == "encoder") return Representation::encoder;
  throw Error(ErrorKind::invalid_input, "unknown representation '" + name + "'");
}

namespace {

double wrap_angle(double a) {
  while (a > std::numbers::pi) a -= 2.0 * std::numbers::pi;
  while (a <= -std::numbers::pi) a += 2.0 * std::numbers::pi;
  return a;
}

Eigen::Vector3d joint_at(const JointTrack& joints, int j, Eigen::Index frame) {
  return joints.block<3, 1>(3 * j, frame);
}

}  // namespace

Eigen::VectorXd estimate_headings(const JointTrack& joints, const SkeletonSpec& skeleton) {
  const Eigen::Index frames = joints.cols();
  Eigen::VectorXd headings(frames);
  const Eigen::Vector3d up = Eigen::Vector3d::UnitY();
  double previous = 0.0;
  for (Eigen::Index i = 0; i < frames; ++i) {
    Eigen::Vector3d forward = Eigen::Vector3d::Zero();
    for (auto [left, right] : skeleton.facing_across)
      forward += (joint_at(joints, left, i) - joint_at(joints, right, i)).cross(up);
    for (auto [back, front] : skeleton.facing_forward)
      forward += joint_at(joints, front, i) - joint_at(joints, back, i);
    forward.y() = 0.0;
    double h = forward.squaredNorm() > 1e-16 ? std::atan2(forward.x(), forward.z()) : previous;
    if (i > 0) h = previous + wrap_angle(h - previous);
    headings(i) = h;
    previous = h;
  }
  return headings;
}

Eigen::MatrixXd compute_foot_contacts(const JointTrack& joints, const SkeletonSpec& skeleton,
                                      double velocity_threshold) {
  if (!skeleton.has_foot_joints())
    throw ConfigError("skeleton.foot_joints", "skeleton does not declare four foot joints");
  const Eigen::Index frames = joints.cols();
  Eigen::MatrixXd contacts(4, frames);
  for (int k = 0; k < 4; ++k) {
    const int j = skeleton.foot_joints[static_cast<std::size_t>(k)];
    for (Eigen::Index i = 0; i < frames; ++i) {
      const Eigen::Index a = std::min(i, frames - 2);
      const double speed = (joint_at(joints, j, a + 1) - joint_at(joints, j, a)).norm();
      contacts(k, i) = speed < velocity_threshold ? 1.0 : 0.0;
    }
  }
  return contacts;
}

MotionSequence build_full_pose_features(const JointTrack& joints, const SkeletonSpec& skeleton,
                                        const FeatureOptions& options) {
  const int nj = skeleton.n_joints;
  require(joints.rows() == 3 * nj, ErrorKind::shape_mismatch, "joint track rows must be 3 * n_joints");
  require(joints.cols() >= 2, ErrorKind::invalid_input, "feature extraction needs at least 2 frames");
  require(joints.allFinite(), ErrorKind::invalid_input, "joint positions must be finite");

  const FeatureLayout layout{nj, Representation::full};
  const Eigen::Index frames = joints.cols();
  Eigen::MatrixXd f = Eigen::MatrixXd::Zero(layout.dim(), frames);

  Eigen::VectorXd heading = estimate_headings(joints, skeleton);
  heading.array() -= heading(0);

  const Eigen::MatrixXd contacts = compute_foot_contacts(joints, skeleton, options.contact_velocity_threshold);

  for (Eigen::Index i = 0; i < frames; ++i) {
    // Differences use the pair (a, a+1); the last frame reuses the previous pair.
    const Eigen::Index a = std::min(i, frames - 2);
    const Eigen::Matrix3d to_local = rotation_y(heading(i)).transpose();
    const Eigen::Matrix3d to_local_a = rotation_y(heading(a)).transpose();
    const Eigen::Vector3d root = joint_at(joints, 0, i);

    f(FeatureLayout::kAngVel, i) = heading(a + 1) - heading(a);
    const Eigen::Vector3d root_step = to_local_a * (joint_at(joints, 0, a + 1) - joint_at(joints, 0, a));
    f(FeatureLayout::kVelX, i) = root_step.x();
    f(FeatureLayout::kVelZ, i) = root_step.z();
    f(FeatureLayout::kRootY, i) = root.y();

    const Eigen::Vector3d ground_root(root.x(), 0.0, root.z());
    for (int j = 0; j < nj; ++j) {
      f.block<3, 1>(FeatureLayout::kLocalPos + 3 * j, i) = to_local * (joint_at(joints, j, i) - ground_root);

      Eigen::Matrix3d rot = Eigen::Matrix3d::Identity();
      if (j > 0) {
        const Eigen::Vector3d bone = to_local * (joint_at(joints, j, i) - joint_at(joints, skeleton.parents[j], i));
        if (bone.norm() > 1e-12)
          rot = Eigen::Quaterniond::FromTwoVectors(skeleton.offsets[j], bone).toRotationMatrix();
      }
      f.block<6, 1>(layout.rot6d() + 6 * j, i) = rot6d(rot);

      f.block<3, 1>(layout.joint_vel() + 3 * j, i) =
          to_local_a * (joint_at(joints, j, a + 1) - joint_at(joints, j, a));
    }
    f.block<4, 1>(layout.contacts(), i) = contacts.col(i);
    f(layout.activation(), i) = 1.0;
  }

  MotionSequence out;
  out.features = std::move(f);
  out.length = static_cast<int>(frames);
  out.representation = Representation::full;
  out.skeleton = skeleton;
  return out;
}

MotionSequence to_encoder_features(const MotionSequence& full) {
  require(full.representation == Representation::full, ErrorKind::invalid_input,
          "to_encoder_features expects the full representation");
  const FeatureLayout in = full.layout();
  const FeatureLayout out_layout{in.n_joints, Representation::encoder};
  MotionSequence out = full;
  out.representation = Representation::encoder;
  out.features.resize(out_layout.dim(), full.features.cols());
  out.features.topRows(out_layout.activation()) = full.features.topRows(out_layout.activation());
  out.features.row(out_layout.activation()) = full.features.row(in.activation());
  return out;
}

MotionSequence pad_and_activate(const MotionSequence& motion, int target_frames) {
  if (motion.length > target_frames)
    throw Error(ErrorKind::invalid_input, "motion length " + std::to_string(motion.length) +
                                              " exceeds target " + std::to_string(target_frames) +
                                              " (would truncate)");
  MotionSequence out = motion;
  const int act = motion.layout().activation();
  out.features = Eigen::MatrixXd::Zero(motion.features.rows(), target_frames);
  const int keep = std::min(motion.length, motion.frames());
  out.features.leftCols(keep) = motion.features.leftCols(keep);
  out.features.row(act).setZero();
  out.features.row(act).head(motion.length).setOnes();
  return out;
}

int activation_length(const Eigen::Ref<const Eigen::RowVectorXd>& activation, double delta) {
  const auto frames = static_cast<int>(activation.size());
  for (int i = 0; i < frames; ++i)
    if (activation(i) < delta) return std::max(i, 1);
  return frames;
}

MotionSequence clip_by_activation(const MotionSequence& decoded, double delta) {
  const int length = activation_length(decoded.activation(), delta);
  MotionSequence out = decoded;
  out.features = decoded.features.leftCols(length);
  out.length = length;
  return out;
}

JointTrack recover_global_joints(const MotionSequence& motion) {
  return recover_global_joints(motion.features, motion.skeleton.n_joints);
}

}  // namespace mola::motion
