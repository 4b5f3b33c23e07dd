// Copyright 2026 The mola Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MOLA_MOTION_FEATURES_HPP
#define MOLA_MOTION_FEATURES_HPP

#include "mola/motion/skeleton.hpp"

#include <Eigen/Core>

#include <cmath>
#include <optional>
#include <string>

namespace mola::motion {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Global joint positions, one column per frame: rows 3j..3j+2 hold joint j.
using JointTrack = Eigen::MatrixXd;

enum class Representation { full, encoder };

const char* to_string(Representation rep);
Representation representation_from_string(const std::string& name);

/// Channel layout of a pose frame.
///
///   [ang_vel_y, vel_x, vel_z, root_y, local_pos (3J), rot6d (6J),
///    joint_vel (3J, full only), contacts (4, full only), activation]
///
/// local_pos and rot6d carry an entry for every joint including the root, so
/// the encoder frame has 4 + 9J + 1 channels and the full frame 4 + 12J + 4 + 1.
struct FeatureLayout {
  int n_joints = 0;
  Representation representation = Representation::encoder;

  static constexpr int kAngVel = 0;
  static constexpr int kVelX = 1;
  static constexpr int kVelZ = 2;
  static constexpr int kRootY = 3;
  static constexpr int kLocalPos = 4;

  int rot6d() const { return kLocalPos + 3 * n_joints; }
  int joint_vel() const { return kLocalPos + 9 * n_joints; }
  int contacts() const { return kLocalPos + 12 * n_joints; }
  int activation() const { return dim() - 1; }
  int dim() const {
    return representation == Representation::full ? 4 + 12 * n_joints + 4 + 1 : 4 + 9 * n_joints + 1;
  }
};

struct MotionSequence {
  Eigen::MatrixXd features;  // channels x frames
  int length = 0;            // active frames
  Representation representation = Representation::encoder;
  SkeletonSpec skeleton;
  std::optional<std::string> caption;

  FeatureLayout layout() const { return {skeleton.n_joints, representation}; }
  int frames() const { return static_cast<int>(features.cols()); }
  Eigen::RowVectorXd activation() const { return features.row(layout().activation()); }
};

/// Rotation about +Y, mapping heading-frame vectors to world vectors.
template <typename Scalar>
Eigen::Matrix<Scalar, 3, 3> rotation_y(Scalar theta) {
  using std::cos;
  using std::sin;
  const Scalar c = cos(theta), s = sin(theta);
  Eigen::Matrix<Scalar, 3, 3> r;
  r << c, Scalar(0), s, Scalar(0), Scalar(1), Scalar(0), -s, Scalar(0), c;
  return r;
}

/// First two columns of a rotation matrix, stacked.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, 6, 1> rot6d(const Eigen::MatrixBase<Derived>& rotation) {
  Eigen::Matrix<typename Derived::Scalar, 6, 1> out;
  out << rotation.col(0), rotation.col(1);
  return out;
}

/// R(.): velocity/local-position features -> global joint positions.
///
/// Heading and root XZ start at zero and are integrated with a cumulative
/// (explicit Euler) sum, so frame i uses the velocities of frames < i.
/// Works on either representation since only the shared prefix is read.
template <typename Derived>
MatrixX<typename Derived::Scalar> recover_global_joints(const Eigen::MatrixBase<Derived>& features,
                                                        int n_joints) {
  using Scalar = typename Derived::Scalar;
  using std::cos;
  using std::sin;
  const Eigen::Index frames = features.cols();
  MatrixX<Scalar> joints(3 * n_joints, frames);
  Scalar heading(0), root_x(0), root_z(0);
  for (Eigen::Index i = 0; i < frames; ++i) {
    const Scalar c = cos(heading), s = sin(heading);
    joints(0, i) = root_x;
    joints(1, i) = features(FeatureLayout::kRootY, i);
    joints(2, i) = root_z;
    for (int j = 1; j < n_joints; ++j) {
      const Eigen::Index q = FeatureLayout::kLocalPos + 3 * j;
      const Scalar qx = features(q, i), qy = features(q + 1, i), qz = features(q + 2, i);
      joints(3 * j, i) = root_x + c * qx + s * qz;
      joints(3 * j + 1, i) = qy;
      joints(3 * j + 2, i) = root_z - s * qx + c * qz;
    }
    const Scalar vx = features(FeatureLayout::kVelX, i), vz = features(FeatureLayout::kVelZ, i);
    root_x += c * vx + s * vz;
    root_z += -s * vx + c * vz;
    heading += features(FeatureLayout::kAngVel, i);
  }
  return joints;
}

/// Vector-Jacobian product of recover_global_joints.
///
/// Returns d<grad_joints, R(features)>/d features with the same shape as
/// features; channels R(.) does not read receive zero.
template <typename DerivedF, typename DerivedG>
MatrixX<typename DerivedF::Scalar> recover_global_joints_vjp(const Eigen::MatrixBase<DerivedF>& features,
                                                             int n_joints,
                                                             const Eigen::MatrixBase<DerivedG>& grad_joints) {
  using Scalar = typename DerivedF::Scalar;
  using std::cos;
  using std::sin;
  const Eigen::Index frames = features.cols();
  MatrixX<Scalar> grad = MatrixX<Scalar>::Zero(features.rows(), frames);

  // Forward pass for the per-frame headings.
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> heading(frames);
  Scalar acc(0);
  for (Eigen::Index i = 0; i < frames; ++i) {
    heading(i) = acc;
    acc += features(FeatureLayout::kAngVel, i);
  }

  Scalar g_heading_next(0), g_x_next(0), g_z_next(0);
  for (Eigen::Index i = frames - 1; i >= 0; --i) {
    const Scalar c = cos(heading(i)), s = sin(heading(i));
    const Scalar vx = features(FeatureLayout::kVelX, i), vz = features(FeatureLayout::kVelZ, i);

    // Frame i's velocities only move frames > i.
    grad(FeatureLayout::kAngVel, i) = g_heading_next;
    grad(FeatureLayout::kVelX, i) = c * g_x_next - s * g_z_next;
    grad(FeatureLayout::kVelZ, i) = s * g_x_next + c * g_z_next;

    Scalar g_heading = g_heading_next + g_x_next * (-s * vx + c * vz) + g_z_next * (-c * vx - s * vz);
    Scalar g_x = g_x_next + grad_joints(0, i);
    Scalar g_z = g_z_next + grad_joints(2, i);
    grad(FeatureLayout::kRootY, i) = grad_joints(1, i);

    for (int j = 1; j < n_joints; ++j) {
      const Eigen::Index q = FeatureLayout::kLocalPos + 3 * j;
      const Scalar gx = grad_joints(3 * j, i), gy = grad_joints(3 * j + 1, i), gz = grad_joints(3 * j + 2, i);
      const Scalar qx = features(q, i), qz = features(q + 2, i);
      grad(q, i) = c * gx - s * gz;
      grad(q + 1, i) = gy;
      grad(q + 2, i) = s * gx + c * gz;
      g_x += gx;
      g_z += gz;
      g_heading += gx * (-s * qx + c * qz) + gz * (-c * qx - s * qz);
    }
    g_heading_next = g_heading;
    g_x_next = g_x;
    g_z_next = g_z;
  }
  return grad;
}

struct FeatureOptions {
  double contact_velocity_threshold = 0.002;  // m/frame
};

/// Pose features from global joints. Velocities are forward
/// differences; the last frame repeats the previous one. The returned
/// sequence has activation 1 everywhere.
MotionSequence build_full_pose_features(const JointTrack& joints, const SkeletonSpec& skeleton,
                                        const FeatureOptions& options = {});

/// Drops joint velocities and contacts.
MotionSequence to_encoder_features(const MotionSequence& full);

/// Zero-pads to target_frames; activation is 1 on active frames and 0 on padding.
MotionSequence pad_and_activate(const MotionSequence& motion, int target_frames);

/// Truncates at the first frame whose activation falls below delta.
/// The result keeps at least one frame.
MotionSequence clip_by_activation(const MotionSequence& decoded, double delta);

/// Index of the first frame with activation < delta, clamped to [1, frames].
int activation_length(const Eigen::Ref<const Eigen::RowVectorXd>& activation, double delta);

JointTrack recover_global_joints(const MotionSequence& motion);

/// Per-frame contacts (rows: left heel, left toe, right heel, right toe).
Eigen::MatrixXd compute_foot_contacts(const JointTrack& joints, const SkeletonSpec& skeleton,
                                      double velocity_threshold);

/// World heading of each frame from the skeleton's facing pairs, unwrapped.
Eigen::VectorXd estimate_headings(const JointTrack& joints, const SkeletonSpec& skeleton);

}  // namespace mola::motion

#endif  // MOLA_MOTION_FEATURES_HPP
