// Copyright 2026 The mola Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MOLA_DATA_SYNTHETIC_HPP
#define MOLA_DATA_SYNTHETIC_HPP

#include "mola/motion/features.hpp"
#include "mola/motion/normalize.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace mola::data {

enum class Action { walk, run, turn_left, turn_right, circle, wave, squat, walk_then_stop };
enum class Speed { slow, normal, fast };

inline constexpr std::array<Action, 8> kAllActions{Action::walk,   Action::run,  Action::turn_left,
                                                   Action::turn_right, Action::circle, Action::wave,
                                                   Action::squat,  Action::walk_then_stop};
inline constexpr std::array<Speed, 3> kAllSpeeds{Speed::slow, Speed::normal, Speed::fast};

inline constexpr int kMinFrames = 24;
inline constexpr int kMaxFrames = 196;
inline constexpr int kCaptionVariants = 16;

const char* to_string(Action action);
const char* to_string(Speed speed);
Action action_from_string(const std::string& name);
Speed speed_from_string(const std::string& name);

struct MotionParams {
  Action action = Action::walk;
  Speed speed = Speed::normal;
  int length_frames = 96;
  std::uint64_t seed = 0;
  int caption_variant = 0;  // 0 is the canonical wording

  void validate() const;
};

struct GeneratedMotion {
  motion::JointTrack joints;  // 3J x L
  Eigen::MatrixXd stance;     // 4 x L, generator ground truth, foot_joints order
  Eigen::VectorXd heading;    // root heading per frame (rad, +Y)
  double circle_radius = 0.0; // only for Action::circle
};

/// Deterministic given (params, skeleton). Root starts at the XZ origin facing +Z.
GeneratedMotion generate_motion(const MotionParams& params, const motion::SkeletonSpec& skeleton);

/// Templated caption, e.g. "a person walks forward quickly".
std::string caption_for(const MotionParams& params);

/// Every caption the generator can emit.
std::vector<std::string> all_captions();

/// Sorted token set over all_captions().
std::vector<std::string> caption_vocabulary();

struct DatasetItem {
  std::string id;
  MotionParams params;
  std::string caption;
  motion::MotionSequence motion;  // full representation, activation 1, unpadded
  motion::JointTrack joints;
};

struct DatasetSplit {
  motion::SkeletonSpec skeleton;
  std::uint64_t seed = 0;
  int max_frames = kMaxFrames;
  std::vector<DatasetItem> train, val, test;
  motion::NormalizationStats stats;  // full representation, train split only

  /// Stats for the requested representation (a projection of the full stats).
  motion::NormalizationStats stats_for(motion::Representation rep) const;
};

/// n >= 40 motions split 80/5/15, stratified by length.
DatasetSplit build_dataset(int n, std::uint64_t seed, const motion::SkeletonSpec& skeleton);

/// Length prior: two truncated normals (60, 15) and (150, 20) on [24, 196];
/// the mixture weight depends on the action (0.5 overall).
int sample_length(Action action, std::uint64_t seed);

/// Directory layout: manifest.json, stats.json, motions/<id>.motion.json.
void save_dataset(const DatasetSplit& dataset, const std::filesystem::path& dir);
DatasetSplit load_dataset(const std::filesystem::path& dir);

}  // namespace mola::data

#endif  // MOLA_DATA_SYNTHETIC_HPP
