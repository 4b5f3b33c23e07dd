// Copyright 2026 The mola Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MOLA_MOTION_MOTION_FILE_HPP
#define MOLA_MOTION_MOTION_FILE_HPP

#include "mola/motion/features.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>

namespace mola::motion {

inline constexpr int kMotionFileVersion = 1;

/// In-memory form of a ".motion.json" file.
///
/// Features are stored with frames as rows. Keys outside the core schema
/// (e.g. "generator", "edit") travel in `metadata` and are written back
/// verbatim after the core keys.
struct MotionFile {
  MotionSequence motion;
  std::optional<JointTrack> global_joints;
  nlohmann::json metadata = nlohmann::json::object();
};

nlohmann::json to_json(const MotionFile& file);
MotionFile motion_file_from_json(const nlohmann::json& j);

void write_motion_file(const std::filesystem::path& path, const MotionFile& file);
MotionFile read_motion_file(const std::filesystem::path& path);

/// Throws unless `j` satisfies the motion file schema.
void validate_motion_json(const nlohmann::json& j);

}  // namespace mola::motion

#endif  // MOLA_MOTION_MOTION_FILE_HPP
