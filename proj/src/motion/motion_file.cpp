// Copyright 2026 The mola Authors
// SPDX-License-Identifier: Apache-2.0

#include "mola/motion/motion_file.hpp"

#include "mola/error.hpp"
#include "mola/io.hpp"

#include <cmath>

namespace mola::motion {

namespace {

nlohmann::json rows_of(const Eigen::MatrixXd& channels_by_frames) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < channels_by_frames.cols(); ++i) {
    std::vector<double> row(channels_by_frames.col(i).data(),
                            channels_by_frames.col(i).data() + channels_by_frames.rows());
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd from_rows(const nlohmann::json& rows, Eigen::Index width, const char* field) {
  require(rows.is_array(), ErrorKind::invalid_input, std::string(field) + " must be an array of rows");
  Eigen::MatrixXd out(width, static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i];
    require(row.is_array() && static_cast<Eigen::Index>(row.size()) == width, ErrorKind::invalid_input,
            std::string(field) + " row " + std::to_string(i) + " has wrong width");
    for (std::size_t c = 0; c < row.size(); ++c) {
      require(row[c].is_number(), ErrorKind::invalid_input, std::string(field) + " entries must be numbers");
      out(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(i)) = row[c].get<double>();
    }
  }
  return out;
}

}  // namespace

void validate_motion_json(const nlohmann::json& j) {
  require(j.is_object(), ErrorKind::invalid_input, "motion file must be a JSON object");
  require(j.contains("version") && j["version"].is_number_integer(), ErrorKind::invalid_input,
          "motion file: missing integer 'version'");
  require(j["version"].get<int>() == kMotionFileVersion, ErrorKind::invalid_input,
          "motion file: unsupported version " + j["version"].dump());
  for (const char* key : {"fps", "n_joints", "length"})
    require(j.contains(key) && j[key].is_number_integer(), ErrorKind::invalid_input,
            std::string("motion file: missing integer '") + key + "'");
  require(j.contains("representation") && j["representation"].is_string(), ErrorKind::invalid_input,
          "motion file: missing 'representation'");
  const auto rep = representation_from_string(j["representation"].get<std::string>());
  const FeatureLayout layout{j["n_joints"].get<int>(), rep};
  require(j.contains("features"), ErrorKind::invalid_input, "motion file: missing 'features'");
  const Eigen::MatrixXd f = from_rows(j["features"], layout.dim(), "features");
  require(f.allFinite(), ErrorKind::invalid_input, "motion file: non-finite feature values");
  const int length = j["length"].get<int>();
  require(length > 0 && length <= f.cols(), ErrorKind::invalid_input, "motion file: length out of range");
  require(j.contains("caption") && (j["caption"].is_null() || j["caption"].is_string()),
          ErrorKind::invalid_input, "motion file: 'caption' must be string or null");
  if (j.contains("global_joints")) {
    const Eigen::MatrixXd g = from_rows(j["global_joints"], 3 * layout.n_joints, "global_joints");
    require(g.cols() == f.cols(), ErrorKind::invalid_input, "motion file: global_joints frame count mismatch");
  }
}

nlohmann::json to_json(const MotionFile& file) {
  const MotionSequence& m = file.motion;
  nlohmann::json j;
  j["version"] = kMotionFileVersion;
  j["fps"] = m.skeleton.fps;
  j["n_joints"] = m.skeleton.n_joints;
  j["length"] = m.length;
  j["representation"] = to_string(m.representation);
  j["features"] = rows_of(m.features);
  j["caption"] = m.caption ? nlohmann::json(*m.caption) : nlohmann::json(nullptr);
  if (file.global_joints) j["global_joints"] = rows_of(*file.global_joints);
  for (const auto& [key, value] : file.metadata.items())
    if (!j.contains(key)) j[key] = value;
  return j;
}

MotionFile motion_file_from_json(const nlohmann::json& j) {
  validate_motion_json(j);
  MotionFile file;
  MotionSequence& m = file.motion;
  m.skeleton = skeleton_for_joints(j["n_joints"].get<int>());
  m.skeleton.fps = j["fps"].get<int>();
  m.representation = representation_from_string(j["representation"].get<std::string>());
  m.features = from_rows(j["features"], m.layout().dim(), "features");
  m.length = j["length"].get<int>();
  if (j["caption"].is_string()) m.caption = j["caption"].get<std::string>();
  if (j.contains("global_joints"))
    file.global_joints = from_rows(j["global_joints"], 3 * m.skeleton.n_joints, "global_joints");
  for (const auto& [key, value] : j.items()) {
    if (key == "version" || key == "fps" || key == "n_joints" || key == "length" || key == "representation" ||
        key == "features" || key == "caption" || key == "global_joints")
      continue;
    file.metadata[key] = value;
  }
  return file;
}

void write_motion_file(const std::filesystem::path& path, const MotionFile& file) {
  atomic_write(path, to_json(file).dump() + "\n");
}

MotionFile read_motion_file(const std::filesystem::path& path) {
  return motion_file_from_json(read_json(path));
}

}  // namespace mola::motion
