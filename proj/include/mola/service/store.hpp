// Copyright 2026 The mola Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MOLA_SERVICE_STORE_HPP
#define MOLA_SERVICE_STORE_HPP

#include "mola/service/job.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace mola::service {

/// On-disk workspace:
///
///   root/index.json
///   root/checkpoints/<name>/   LDM checkpoint directories
///   root/motions/<id>.json     motion files
///   root/jobs/<id>.json        job records
///   root/datasets/
///
/// Every file is written with write-then-rename, and the index is rewritten
/// after the file it refers to. Opening a store reconciles the index with the
/// files, so a crash between the two writes loses nothing. One writer at a
/// time; readers of motion files never take the lock.
class WorkspaceStore {
 public:
  explicit WorkspaceStore(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path checkpoint_dir(const std::string& name) const;
  std::filesystem::path motion_path(const std::string& id) const;
  std::filesystem::path job_path(const std::string& id) const;
  std::filesystem::path datasets_dir() const { return root_ / "datasets"; }

  void put_job(const Job& job);
  void put_motion(const std::string& id, const std::string& contents);
  /// Records a checkpoint directory already written under checkpoints/.
  void register_checkpoint(const std::string& name);
  void set_active_checkpoint(const std::optional<std::string>& name);
  /// Returns the job already bound to `key`, or binds it to `job_id`.
  std::string bind_idempotency_key(const std::string& key, const std::string& job_id);

  Job load_job(const std::string& id) const;
  std::string read_motion(const std::string& id) const;
  std::vector<std::string> job_ids() const;
  std::vector<std::string> checkpoints() const;
  std::optional<std::string> active_checkpoint() const;
  std::optional<std::string> idempotent_job(const std::string& key) const;
  nlohmann::json index() const;

  /// Differences between index.json and the files on disk; empty when consistent.
  std::vector<std::string> check_consistency() const;

 private:
  void reconcile();
  void commit_index();
  nlohmann::json index_json() const;

  std::filesystem::path root_;
  mutable std::mutex mutex_;
  std::set<std::string> jobs_;
  std::set<std::string> motions_;
  std::set<std::string> checkpoints_;
  std::map<std::string, std::string> idempotency_;
  std::optional<std::string> active_;
};

/// Checkpoint names: 1-64 characters from [A-Za-z0-9._-], not starting with '.'.
bool is_valid_checkpoint_name(const std::string& name);

}  // namespace mola::service

#endif  // MOLA_SERVICE_STORE_HPP
