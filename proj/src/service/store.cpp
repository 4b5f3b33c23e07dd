// Copyright 2026 The mola Authors
// SPDX-License-Identifier: Apache-2.0

#include "mola/service/store.hpp"

#include "mola/error.hpp"
#include "mola/io.hpp"
#include "mola/service/ulid.hpp"

#include <algorithm>

namespace mola::service {
namespace fs = std::filesystem;

namespace {

std::set<std::string> ulid_stems(const fs::path& dir) {
  std::set<std::string> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".json") continue;
    const auto stem = entry.path().stem().string();
    if (is_ulid(stem)) out.insert(stem);
  }
  return out;
}

std::set<std::string> checkpoint_dirs(const fs::path& dir) {
  std::set<std::string> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (entry.is_directory() && is_valid_checkpoint_name(name) && fs::exists(entry.path() / "config.json"))
      out.insert(name);
  }
  return out;
}

void require_ulid(const std::string& id) {
  require(is_ulid(id), ErrorKind::not_found, "unknown id: " + id);
}

}  // namespace

bool is_valid_checkpoint_name(const std::string& name) {
  if (name.empty() || name.size() > 64 || name[0] == '.') return false;
  return std::all_of(name.begin(), name.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '.' || c == '_' ||
           c == '-';
  });
}

WorkspaceStore::WorkspaceStore(fs::path root) : root_(std::move(root)) {
  for (const char* sub : {"checkpoints", "motions", "jobs", "datasets"}) fs::create_directories(root_ / sub);
  std::lock_guard lock(mutex_);
  reconcile();
  commit_index();
}

void WorkspaceStore::reconcile() {
  jobs_ = ulid_stems(root_ / "jobs");
  motions_ = ulid_stems(root_ / "motions");
  checkpoints_ = checkpoint_dirs(root_ / "checkpoints");
  idempotency_.clear();
  active_.reset();
  if (fs::exists(root_ / "index.json")) {
    const auto index = read_json(root_ / "index.json");
    if (index.contains("idempotency"))
      for (const auto& [key, id] : index["idempotency"].items())
        if (jobs_.count(id.get<std::string>())) idempotency_[key] = id.get<std::string>();
    if (index.contains("active_checkpoint") && index["active_checkpoint"].is_string()) {
      const auto name = index["active_checkpoint"].get<std::string>();
      if (checkpoints_.count(name)) active_ = name;
    }
  }
}

nlohmann::json WorkspaceStore::index_json() const {
  return {{"version", 1},
          {"active_checkpoint", active_ ? nlohmann::json(*active_) : nlohmann::json(nullptr)},
          {"checkpoints", checkpoints_},
          {"jobs", jobs_},
          {"motions", motions_},
          {"idempotency", idempotency_}};
}

void WorkspaceStore::commit_index() { write_json(root_ / "index.json", index_json()); }

fs::path WorkspaceStore::checkpoint_dir(const std::string& name) const {
  if (!is_valid_checkpoint_name(name)) throw ConfigError("checkpoint", "invalid checkpoint name: " + name);
  return root_ / "checkpoints" / name;
}

fs::path WorkspaceStore::motion_path(const std::string& id) const {
  require_ulid(id);
  return root_ / "motions" / (id + ".json");
}

fs::path WorkspaceStore::job_path(const std::string& id) const {
  require_ulid(id);
  return root_ / "jobs" / (id + ".json");
}

void WorkspaceStore::put_job(const Job& job) {
  job.validate();
  std::lock_guard lock(mutex_);
  write_json(job_path(job.id), job.to_json());
  if (jobs_.insert(job.id).second) commit_index();
}

void WorkspaceStore::put_motion(const std::string& id, const std::string& contents) {
  std::lock_guard lock(mutex_);
  atomic_write(motion_path(id), contents);
  if (motions_.insert(id).second) commit_index();
}

void WorkspaceStore::register_checkpoint(const std::string& name) {
  const auto dir = checkpoint_dir(name);
  require(fs::exists(dir / "config.json"), ErrorKind::not_found, "no checkpoint at " + dir.string());
  std::lock_guard lock(mutex_);
  if (checkpoints_.insert(name).second) commit_index();
}

void WorkspaceStore::set_active_checkpoint(const std::optional<std::string>& name) {
  std::lock_guard lock(mutex_);
  require(!name || checkpoints_.count(*name), ErrorKind::not_found, "unknown checkpoint: " + name.value_or(""));
  active_ = name;
  commit_index();
}

std::string WorkspaceStore::bind_idempotency_key(const std::string& key, const std::string& job_id) {
  std::lock_guard lock(mutex_);
  const auto [it, inserted] = idempotency_.emplace(key, job_id);
  if (inserted) commit_index();
  return it->second;
}

Job WorkspaceStore::load_job(const std::string& id) const {
  const auto path = job_path(id);
  require(fs::exists(path), ErrorKind::not_found, "unknown job: " + id);
  return Job::from_json(read_json(path));
}

std::string WorkspaceStore::read_motion(const std::string& id) const {
  const auto path = motion_path(id);
  require(fs::exists(path), ErrorKind::not_found, "unknown motion: " + id);
  return read_file(path);
}

std::vector<std::string> WorkspaceStore::job_ids() const {
  std::lock_guard lock(mutex_);
  return {jobs_.begin(), jobs_.end()};
}

std::vector<std::string> WorkspaceStore::checkpoints() const {
  std::lock_guard lock(mutex_);
  return {checkpoints_.begin(), checkpoints_.end()};
}

std::optional<std::string> WorkspaceStore::active_checkpoint() const {
  std::lock_guard lock(mutex_);
  return active_;
}

std::optional<std::string> WorkspaceStore::idempotent_job(const std::string& key) const {
  std::lock_guard lock(mutex_);
  const auto it = idempotency_.find(key);
  if (it == idempotency_.end()) return std::nullopt;
  return it->second;
}

nlohmann::json WorkspaceStore::index() const {
  std::lock_guard lock(mutex_);
  return index_json();
}

std::vector<std::string> WorkspaceStore::check_consistency() const {
  std::lock_guard lock(mutex_);
  std::vector<std::string> problems;
  const auto on_disk = read_json(root_ / "index.json");
  if (on_disk != index_json()) problems.push_back("index.json differs from the in-memory index");
  const auto compare = [&](const std::set<std::string>& indexed, const std::set<std::string>& files,
                           const std::string& what) {
    for (const auto& id : indexed)
      if (!files.count(id)) problems.push_back(what + " " + id + " indexed but missing on disk");
    for (const auto& id : files)
      if (!indexed.count(id)) problems.push_back(what + " " + id + " on disk but not indexed");
  };
  compare(jobs_, ulid_stems(root_ / "jobs"), "job");
  compare(motions_, ulid_stems(root_ / "motions"), "motion");
  compare(checkpoints_, checkpoint_dirs(root_ / "checkpoints"), "checkpoint");
  for (const auto& id : jobs_) {
    const auto job = Job::from_json(read_json(root_ / "jobs" / (id + ".json")));
    if (job.motion_id && !motions_.count(*job.motion_id))
      problems.push_back("job " + id + " refers to missing motion " + *job.motion_id);
  }
  if (active_ && !checkpoints_.count(*active_)) problems.push_back("active checkpoint " + *active_ + " missing");
  return problems;
}

}  // namespace mola::service
