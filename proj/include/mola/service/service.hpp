// Copyright 2026 The mola Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MOLA_SERVICE_SERVICE_HPP
#define MOLA_SERVICE_SERVICE_HPP

#include "mola/diffusion/stage2.hpp"
#include "mola/error.hpp"
#include "mola/service/job.hpp"
#include "mola/service/store.hpp"
#include "mola/service/ulid.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <condition_variable>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace mola::service {

struct ServiceConfig {
  std::filesystem::path workspace = "workspace";
  std::string host = "127.0.0.1";
  int port = 8080;
  int workers = 1;
  int http_threads = 8;
  std::string cors_origin = "*";
  std::string checkpoint;  // activated at startup when set

  void validate() const;
  nlohmann::json to_json() const;
  /// Keys under "service": workspace, host, port, workers, http_threads, cors_origin, checkpoint.
  static ServiceConfig from_json(const nlohmann::json& j);
  /// MOLA_WORKSPACE and MOLA_PORT take precedence over file values.
  void apply_environment();
};

/// No checkpoint is active (HTTP 503).
class NoModelError : public Error {
 public:
  NoModelError() : Error(ErrorKind::not_found, "no model loaded; activate a checkpoint first") {}
};

/// An idempotency key was reused with a different request (HTTP 409).
class IdempotencyConflict : public Error {
 public:
  explicit IdempotencyConflict(const std::string& key)
      : Error(ErrorKind::invalid_input, "idempotency key reused with a different request: " + key) {}
};

struct LoadedCheckpoint {
  std::string name;
  std::shared_ptr<const diffusion::LdmBundle> model;
};

/// Generation and editing jobs over a workspace. Requests may arrive from any
/// thread. Inference runs on `workers` threads against an immutable model
/// snapshot pinned at submission, so activating another checkpoint never
/// affects a job in flight.
class Service {
 public:
  explicit Service(ServiceConfig config);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  const ServiceConfig& config() const { return config_; }
  WorkspaceStore& store() { return store_; }
  const WorkspaceStore& store() const { return store_; }

  /// Saves `model` under checkpoints/<name> and registers it.
  void install_checkpoint(const std::string& name, const diffusion::LdmBundle& model);
  /// Loads (or reuses) the checkpoint, then swaps it in atomically.
  void activate_checkpoint(const std::string& name);
  /// Current snapshot; nullptr when no checkpoint is active.
  std::shared_ptr<const LoadedCheckpoint> active() const;

  Job submit_generate(const nlohmann::json& body, const std::string& idempotency_key = "");
  Job submit_edit(const nlohmann::json& body, const std::string& idempotency_key = "");
  /// New job with the request, seed and checkpoint of a finished one.
  Job replay(const std::string& job_id);

  Job job(const std::string& id) const;
  /// {"jobs": [...], "next": id or null}, ascending by id.
  nlohmann::json list_jobs(int limit, const std::string& after) const;
  /// Blocks until the job finishes or the timeout elapses; returns its latest state.
  Job wait(const std::string& id, std::chrono::milliseconds timeout) const;

  /// Motion file bytes as stored.
  std::string motion_file(const std::string& id) const;
  nlohmann::json checkpoints_json() const;
  nlohmann::json skeleton_json() const;

  /// Per-frame control errors of a stored motion against an edit spec, with an
  /// overlay colour per frame (green at zero error, red at the threshold).
  nlohmann::json control_errors(const std::string& motion_id, const nlohmann::json& spec, double threshold = 0.5) const;
  /// Edit specs built server side for the studio: {"points", "text", "frames"?, "pelvis_height"?}.
  nlohmann::json path_spec(const nlohmann::json& body) const;
  /// {"motion_id", "text"}: lower body pinned to the stored motion.
  nlohmann::json upper_body_spec(const nlohmann::json& body) const;
  /// {"motion_id", "end_motion_id"?, "n_ctx", "frames"?, "text"}.
  nlohmann::json inbetween_spec(const nlohmann::json& body) const;

 private:
  struct Pending {
    std::shared_ptr<const LoadedCheckpoint> checkpoint;
  };

  std::shared_ptr<const LoadedCheckpoint> require_model() const;
  std::shared_ptr<const LoadedCheckpoint> load_checkpoint(const std::string& name);
  Job submit(JobKind kind, nlohmann::json request, std::optional<std::uint64_t> seed,
             std::shared_ptr<const LoadedCheckpoint> checkpoint, const std::string& idempotency_key);
  void worker_loop();
  void run(Job job, const std::shared_ptr<const LoadedCheckpoint>& checkpoint);
  void update(const Job& job);
  std::uint64_t draw_seed();

  ServiceConfig config_;
  WorkspaceStore store_;
  UlidGenerator ulids_;

  std::mutex activate_mutex_;
  mutable std::mutex model_mutex_;
  std::shared_ptr<const LoadedCheckpoint> active_;
  std::map<std::string, std::shared_ptr<const LoadedCheckpoint>> loaded_;

  std::mutex submit_mutex_;
  mutable std::mutex jobs_mutex_;
  mutable std::condition_variable jobs_changed_;
  std::map<std::string, Job> jobs_;
  std::deque<std::pair<std::string, Pending>> queue_;
  bool stopping_ = false;
  std::vector<std::thread> workers_;
};

/// Generation request with every optional field filled from the model defaults.
nlohmann::json resolve_generate_request(const diffusion::LdmBundle& model, const nlohmann::json& body);
/// {"spec": EditSpec JSON, "guidance": resolved guidance}.
nlohmann::json resolve_edit_request(const diffusion::LdmBundle& model, const nlohmann::json& body);

/// Runs a resolved request; returns the serialized motion file.
std::string run_generate(const diffusion::LdmBundle& model, const std::string& checkpoint,
                         const nlohmann::json& request, std::uint64_t seed);
std::string run_edit(const diffusion::LdmBundle& model, const std::string& checkpoint, const nlohmann::json& request,
                     std::uint64_t seed);

}  // namespace mola::service

#endif  // MOLA_SERVICE_SERVICE_HPP
