// Copyright 2026 The mola Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MOLA_SERVICE_JOB_HPP
#define MOLA_SERVICE_JOB_HPP

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <string>

namespace mola::service {

enum class JobKind { generate, edit };
enum class JobStatus { queued, running, done, failed };

const char* to_string(JobKind kind);
const char* to_string(JobStatus status);
JobKind job_kind_from_string(const std::string& name);
JobStatus job_status_from_string(const std::string& name);

struct Job {
  std::string id;  // ULID
  JobKind kind = JobKind::generate;
  nlohmann::json request;  // fully resolved: every sampler and guidance field explicit
  JobStatus status = JobStatus::queued;
  std::uint64_t seed = 0;
  std::string checkpoint;  // workspace checkpoint the job is pinned to
  std::string idempotency_key;
  std::optional<std::string> motion_id;  // set iff done
  std::optional<nlohmann::json> error;   // {"kind", "message"} when failed
  nlohmann::json timings = nlohmann::json::object();

  /// queued -> running -> {done, failed}; queued -> failed. Anything else throws.
  void advance(JobStatus next);
  bool finished() const { return status == JobStatus::done || status == JobStatus::failed; }

  void validate() const;
  nlohmann::json to_json() const;
  static Job from_json(const nlohmann::json& j);
};

}  // namespace mola::service

#endif  // MOLA_SERVICE_JOB_HPP
