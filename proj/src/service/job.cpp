// Copyright 2026 The mola Authors
// SPDX-License-Identifier: Apache-2.0

#include "mola/service/job.hpp"

#include "mola/error.hpp"
#include "mola/service/ulid.hpp"

namespace mola::service {

const char* to_string(JobKind kind) { return kind == JobKind::generate ? "generate" : "edit"; }

const char* to_string(JobStatus status) {
  switch (status) {
    case JobStatus::queued: return "queued";
    case JobStatus::running: return "running";
    case JobStatus::done: return "done";
    case JobStatus::failed: return "failed";
  }
  return "unknown";
}

JobKind job_kind_from_string(const std::string& name) {
  if (name == "generate") return JobKind::generate;
  if (name == "edit") return JobKind::edit;
  throw Error(ErrorKind::invalid_input, "unknown job kind: " + name);
}

JobStatus job_status_from_string(const std::string& name) {
  for (auto s : {JobStatus::queued, JobStatus::running, JobStatus::done, JobStatus::failed})
    if (name == to_string(s)) return s;
  throw Error(ErrorKind::invalid_input, "unknown job status: " + name);
}

void Job::advance(JobStatus next) {
  const bool ok = (status == JobStatus::queued && (next == JobStatus::running || next == JobStatus::failed)) ||
                  (status == JobStatus::running && (next == JobStatus::done || next == JobStatus::failed));
  require(ok, ErrorKind::invalid_input,
          std::string("job ") + id + ": illegal transition " + to_string(status) + " -> " + to_string(next));
  status = next;
}

void Job::validate() const {
  require(is_ulid(id), ErrorKind::invalid_input, "job id is not a ULID: " + id);
  require(motion_id.has_value() == (status == JobStatus::done), ErrorKind::invalid_input,
          "job " + id + ": result must be present exactly when done");
  require(error.has_value() == (status == JobStatus::failed), ErrorKind::invalid_input,
          "job " + id + ": error must be present exactly when failed");
}

nlohmann::json Job::to_json() const {
  nlohmann::json j = {{"id", id},
                      {"kind", to_string(kind)},
                      {"status", to_string(status)},
                      {"request", request},
                      {"seed", seed},
                      {"checkpoint", checkpoint},
                      {"timings", timings}};
  if (!idempotency_key.empty()) j["idempotency_key"] = idempotency_key;
  if (motion_id) {
    j["motion_id"] = *motion_id;
    j["result"] = "motions/" + *motion_id + ".json";
  }
  if (error) j["error"] = *error;
  return j;
}

Job Job::from_json(const nlohmann::json& j) {
  try {
    Job job;
    job.id = j.at("id").get<std::string>();
    job.kind = job_kind_from_string(j.at("kind").get<std::string>());
    job.status = job_status_from_string(j.at("status").get<std::string>());
    job.request = j.at("request");
    job.seed = j.at("seed").get<std::uint64_t>();
    job.checkpoint = j.at("checkpoint").get<std::string>();
    job.timings = j.value("timings", nlohmann::json::object());
    job.idempotency_key = j.value("idempotency_key", std::string());
    if (j.contains("motion_id")) job.motion_id = j["motion_id"].get<std::string>();
    if (j.contains("error")) job.error = j["error"];
    job.validate();
    return job;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::invalid_input, std::string("malformed job record: ") + e.what());
  }
}

}  // namespace mola::service
