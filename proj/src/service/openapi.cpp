// Copyright 2026 The mola Authors
// SPDX-License-Identifier: Apache-2.0

#include "mola/service/http.hpp"

namespace mola::service {
namespace {

using nlohmann::json;

json ref(const std::string& name) { return {{"$ref", "#/components/schemas/" + name}}; }

json json_content(const json& schema) { return {{"application/json", {{"schema", schema}}}}; }

json response(const std::string& description, const json& schema) {
  return {{"description", description}, {"content", json_content(schema)}};
}

json error_response(const std::string& description) { return response(description, ref("Error")); }

json id_param(const std::string& description) {
  return json::array({{{"name", "id"}, {"in", "path"}, {"required", true}, {"description", description},
                       {"schema", {{"type", "string"}}}}});
}

json idempotency_header() {
  return {{"name", "Idempotency-Key"}, {"in", "header"}, {"required", false},
          {"description", "Repeating a key returns the job created by its first use."},
          {"schema", {{"type", "string"}}}};
}

json schemas() {
  const json number = {{"type", "number"}};
  const json integer = {{"type", "integer"}};
  const json string = {{"type", "string"}};
  json s;
  s["Error"] = {{"type", "object"},
                {"required", json::array({"error"})},
                {"properties",
                 {{"error",
                   {{"type", "object"},
                    {"required", json::array({"kind", "message"})},
                    {"properties", {{"kind", string}, {"message", string}, {"field", string}}}}}}}};
  s["GenerateRequest"] = {{"type", "object"},
                          {"required", json::array({"text"})},
                          {"additionalProperties", false},
                          {"properties",
                           {{"text", string},
                            {"seed", {{"type", "integer"}, {"minimum", 0}}},
                            {"cfg_scale", number},
                            {"steps", integer},
                            {"delta", number},
                            {"eta", number}}}};
  s["Guidance"] = {{"type", "object"},
                   {"properties",
                    {{"rho", number},
                     {"mode", {{"type", "string"}, {"enum", json::array({"normalized", "constant"})}}},
                     {"time_travel", {{"oneOf", {integer, {{"type", "array"}, {"items", integer}}}}}},
                     {"time_travel_fraction", number},
                     {"sampler",
                      {{"type", "object"},
                       {"properties", {{"steps", integer}, {"cfg_scale", number}, {"eta", number}, {"delta", number}}}}}}}};
  const json point = {{"type", "array"}, {"items", number}, {"minItems", 3}, {"maxItems", 3}};
  const json target = {{"oneOf", json::array({{{"type", "null"}}, point})}};
  const json mask_rows = {{"type", "array"},
                          {"description", "one row per joint, one 0/1 entry per frame"},
                          {"items", {{"type", "array"}, {"items", integer}}}};
  const json target_rows = {{"type", "array"},
                            {"description", "one row per joint, [x, y, z] in metres or null per frame"},
                            {"items", {{"type", "array"}, {"items", target}}}};
  s["EditSpec"] = {{"type", "object"},
                   {"required", json::array({"task", "text", "mask", "targets"})},
                   {"properties",
                    {{"task", {{"type", "string"}, {"enum", json::array({"path_following", "in_betweening", "upper_body"})}}},
                     {"text", string},
                     {"mask", mask_rows},
                     {"targets", target_rows},
                     {"guidance", ref("Guidance")},
                     {"seed", {{"type", "integer"}, {"minimum", 0}}}}}};
  s["Job"] = {{"type", "object"},
              {"required", json::array({"id", "kind", "status", "request", "seed", "checkpoint", "timings"})},
              {"properties",
               {{"id", {{"type", "string"}, {"description", "ULID"}}},
                {"kind", {{"type", "string"}, {"enum", json::array({"generate", "edit"})}}},
                {"status", {{"type", "string"}, {"enum", json::array({"queued", "running", "done", "failed"})}}},
                {"request", {{"type", "object"}}},
                {"seed", integer},
                {"checkpoint", string},
                {"idempotency_key", string},
                {"motion_id", string},
                {"result", string},
                {"error", {{"type", "object"}}},
                {"timings", {{"type", "object"}}}}}};
  s["JobPage"] = {{"type", "object"},
                  {"properties", {{"jobs", {{"type", "array"}, {"items", ref("Job")}}},
                                  {"next", {{"type", json::array({"string", "null"})}}}}}};
  s["MotionFile"] = {{"type", "object"},
                     {"required", json::array({"version", "representation", "fps", "n_joints", "length", "features"})},
                     {"properties",
                      {{"version", integer},
                       {"representation", {{"type", "string"}, {"enum", json::array({"full", "encoder"})}}},
                       {"fps", integer},
                       {"n_joints", integer},
                       {"length", integer},
                       {"features", {{"type", "array"}, {"description", "one row per frame"}}},
                       {"caption", {{"type", json::array({"string", "null"})}}},
                       {"global_joints", {{"type", "array"}, {"description", "one row per frame, 3 J values"}}},
                       {"generator", {{"type", "object"}}},
                       {"edit", {{"type", "object"}}}}}};
  s["Checkpoints"] = {{"type", "object"},
                      {"properties",
                       {{"active", {{"type", json::array({"string", "null"})}}},
                        {"checkpoints",
                         {{"type", "array"},
                          {"items", {{"type", "object"},
                                     {"properties", {{"id", string},
                                                     {"checkpoint_id", string},
                                                     {"active", {{"type", "boolean"}}},
                                                     {"loaded", {{"type", "boolean"}}}}}}}}}}}};
  s["Skeleton"] = {{"type", "object"},
                   {"properties", {{"n_joints", integer},
                                   {"names", {{"type", "array"}, {"items", string}}},
                                   {"parents", {{"type", "array"}, {"items", integer}}},
                                   {"offsets", {{"type", "array"}}},
                                   {"fps", integer},
                                   {"max_frames", integer},
                                   {"checkpoint", string}}}};
  s["ControlErrors"] = {{"type", "object"},
                        {"properties", {{"avg_err", number},
                                        {"loc_err", number},
                                        {"traj_err", number},
                                        {"frames", integer},
                                        {"covered_frames", integer},
                                        {"per_frame", {{"type", "array"}, {"items", {{"type", json::array({"number", "null"})}}}}},
                                        {"colors", {{"type", "array"}, {"items", {{"type", json::array({"string", "null"})}}}}}}}};
  s["PathSpecRequest"] = {{"type", "object"},
                          {"required", json::array({"points"})},
                          {"properties",
                           {{"points", {{"type", "array"}, {"minItems", 2},
                                        {"items", {{"type", "array"}, {"items", number}, {"minItems", 2},
                                                   {"maxItems", 2}}}}},
                            {"timestamps", {{"type", "array"}, {"items", number}}},
                            {"text", string},
                            {"frames", integer},
                            {"pelvis_height", number}}}};
  s["UpperBodySpecRequest"] = {{"type", "object"},
                               {"required", json::array({"motion_id"})},
                               {"properties", {{"motion_id", string}, {"text", string}}}};
  s["InbetweenSpecRequest"] = {{"type", "object"},
                               {"required", json::array({"motion_id", "n_ctx"})},
                               {"properties", {{"motion_id", string},
                                               {"end_motion_id", string},
                                               {"n_ctx", integer},
                                               {"frames", integer},
                                               {"text", string}}}};
  return s;
}

}  // namespace

json openapi_document() {
  json paths;
  paths["/api/generate"]["post"] = {
      {"summary", "Queue a text-to-motion generation job"},
      {"parameters", json::array({idempotency_header()})},
      {"requestBody", {{"required", true}, {"content", json_content(ref("GenerateRequest"))}}},
      {"responses", {{"202", response("Queued job", ref("Job"))},
                     {"400", error_response("Invalid request or unknown tokens")},
                     {"409", error_response("Idempotency key reused with a different request")},
                     {"503", error_response("No model loaded")}}}};
  paths["/api/edit"]["post"] = {
      {"summary", "Queue a guided editing job"},
      {"parameters", json::array({idempotency_header()})},
      {"requestBody", {{"required", true}, {"content", json_content(ref("EditSpec"))}}},
      {"responses", {{"202", response("Queued job", ref("Job"))},
                     {"400", error_response("Malformed spec or empty mask")},
                     {"409", error_response("Idempotency key reused with a different request")},
                     {"422", error_response("Mask and targets disagree, or the spec does not fit the model")},
                     {"503", error_response("No model loaded")}}}};
  paths["/api/jobs"]["get"] = {
      {"summary", "List jobs in id order"},
      {"parameters", json::array({{{"name", "limit"}, {"in", "query"}, {"schema", {{"type", "integer"}}}},
                                  {{"name", "after"}, {"in", "query"}, {"schema", {{"type", "string"}}}}})},
      {"responses", {{"200", response("One page of jobs", ref("JobPage"))}}}};
  paths["/api/jobs/{id}"]["get"] = {
      {"summary", "Job status"},
      {"parameters", id_param("Job id")},
      {"responses", {{"200", response("Job", ref("Job"))}, {"404", error_response("Unknown job")}}}};
  paths["/api/jobs/{id}/replay"]["post"] = {
      {"summary", "Re-run a done job with its request, seed and checkpoint"},
      {"parameters", id_param("Job id")},
      {"responses", {{"202", response("Queued job", ref("Job"))},
                     {"400", error_response("Job is not done")},
                     {"404", error_response("Unknown job")}}}};
  paths["/api/motions/{id}"]["get"] = {
      {"summary", "Motion file with recovered global joints"},
      {"parameters", id_param("Motion id")},
      {"responses", {{"200", response("Motion file", ref("MotionFile"))}, {"404", error_response("Unknown motion")}}}};
  paths["/api/motions/{id}/control-errors"]["post"] = {
      {"summary", "Per-frame control errors of a motion against an edit spec"},
      {"parameters", json::array({id_param("Motion id")[0],
                                  {{"name", "threshold"}, {"in", "query"}, {"schema", {{"type", "number"}}}}})},
      {"requestBody", {{"required", true}, {"content", json_content(ref("EditSpec"))}}},
      {"responses", {{"200", response("Errors and overlay colours", ref("ControlErrors"))},
                     {"404", error_response("Unknown motion")},
                     {"422", error_response("Spec does not match the motion")}}}};
  paths["/api/checkpoints"]["get"] = {{"summary", "Installed checkpoints"},
                                      {"responses", {{"200", response("Checkpoints", ref("Checkpoints"))}}}};
  paths["/api/checkpoints/{id}/activate"]["post"] = {
      {"summary", "Atomically switch the served checkpoint"},
      {"parameters", id_param("Checkpoint name")},
      {"responses", {{"200", response("Checkpoints", ref("Checkpoints"))}, {"404", error_response("Unknown checkpoint")}}}};
  paths["/api/skeleton"]["get"] = {
      {"summary", "Skeleton of the active checkpoint"},
      {"responses", {{"200", response("Skeleton", ref("Skeleton"))}, {"503", error_response("No model loaded")}}}};
  paths["/api/specs/path"]["post"] = {
      {"summary", "Path-following spec from a sketched ground path"},
      {"requestBody", {{"required", true}, {"content", json_content(ref("PathSpecRequest"))}}},
      {"responses", {{"200", response("Edit spec", ref("EditSpec"))}, {"400", error_response("Invalid path")}}}};
  paths["/api/specs/upper-body"]["post"] = {
      {"summary", "Upper-body editing spec that keeps the lower body of a motion"},
      {"requestBody", {{"required", true}, {"content", json_content(ref("UpperBodySpecRequest"))}}},
      {"responses", {{"200", response("Edit spec", ref("EditSpec"))}, {"404", error_response("Unknown motion")}}}};
  paths["/api/specs/inbetween"]["post"] = {
      {"summary", "In-betweening spec from the start and end frames of motions"},
      {"requestBody", {{"required", true}, {"content", json_content(ref("InbetweenSpecRequest"))}}},
      {"responses", {{"200", response("Edit spec", ref("EditSpec"))}, {"404", error_response("Unknown motion")}}}};
  paths["/api/health"]["get"] = {{"summary", "Liveness and active checkpoint"},
                                 {"responses", {{"200", {{"description", "Service is up"}}}}}};
  paths["/api/spec"]["get"] = {{"summary", "This document"},
                               {"responses", {{"200", {{"description", "OpenAPI 3 document"}}}}}};
  return {{"openapi", "3.1.0"},
          {"info", {{"title", "mola motion service"}, {"version", "1.0.0"}}},
          {"paths", paths},
          {"components", {{"schemas", schemas()}}}};
}

}  // namespace mola::service
