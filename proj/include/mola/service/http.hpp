// Copyright 2026 The mola Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MOLA_SERVICE_HTTP_HPP
#define MOLA_SERVICE_HTTP_HPP

#include "mola/service/service.hpp"

#include <nlohmann/json.hpp>

#include <exception>
#include <memory>
#include <string>

namespace mola::service {

/// REST front end of a Service.
///
///   POST /api/generate                    202 Job
///   POST /api/edit                        202 Job
///   GET  /api/jobs?limit=&after=          job page
///   GET  /api/jobs/{id}                   Job
///   POST /api/jobs/{id}/replay            202 Job
///   GET  /api/motions/{id}                motion file
///   POST /api/motions/{id}/control-errors per-frame errors and overlay colours
///   GET  /api/checkpoints
///   POST /api/checkpoints/{id}/activate
///   GET  /api/skeleton
///   POST /api/specs/{path,upper-body,inbetween}
///   GET  /api/health, GET /api/spec (OpenAPI)
///
/// Errors are {"error": {"kind", "message", "field"?}} with 400 for invalid
/// input, 404 for unknown ids, 409 for idempotency conflicts, 422 for shape
/// mismatches and 503 when no model is active.
class HttpServer {
 public:
  explicit HttpServer(Service& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Port 0 picks a free port. Returns the bound port.
  int bind(const std::string& host, int port);
  /// Serves until stop(); bind() first.
  void listen();
  /// listen() on a background thread; returns once the server accepts connections.
  void start();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

int http_status(const std::exception& e);
nlohmann::json error_body(const std::exception& e);
nlohmann::json openapi_document();

}  // namespace mola::service

#endif  // MOLA_SERVICE_HTTP_HPP
