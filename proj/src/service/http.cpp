// Copyright 2026 The mola Authors
// SPDX-License-Identifier: Apache-2.0

#include "mola/service/http.hpp"

#include <httplib.h>

#include <thread>

namespace mola::service {
namespace {

constexpr const char* kJson = "application/json";

void send_json(httplib::Response& res, int status, const nlohmann::json& body) {
  res.status = status;
  res.set_content(body.dump(), kJson);
}

nlohmann::json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return nlohmann::json::object();
  try {
    return nlohmann::json::parse(req.body);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::invalid_input, std::string("request body is not valid JSON: ") + e.what());
  }
}

int int_param(const httplib::Request& req, const std::string& name, int fallback) {
  if (!req.has_param(name)) return fallback;
  const auto value = req.get_param_value(name);
  try {
    std::size_t used = 0;
    const int v = std::stoi(value, &used);
    if (used == value.size()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError(name, "expected an integer, got '" + value + "'");
}

}  // namespace

int http_status(const std::exception& e) {
  if (dynamic_cast<const NoModelError*>(&e)) return 503;
  if (dynamic_cast<const IdempotencyConflict*>(&e)) return 409;
  if (const auto* err = dynamic_cast<const Error*>(&e)) {
    switch (err->kind()) {
      case ErrorKind::invalid_input:
      case ErrorKind::tokenizer:
      case ErrorKind::config:
        return 400;
      case ErrorKind::shape_mismatch:
        return 422;
      case ErrorKind::not_found:
        return 404;
      default:
        return 500;
    }
  }
  return 500;
}

nlohmann::json error_body(const std::exception& e) {
  nlohmann::json err = {{"message", e.what()}};
  if (const auto* c = dynamic_cast<const ConfigError*>(&e)) err["field"] = c->field();
  if (dynamic_cast<const NoModelError*>(&e))
    err["kind"] = "unavailable";
  else if (dynamic_cast<const IdempotencyConflict*>(&e))
    err["kind"] = "conflict";
  else if (const auto* x = dynamic_cast<const Error*>(&e))
    err["kind"] = to_string(x->kind());
  else
    err["kind"] = "internal";
  return {{"error", err}};
}

struct HttpServer::Impl {
  Service& service;
  httplib::Server server;
  std::thread thread;

  explicit Impl(Service& s) : service(s) {}
};

HttpServer::HttpServer(Service& service) : impl_(std::make_unique<Impl>(service)) {
  auto& srv = impl_->server;
  Service& svc = service;
  const int threads = svc.config().http_threads;
  srv.new_task_queue = [threads] { return new httplib::ThreadPool(static_cast<std::size_t>(threads)); };
  srv.set_default_headers({{"Access-Control-Allow-Origin", svc.config().cors_origin},
                           {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                           {"Access-Control-Allow-Headers", "Content-Type, Idempotency-Key"},
                           {"Access-Control-Max-Age", "600"}});
  srv.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      send_json(res, http_status(e), error_body(e));
    } catch (...) {
      send_json(res, 500, {{"error", {{"kind", "internal"}, {"message", "unknown error"}}}});
    }
  });
  srv.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty() && res.status == 404)
      send_json(res, 404, {{"error", {{"kind", "not_found"}, {"message", "no such route"}}}});
  });

  srv.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  srv.Get("/api/spec", [](const httplib::Request&, httplib::Response& res) { send_json(res, 200, openapi_document()); });
  srv.Get("/api/health", [&svc](const httplib::Request&, httplib::Response& res) {
    const auto m = svc.active();
    send_json(res, 200, {{"status", "ok"}, {"checkpoint", m ? nlohmann::json(m->name) : nlohmann::json(nullptr)}});
  });

  srv.Post("/api/generate", [&svc](const httplib::Request& req, httplib::Response& res) {
    send_json(res, 202, svc.submit_generate(parse_body(req), req.get_header_value("Idempotency-Key")).to_json());
  });
  srv.Post("/api/edit", [&svc](const httplib::Request& req, httplib::Response& res) {
    send_json(res, 202, svc.submit_edit(parse_body(req), req.get_header_value("Idempotency-Key")).to_json());
  });

  srv.Get("/api/jobs", [&svc](const httplib::Request& req, httplib::Response& res) {
    send_json(res, 200, svc.list_jobs(int_param(req, "limit", 50), req.get_param_value("after")));
  });
  srv.Get(R"(/api/jobs/([0-9A-Za-z]+))", [&svc](const httplib::Request& req, httplib::Response& res) {
    send_json(res, 200, svc.job(req.matches[1]).to_json());
  });
  srv.Post(R"(/api/jobs/([0-9A-Za-z]+)/replay)", [&svc](const httplib::Request& req, httplib::Response& res) {
    send_json(res, 202, svc.replay(req.matches[1]).to_json());
  });

  srv.Get(R"(/api/motions/([0-9A-Za-z]+))", [&svc](const httplib::Request& req, httplib::Response& res) {
    res.status = 200;
    res.set_content(svc.motion_file(req.matches[1]), kJson);
  });
  srv.Post(R"(/api/motions/([0-9A-Za-z]+)/control-errors)",
           [&svc](const httplib::Request& req, httplib::Response& res) {
             double threshold = 0.5;
             if (req.has_param("threshold")) {
               try {
                 threshold = std::stod(req.get_param_value("threshold"));
               } catch (const std::exception&) {
                 throw ConfigError("threshold", "expected a number");
               }
             }
             send_json(res, 200, svc.control_errors(req.matches[1], parse_body(req), threshold));
           });

  srv.Get("/api/checkpoints", [&svc](const httplib::Request&, httplib::Response& res) {
    send_json(res, 200, svc.checkpoints_json());
  });
  srv.Post(R"(/api/checkpoints/([A-Za-z0-9._-]+)/activate)", [&svc](const httplib::Request& req, httplib::Response& res) {
    const std::string name = req.matches[1];
    if (!is_valid_checkpoint_name(name)) throw Error(ErrorKind::not_found, "unknown checkpoint: " + name);
    svc.activate_checkpoint(name);
    send_json(res, 200, svc.checkpoints_json());
  });
  srv.Get("/api/skeleton", [&svc](const httplib::Request&, httplib::Response& res) {
    send_json(res, 200, svc.skeleton_json());
  });

  srv.Post("/api/specs/path", [&svc](const httplib::Request& req, httplib::Response& res) {
    send_json(res, 200, svc.path_spec(parse_body(req)));
  });
  srv.Post("/api/specs/upper-body", [&svc](const httplib::Request& req, httplib::Response& res) {
    send_json(res, 200, svc.upper_body_spec(parse_body(req)));
  });
  srv.Post("/api/specs/inbetween", [&svc](const httplib::Request& req, httplib::Response& res) {
    send_json(res, 200, svc.inbetween_spec(parse_body(req)));
  });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = impl_->server.bind_to_any_port(host);
    require(bound > 0, ErrorKind::io, "cannot bind " + host);
    return bound;
  }
  require(impl_->server.bind_to_port(host, port), ErrorKind::io,
          "cannot bind " + host + ":" + std::to_string(port));
  return port;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::start() {
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

void HttpServer::stop() {
  if (impl_->server.is_running()) impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace mola::service
