// Copyright 2026 The mola Authors
// SPDX-License-Identifier: Apache-2.0

#include "mola/service/service.hpp"

#include "mola/config.hpp"
#include "mola/diffusion/sampler.hpp"
#include "mola/editing/edit_spec.hpp"
#include "mola/editing/guidance.hpp"
#include "mola/io.hpp"
#include "mola/motion/motion_file.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <random>

namespace mola::service {
namespace fs = std::filesystem;

namespace {

std::uint64_t now_ms() {
  return static_cast<std::uint64_t>(std::chrono::duration_cast<std::chrono::milliseconds>(
                                        std::chrono::system_clock::now().time_since_epoch())
                                        .count());
}

std::string iso_time(std::uint64_t unix_ms) {
  const std::time_t secs = static_cast<std::time_t>(unix_ms / 1000);
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1,
                tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(unix_ms % 1000));
  return buf;
}

std::optional<std::uint64_t> parse_seed(const nlohmann::json& body) {
  if (!body.is_object() || !body.contains("seed") || body["seed"].is_null()) return std::nullopt;
  const auto& seed = body["seed"];
  if (seed.is_number_unsigned()) return seed.get<std::uint64_t>();
  if (seed.is_number_integer() && seed.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(seed.get<std::int64_t>());
  throw ConfigError("request.seed", "expected a non-negative integer");
}

nlohmann::json without_seed(nlohmann::json body) {
  if (body.is_object()) body.erase("seed");
  return body;
}

diffusion::SamplerOptions sampler_from_json(const nlohmann::json& j, diffusion::SamplerOptions base) {
  ConfigReader r(j, "request");
  r.get("steps", base.steps);
  r.get("cfg_scale", base.cfg_scale);
  r.get("eta", base.eta);
  r.get("delta", base.delta);
  return base;
}

std::string serialize(const motion::MotionFile& file) { return motion::to_json(file).dump() + "\n"; }

motion::JointTrack stored_joints(const WorkspaceStore& store, const std::string& id) {
  const auto file = motion::motion_file_from_json(nlohmann::json::parse(store.read_motion(id)));
  return file.global_joints ? *file.global_joints : motion::recover_global_joints(file.motion);
}

std::string overlay_colour(double error, double threshold) {
  const double t = std::clamp(error / threshold, 0.0, 1.0);
  char buf[8];
  std::snprintf(buf, sizeof(buf), "#%02x%02x00", static_cast<int>(std::lround(255 * t)),
                static_cast<int>(std::lround(255 * (1 - t))));
  return buf;
}

}  // namespace

void ServiceConfig::validate() const {
  check_field(!workspace.empty(), "service.workspace", "must not be empty");
  check_field(port >= 0 && port <= 65535, "service.port", "must lie in [0, 65535]");
  check_field(workers >= 1, "service.workers", "must be >= 1");
  check_field(http_threads >= 1, "service.http_threads", "must be >= 1");
  check_field(checkpoint.empty() || is_valid_checkpoint_name(checkpoint), "service.checkpoint",
              "invalid checkpoint name");
}

nlohmann::json ServiceConfig::to_json() const {
  return {{"workspace", workspace.string()}, {"host", host},
          {"port", port},                    {"workers", workers},
          {"http_threads", http_threads},    {"cors_origin", cors_origin},
          {"checkpoint", checkpoint}};
}

ServiceConfig ServiceConfig::from_json(const nlohmann::json& j) {
  ServiceConfig c;
  const auto& body = j.contains("service") ? j["service"] : j;
  ConfigReader r(body, "service");
  std::string workspace = c.workspace.string();
  r.get("workspace", workspace);
  c.workspace = workspace;
  r.get("host", c.host);
  r.get("port", c.port);
  r.get("workers", c.workers);
  r.get("http_threads", c.http_threads);
  r.get("cors_origin", c.cors_origin);
  r.get("checkpoint", c.checkpoint);
  r.reject_unknown();
  c.validate();
  return c;
}

void ServiceConfig::apply_environment() {
  if (const char* ws = std::getenv("MOLA_WORKSPACE"); ws && *ws) workspace = ws;
  if (const char* p = std::getenv("MOLA_PORT"); p && *p) {
    char* end = nullptr;
    const long v = std::strtol(p, &end, 10);
    if (*end != '\0' || v < 0 || v > 65535) throw ConfigError("service.port", std::string("MOLA_PORT is not a port: ") + p);
    port = static_cast<int>(v);
  }
}

nlohmann::json resolve_generate_request(const diffusion::LdmBundle& model, const nlohmann::json& body) {
  const auto rest = without_seed(body);
  ConfigReader r(rest, "request");
  std::string text;
  r.get("text", text);
  auto options = diffusion::SamplerOptions::from_config(model.config);
  r.get("steps", options.steps);
  r.get("cfg_scale", options.cfg_scale);
  r.get("eta", options.eta);
  r.get("delta", options.delta);
  r.reject_unknown();
  check_field(!text.empty(), "request.text", "must be a non-empty string");
  options.validate(model.config.diffusion_steps);
  model.tokenizer.encode(text);
  return {{"text", text}, {"sampler", options.to_json()}};
}

nlohmann::json resolve_edit_request(const diffusion::LdmBundle& model, const nlohmann::json& body) {
  editing::EditSpec spec = editing::edit_spec_from_json(without_seed(body));
  require(spec.n_joints() == model.vae.config.n_joints, ErrorKind::shape_mismatch,
          "edit spec has " + std::to_string(spec.n_joints()) + " joints, the model " +
              std::to_string(model.vae.config.n_joints));
  require(spec.frames() <= model.vae.config.max_frames, ErrorKind::shape_mismatch,
          "edit spec spans " + std::to_string(spec.frames()) + " frames, the model at most " +
              std::to_string(model.vae.config.max_frames));
  model.tokenizer.encode(spec.text);
  editing::GuidanceConfig guidance;
  guidance.sampler = diffusion::SamplerOptions::from_config(model.config);
  if (spec.guidance) guidance = editing::GuidanceConfig::from_json(*spec.guidance, guidance);
  guidance.validate();
  guidance.sampler.validate(model.config.diffusion_steps);
  spec.guidance.reset();
  return {{"spec", editing::to_json(spec)}, {"guidance", guidance.to_json()}};
}

std::string run_generate(const diffusion::LdmBundle& model, const std::string& checkpoint,
                         const nlohmann::json& request, std::uint64_t seed) {
  const auto options = sampler_from_json(request.at("sampler"), {});
  const auto sample =
      diffusion::sample_text_to_motion(model, request.at("text").get<std::string>(), seed, options);
  auto file = sample.to_file();
  file.metadata["kind"] = "generate";
  file.metadata["checkpoint"] = checkpoint;
  return serialize(file);
}

std::string run_edit(const diffusion::LdmBundle& model, const std::string& checkpoint, const nlohmann::json& request,
                     std::uint64_t seed) {
  const auto spec = editing::edit_spec_from_json(request.at("spec"));
  const auto guidance = editing::GuidanceConfig::from_json(request.at("guidance"), {});
  const auto result = editing::guided_sample(model, spec, seed, guidance);
  auto file = result.sample.to_file();
  file.metadata["kind"] = "edit";
  file.metadata["checkpoint"] = checkpoint;
  file.metadata["edit"]["spec"] = request.at("spec");
  file.metadata["edit"]["final_loss"] = result.final_loss;
  file.metadata["edit"]["gradient_evaluations"] = result.gradient_evaluations;
  return serialize(file);
}

Service::Service(ServiceConfig config) : config_(std::move(config)), store_((config_.validate(), config_.workspace)) {
  for (const auto& id : store_.job_ids()) {
    Job job = store_.load_job(id);
    if (!job.finished()) {
      job.error = {{"kind", "interrupted"}, {"message", "service stopped before the job finished"}};
      job.advance(JobStatus::failed);
      store_.put_job(job);
    }
    jobs_.emplace(id, std::move(job));
  }
  const auto start = config_.checkpoint.empty() ? store_.active_checkpoint() : std::optional(config_.checkpoint);
  if (start) activate_checkpoint(*start);
  for (int i = 0; i < config_.workers; ++i) workers_.emplace_back([this] { worker_loop(); });
}

Service::~Service() {
  {
    std::lock_guard lock(jobs_mutex_);
    stopping_ = true;
  }
  jobs_changed_.notify_all();
  for (auto& t : workers_) t.join();
}

void Service::install_checkpoint(const std::string& name, const diffusion::LdmBundle& model) {
  const auto dir = store_.checkpoint_dir(name);
  if (fs::exists(dir)) throw ConfigError("checkpoint", "checkpoint '" + name + "' already exists");
  // Staged under a dot-name, which the store never lists, then renamed into place.
  const auto staging = store_.root() / "checkpoints" / ("." + name + "." + ulids_.next());
  diffusion::save_ldm(staging, model);
  fs::rename(staging, dir);
  store_.register_checkpoint(name);
}

std::shared_ptr<const LoadedCheckpoint> Service::load_checkpoint(const std::string& name) {
  {
    std::lock_guard lock(model_mutex_);
    if (const auto it = loaded_.find(name); it != loaded_.end()) return it->second;
  }
  const auto dir = store_.checkpoint_dir(name);
  require(fs::exists(dir / "config.json"), ErrorKind::not_found, "unknown checkpoint: " + name);
  auto loaded = std::make_shared<const LoadedCheckpoint>(
      LoadedCheckpoint{name, std::make_shared<const diffusion::LdmBundle>(diffusion::load_ldm(dir))});
  store_.register_checkpoint(name);
  std::lock_guard lock(model_mutex_);
  return loaded_.emplace(name, std::move(loaded)).first->second;
}

void Service::activate_checkpoint(const std::string& name) {
  std::lock_guard activation(activate_mutex_);
  auto next = load_checkpoint(name);
  {
    std::lock_guard lock(model_mutex_);
    active_ = std::move(next);
  }
  store_.set_active_checkpoint(name);
}

std::shared_ptr<const LoadedCheckpoint> Service::active() const {
  std::lock_guard lock(model_mutex_);
  return active_;
}

std::shared_ptr<const LoadedCheckpoint> Service::require_model() const {
  auto m = active();
  if (!m) throw NoModelError();
  return m;
}

std::uint64_t Service::draw_seed() {
  // 53 bits so the seed survives a round trip through a JavaScript number.
  std::random_device rd;
  return ((static_cast<std::uint64_t>(rd()) << 32) ^ rd()) & ((1ULL << 53) - 1);
}

Job Service::submit_generate(const nlohmann::json& body, const std::string& idempotency_key) {
  auto model = require_model();
  auto request = resolve_generate_request(*model->model, body);
  return submit(JobKind::generate, std::move(request), parse_seed(body), std::move(model), idempotency_key);
}

Job Service::submit_edit(const nlohmann::json& body, const std::string& idempotency_key) {
  auto model = require_model();
  auto request = resolve_edit_request(*model->model, body);
  return submit(JobKind::edit, std::move(request), parse_seed(body), std::move(model), idempotency_key);
}

Job Service::replay(const std::string& job_id) {
  const Job original = job(job_id);
  require(original.status == JobStatus::done, ErrorKind::invalid_input, "only done jobs can be replayed");
  return submit(original.kind, original.request, original.seed, load_checkpoint(original.checkpoint), "");
}

Job Service::submit(JobKind kind, nlohmann::json request, std::optional<std::uint64_t> seed,
                    std::shared_ptr<const LoadedCheckpoint> checkpoint, const std::string& idempotency_key) {
  std::lock_guard serial(submit_mutex_);
  if (!idempotency_key.empty()) {
    if (const auto existing_id = store_.idempotent_job(idempotency_key)) {
      Job existing = job(*existing_id);
      if (existing.kind != kind || existing.request != request || (seed && *seed != existing.seed))
        throw IdempotencyConflict(idempotency_key);
      return existing;
    }
  }
  Job j;
  j.id = ulids_.next();
  j.kind = kind;
  j.request = std::move(request);
  j.seed = seed ? *seed : draw_seed();
  j.checkpoint = checkpoint->name;
  j.idempotency_key = idempotency_key;
  j.timings = {{"created_at", iso_time(ulid_time_ms(j.id))}};
  store_.put_job(j);
  if (!idempotency_key.empty()) store_.bind_idempotency_key(idempotency_key, j.id);
  {
    std::lock_guard lock(jobs_mutex_);
    jobs_.emplace(j.id, j);
    queue_.emplace_back(j.id, Pending{std::move(checkpoint)});
  }
  jobs_changed_.notify_all();
  return j;
}

void Service::worker_loop() {
  for (;;) {
    std::pair<std::string, Pending> next;
    Job job;
    {
      std::unique_lock lock(jobs_mutex_);
      jobs_changed_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
      if (stopping_) return;
      next = std::move(queue_.front());
      queue_.pop_front();
      job = jobs_.at(next.first);
    }
    run(std::move(job), next.second.checkpoint);
  }
}

void Service::run(Job job, const std::shared_ptr<const LoadedCheckpoint>& checkpoint) {
  const std::uint64_t started = now_ms();
  job.advance(JobStatus::running);
  job.timings["started_at"] = iso_time(started);
  job.timings["queue_seconds"] = static_cast<double>(started - ulid_time_ms(job.id)) / 1000.0;
  update(job);
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const std::string bytes = job.kind == JobKind::generate
                                  ? run_generate(*checkpoint->model, checkpoint->name, job.request, job.seed)
                                  : run_edit(*checkpoint->model, checkpoint->name, job.request, job.seed);
    store_.put_motion(job.id, bytes);
    job.motion_id = job.id;
    job.advance(JobStatus::done);
  } catch (const Error& e) {
    job.error = {{"kind", to_string(e.kind())}, {"message", e.what()}};
    job.advance(JobStatus::failed);
  } catch (const std::exception& e) {
    job.error = {{"kind", "internal"}, {"message", e.what()}};
    job.advance(JobStatus::failed);
  }
  job.timings["finished_at"] = iso_time(now_ms());
  job.timings["run_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  update(job);
}

void Service::update(const Job& job) {
  store_.put_job(job);
  {
    std::lock_guard lock(jobs_mutex_);
    jobs_[job.id] = job;
  }
  jobs_changed_.notify_all();
}

Job Service::job(const std::string& id) const {
  {
    std::lock_guard lock(jobs_mutex_);
    if (const auto it = jobs_.find(id); it != jobs_.end()) return it->second;
  }
  return store_.load_job(id);
}

nlohmann::json Service::list_jobs(int limit, const std::string& after) const {
  limit = std::clamp(limit, 1, 500);
  const auto ids = store_.job_ids();
  auto it = after.empty() ? ids.begin() : std::upper_bound(ids.begin(), ids.end(), after);
  nlohmann::json out = {{"jobs", nlohmann::json::array()}, {"next", nullptr}};
  for (; it != ids.end() && static_cast<int>(out["jobs"].size()) < limit; ++it) out["jobs"].push_back(job(*it).to_json());
  if (it != ids.end()) out["next"] = out["jobs"].back()["id"];
  return out;
}

Job Service::wait(const std::string& id, std::chrono::milliseconds timeout) const {
  std::unique_lock lock(jobs_mutex_);
  if (!jobs_.count(id)) {
    lock.unlock();
    return job(id);
  }
  jobs_changed_.wait_for(lock, timeout, [&] { return jobs_.at(id).finished(); });
  return jobs_.at(id);
}

std::string Service::motion_file(const std::string& id) const { return store_.read_motion(id); }

nlohmann::json Service::checkpoints_json() const {
  const auto current = active();
  nlohmann::json list = nlohmann::json::array();
  for (const auto& name : store_.checkpoints()) {
    const auto id_file = store_.checkpoint_dir(name) / "checkpoint_id";
    std::string hash;
    if (fs::exists(id_file)) {
      hash = read_file(id_file);
      while (!hash.empty() && std::isspace(static_cast<unsigned char>(hash.back()))) hash.pop_back();
    }
    bool loaded = false;
    {
      std::lock_guard lock(model_mutex_);
      loaded = loaded_.count(name) > 0;
    }
    list.push_back({{"id", name},
                    {"checkpoint_id", hash},
                    {"active", current && current->name == name},
                    {"loaded", loaded}});
  }
  return {{"active", current ? nlohmann::json(current->name) : nlohmann::json(nullptr)}, {"checkpoints", list}};
}

nlohmann::json Service::skeleton_json() const {
  const auto m = require_model();
  auto j = motion::to_json(motion::skeleton_for_joints(m->model->vae.config.n_joints));
  j["max_frames"] = m->model->vae.config.max_frames;
  j["checkpoint"] = m->name;
  return j;
}

nlohmann::json Service::control_errors(const std::string& motion_id, const nlohmann::json& spec_json,
                                       double threshold) const {
  check_field(threshold > 0, "threshold", "must be positive");
  const auto joints = stored_joints(store_, motion_id);
  const auto spec = editing::edit_spec_from_json(spec_json);
  require(3 * spec.n_joints() == joints.rows(), ErrorKind::shape_mismatch,
          "edit spec has " + std::to_string(spec.n_joints()) + " joints, the motion " +
              std::to_string(joints.rows() / 3));
  const int covered = std::min(spec.frames(), static_cast<int>(joints.cols()));
  nlohmann::json per_frame = nlohmann::json::array();
  nlohmann::json colours = nlohmann::json::array();
  double sum = 0.0;
  int count = 0, over = 0;
  for (int f = 0; f < spec.frames(); ++f) {
    double worst = -1.0;
    if (f < covered)
      for (int j = 0; j < spec.n_joints(); ++j) {
        if (spec.mask(j, f) != 1.0) continue;
        const double e = (joints.block<3, 1>(3 * j, f) - spec.targets.block<3, 1>(3 * j, f)).norm();
        sum += e;
        ++count;
        over += e > threshold;
        worst = std::max(worst, e);
      }
    per_frame.push_back(worst < 0 ? nlohmann::json(nullptr) : nlohmann::json(worst));
    colours.push_back(worst < 0 ? nlohmann::json(nullptr) : nlohmann::json(overlay_colour(worst, threshold)));
  }
  return {{"motion_id", motion_id},
          {"threshold", threshold},
          {"frames", spec.frames()},
          {"covered_frames", covered},
          {"avg_err", count ? sum / count : 0.0},
          {"loc_err", count ? static_cast<double>(over) / count : 0.0},
          {"traj_err", over > 0 ? 1.0 : 0.0},
          {"per_frame", per_frame},
          {"colors", colours}};
}

nlohmann::json Service::path_spec(const nlohmann::json& body) const {
  const auto m = require_model();
  ConfigReader r(body, "request");
  require(r.has("points") && r.at("points").is_array(), ErrorKind::invalid_input,
          "request.points: expected an array of [x, z] points");
  const auto& pts = r.at("points");
  require(pts.size() >= 2, ErrorKind::invalid_input, "request.points: need at least two points");
  Eigen::MatrixXd points(static_cast<Eigen::Index>(pts.size()), 2);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto& p = pts[i];
    require(p.is_array() && p.size() == 2 && p[0].is_number() && p[1].is_number(), ErrorKind::invalid_input,
            "request.points[" + std::to_string(i) + "]: expected [x, z]");
    points(static_cast<Eigen::Index>(i), 0) = p[0].get<double>();
    points(static_cast<Eigen::Index>(i), 1) = p[1].get<double>();
  }
  require(points.allFinite(), ErrorKind::invalid_input, "request.points: must be finite");
  if (r.has("timestamps")) r.at("timestamps");  // draw times are informational
  std::string text;
  r.get("text", text);
  int frames = m->model->vae.config.max_frames;
  r.get("frames", frames);
  std::optional<double> height;
  if (r.has("pelvis_height")) {
    double h = 0.0;
    r.get("pelvis_height", h);
    height = h;
  }
  r.reject_unknown();
  check_field(frames >= 2 && frames <= m->model->vae.config.max_frames, "request.frames",
              "must lie in [2, " + std::to_string(m->model->vae.config.max_frames) + "]");
  const auto skeleton = motion::skeleton_for_joints(m->model->vae.config.n_joints);
  return editing::to_json(
      editing::build_path_following_spec(editing::resample_polyline(points, frames), text, skeleton, height));
}

nlohmann::json Service::upper_body_spec(const nlohmann::json& body) const {
  ConfigReader r(body, "request");
  std::string motion_id, text;
  r.get("motion_id", motion_id);
  r.get("text", text);
  r.reject_unknown();
  const auto joints = stored_joints(store_, motion_id);
  return editing::to_json(editing::build_upper_body_spec(
      joints, text, motion::skeleton_for_joints(static_cast<int>(joints.rows() / 3))));
}

nlohmann::json Service::inbetween_spec(const nlohmann::json& body) const {
  const auto m = require_model();
  ConfigReader r(body, "request");
  std::string motion_id, end_motion_id, text;
  int n_ctx = 0;
  int frames = m->model->vae.config.max_frames;
  r.get("motion_id", motion_id);
  r.get("end_motion_id", end_motion_id);
  r.get("text", text);
  r.get("n_ctx", n_ctx);
  r.get("frames", frames);
  r.reject_unknown();
  check_field(n_ctx >= 1, "request.n_ctx", "must be >= 1");
  check_field(frames >= 2 * n_ctx && frames <= m->model->vae.config.max_frames, "request.frames",
              "must lie in [2 n_ctx, " + std::to_string(m->model->vae.config.max_frames) + "]");
  const auto start = stored_joints(store_, motion_id);
  const auto end = end_motion_id.empty() ? start : stored_joints(store_, end_motion_id);
  require(start.cols() >= n_ctx && end.cols() >= n_ctx, ErrorKind::shape_mismatch,
          "source motions are shorter than n_ctx");
  return editing::to_json(editing::build_inbetweening_spec(start.leftCols(n_ctx), end.rightCols(n_ctx), n_ctx,
                                                           frames, text,
                                                           motion::skeleton_for_joints(static_cast<int>(start.rows() / 3))));
}

}  // namespace mola::service
