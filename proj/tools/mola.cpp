// Copyright 2026 The mola Authors
// SPDX-License-Identifier: Apache-2.0

// mola command-line interface.
//
// Exit codes: 0 success, 1 runtime failure, 2 invalid configuration (the
// error JSON names the field), 3 missing checkpoint or input.

#include "mola/config.hpp"
#include "mola/data/synthetic.hpp"
#include "mola/diffusion/sampler.hpp"
#include "mola/diffusion/stage2.hpp"
#include "mola/editing/edit_spec.hpp"
#include "mola/editing/guidance.hpp"
#include "mola/error.hpp"
#include "mola/eval/ablation.hpp"
#include "mola/eval/evaluate.hpp"
#include "mola/eval/evaluators.hpp"
#include "mola/eval/metrics.hpp"
#include "mola/io.hpp"
#include "mola/motion/motion_file.hpp"
#include "mola/service/http.hpp"
#include "mola/service/store.hpp"
#include "mola/vae/stage1.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mola;

namespace {

constexpr const char* kVersion = "1.0.0";
constexpr const char* kRunPlaceholder = "{run}";
constexpr const char* kOutPlaceholder = "{out}";

struct Context {
  bool json_output = false;
  bool replaying = false;
};

std::optional<std::uint64_t> env_seed(const Context& ctx) {
  if (ctx.replaying) return std::nullopt;
  const char* v = std::getenv("MOLA_SEED");
  if (!v || !*v) return std::nullopt;
  char* end = nullptr;
  const unsigned long long s = std::strtoull(v, &end, 10);
  if (*end != '\0' || v[0] == '-') throw ConfigError("MOLA_SEED", std::string("not a non-negative integer: ") + v);
  return s;
}

template <typename T>
T seed_or_env(const Context& ctx, T seed) {
  if (const auto s = env_seed(ctx)) return static_cast<T>(*s);
  return seed;
}

std::string abs_path(const fs::path& p) { return fs::absolute(p).lexically_normal().string(); }

/// Run directory: run.json snapshot, log.txt, outputs.
class RunDir {
 public:
  RunDir(fs::path dir, const Context& ctx, std::string stem = "")
      : dir_(std::move(dir)), ctx_(ctx), stem_(std::move(stem)) {
    fs::create_directories(dir_);
    log_.open(dir_ / (stem_.empty() ? "log.txt" : stem_ + ".log"), std::ios::trunc);
  }

  const fs::path& dir() const { return dir_; }
  fs::path snapshot_path() const { return dir_ / (stem_.empty() ? "run.json" : stem_ + ".run.json"); }

  void log(const std::string& line) {
    log_ << line << '\n';
    log_.flush();
    if (!ctx_.json_output) std::cerr << line << '\n';
  }

  /// `args` reproduce the run when {run} is replaced by this directory and
  /// {out} by a fresh output location.
  void snapshot(const std::vector<std::string>& args, const json& config, const json& extra = json::object()) {
    json j = {{"version", kVersion}, {"args", args}, {"config", config}};
    for (const auto& [k, v] : extra.items()) j[k] = v;
    write_json(snapshot_path(), j);
  }

  fs::path config_path() const { return dir_ / (stem_.empty() ? "config.json" : stem_ + ".config.json"); }
  std::string config_placeholder() const {
    return std::string(kRunPlaceholder) + "/" + config_path().filename().string();
  }

 private:
  fs::path dir_;
  const Context& ctx_;
  std::string stem_;
  std::ofstream log_;
};

void emit(const Context& ctx, const json& result, const std::string& human) {
  if (ctx.json_output)
    std::cout << result.dump() << std::endl;
  else
    std::cout << human << std::endl;
}

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  auto j = load_config_file(path);
  if (j.is_null()) return json::object();
  if (!j.is_object()) throw ConfigError("<root>", "config file must hold a mapping");
  return j;
}

json section(const json& config, const std::string& key) {
  return config.contains(key) ? config[key] : json::object();
}

struct DatasetSource {
  data::DatasetSplit split;
  json config;                   // {"n", "seed", "skeleton"} when built from config
  std::string path;              // when loaded
};

DatasetSource dataset_from(const std::string& path, const json& config, const Context& ctx) {
  DatasetSource src;
  if (!path.empty()) {
    require(fs::exists(fs::path(path) / "manifest.json"), ErrorKind::not_found, "no dataset at " + path);
    src.split = data::load_dataset(path);
    src.path = abs_path(path);
    return src;
  }
  int n = 1000, skeleton = 22;
  std::uint64_t seed = 0;
  const json spec = section(config, "dataset");
  ConfigReader r(spec, "dataset");
  r.get("n", n);
  r.get("seed", seed);
  r.get("skeleton", skeleton);
  r.reject_unknown();
  check_field(n >= 10, "dataset.n", "must be >= 10");
  src.split = data::build_dataset(n, seed, motion::skeleton_for_joints(skeleton));
  src.config = {{"n", n}, {"seed", seed}, {"skeleton", skeleton}};
  return src;
}

void require_checkpoint(const fs::path& dir, const char* file, const std::string& what) {
  require(fs::exists(dir / file), ErrorKind::not_found, "no " + what + " checkpoint at " + dir.string());
}

// ---------------------------------------------------------------- dataset

struct DatasetArgs {
  int n = 1000;
  std::uint64_t seed = 0;
  int skeleton = 22;
  std::string out;
};

int cmd_dataset_build(const DatasetArgs& a, const Context& ctx) {
  const std::uint64_t seed = seed_or_env(ctx, a.seed);
  check_field(a.n >= 10, "n", "must be >= 10");
  check_field(a.skeleton == 5 || a.skeleton == 22, "skeleton", "must be 5 or 22");
  RunDir run(a.out, ctx);
  run.log("building " + std::to_string(a.n) + " motions, seed " + std::to_string(seed));
  const auto ds = data::build_dataset(a.n, seed, motion::skeleton_for_joints(a.skeleton));
  data::save_dataset(ds, a.out);
  run.snapshot({"dataset", "build", "--n", std::to_string(a.n), "--seed", std::to_string(seed), "--skeleton",
                std::to_string(a.skeleton), "--out", kOutPlaceholder},
               {{"dataset", {{"n", a.n}, {"seed", seed}, {"skeleton", a.skeleton}}}});
  const json result = {{"out", abs_path(a.out)}, {"train", ds.train.size()}, {"test", ds.test.size()}, {"seed", seed}};
  emit(ctx, result, "dataset written to " + a.out + " (" + std::to_string(ds.train.size()) + " train, " +
                        std::to_string(ds.test.size()) + " test)");
  return 0;
}

// ---------------------------------------------------------------- train

struct TrainVaeArgs {
  std::string config, dataset, adversary, out;
  int dz = 0;
  int iterations = 0;
  bool resume = false;
};

int cmd_train_vae(const TrainVaeArgs& a, const Context& ctx) {
  const json file = load_config(a.config);
  const auto src = dataset_from(a.dataset, file, ctx);
  json vae_json = section(file, "vae");
  if (!vae_json.contains("n_joints")) vae_json["n_joints"] = src.split.skeleton.n_joints;
  auto config = vae::VaeConfig::from_json(vae_json);
  if (!a.adversary.empty()) {
    try {
      config.adversary = vae::adversary_from_string(a.adversary);
    } catch (const Error&) {
      throw ConfigError("vae.adversary", "expected none, gan or san");
    }
  }
  if (a.dz > 0) config.d_z = a.dz;
  if (a.iterations > 0) config.iterations = a.iterations;
  config.seed = seed_or_env(ctx, config.seed);
  check_field(config.n_joints == src.split.skeleton.n_joints, "vae.n_joints",
              "does not match the dataset skeleton (" + std::to_string(src.split.skeleton.n_joints) + ")");
  config.validate();

  RunDir run(a.out, ctx);
  json resolved = {{"vae", config.to_json()}};
  if (!src.config.is_null()) resolved["dataset"] = src.config;
  write_json(run.config_path(), resolved);
  std::vector<std::string> args = {"train", "vae", "--config", run.config_placeholder()};
  if (!src.path.empty()) args.insert(args.end(), {"--dataset", src.path});
  args.insert(args.end(), {"--out", kOutPlaceholder});
  run.snapshot(args, resolved);

  vae::Stage1Options options;
  options.out_dir = a.out;
  options.resume = a.resume;
  options.on_log = [&](const vae::Stage1LogRow& r) {
    std::ostringstream s;
    s << "it " << r.iteration << " lr " << r.lr << " loss " << r.loss << " recon " << r.reconstruction << " kl "
      << r.kl << " adv " << r.adversarial << " disc " << r.discriminator;
    run.log(s.str());
  };
  const auto result = vae::train_stage1(src.split, config, options);
  const json out = {{"out", abs_path(a.out)},
                    {"checkpoint_id", result.bundle.checkpoint_id},
                    {"iterations", result.iterations_done},
                    {"test_mpjpe_mm", vae::reconstruction_mpjpe(result.bundle, src.split.test)}};
  emit(ctx, out, "VAE checkpoint " + result.bundle.checkpoint_id + " written to " + a.out);
  return 0;
}

struct TrainLdmArgs {
  std::string vae_ckpt, config, dataset, out;
  int iterations = 0;
  bool resume = false;
};

int cmd_train_ldm(const TrainLdmArgs& a, const Context& ctx) {
  require_checkpoint(a.vae_ckpt, "config.json", "VAE");
  const auto vae = vae::load_vae(a.vae_ckpt);
  const json file = load_config(a.config);
  const auto src = dataset_from(a.dataset, file, ctx);
  auto config = diffusion::DiffusionConfig::from_json(section(file, "ldm"));
  if (a.iterations > 0) config.iterations = a.iterations;
  config.seed = seed_or_env(ctx, config.seed);
  config.validate();
  check_field(vae.config.n_joints == src.split.skeleton.n_joints, "dataset.skeleton",
              "does not match the VAE (" + std::to_string(vae.config.n_joints) + " joints)");

  RunDir run(a.out, ctx);
  json resolved = {{"ldm", config.to_json()}};
  if (!src.config.is_null()) resolved["dataset"] = src.config;
  write_json(run.config_path(), resolved);
  std::vector<std::string> args = {"train", "ldm", "--vae-ckpt", abs_path(a.vae_ckpt), "--config",
                                   run.config_placeholder()};
  if (!src.path.empty()) args.insert(args.end(), {"--dataset", src.path});
  args.insert(args.end(), {"--out", kOutPlaceholder});
  run.snapshot(args, resolved, {{"vae_checkpoint", vae.checkpoint_id}});

  diffusion::Stage2Options options;
  options.out_dir = a.out;
  options.resume = a.resume;
  options.on_log = [&](const diffusion::Stage2LogRow& r) {
    std::ostringstream s;
    s << "it " << r.iteration << " lr " << r.lr << " eps_mse " << r.eps_mse;
    if (r.val_eps_mse >= 0) s << " val_eps_mse " << r.val_eps_mse;
    run.log(s.str());
  };
  const auto result = diffusion::train_stage2(vae, src.split, config, options);
  const json out = {{"out", abs_path(a.out)},
                    {"checkpoint_id", result.bundle.checkpoint_id},
                    {"iterations", result.iterations_done},
                    {"val_eps_mse", result.final_val_eps_mse}};
  emit(ctx, out, "LDM checkpoint " + result.bundle.checkpoint_id + " written to " + a.out);
  return 0;
}

// ---------------------------------------------------------------- sample / edit

diffusion::LdmBundle load_model(const std::string& dir) {
  require_checkpoint(dir, "config.json", "LDM");
  require_checkpoint(dir, "weights.bin", "LDM");
  return diffusion::load_ldm(dir);
}

struct SampleArgs {
  std::string ckpt, text, out;
  std::uint64_t seed = 0;
  int n = 1;
  std::optional<double> cfg_scale, delta;
  std::optional<int> steps;
};

int cmd_sample(const SampleArgs& a, const Context& ctx) {
  const auto model = load_model(a.ckpt);
  auto options = diffusion::SamplerOptions::from_config(model.config);
  if (a.cfg_scale) options.cfg_scale = *a.cfg_scale;
  if (a.steps) options.steps = *a.steps;
  if (a.delta) options.delta = *a.delta;
  try {
    options.validate(model.config.diffusion_steps);
  } catch (const ConfigError& e) {
    throw ConfigError("sampler." + e.field(), e.what());
  }
  check_field(a.n >= 1, "n", "must be >= 1");
  check_field(!a.text.empty(), "text", "must not be empty");
  model.tokenizer.encode(a.text);
  const std::uint64_t seed = seed_or_env(ctx, a.seed);

  RunDir run(a.out, ctx);
  std::ostringstream cfg, steps, delta;
  cfg.precision(17);
  delta.precision(17);
  cfg << options.cfg_scale;
  delta << options.delta;
  run.snapshot({"sample", "--ckpt", abs_path(a.ckpt), "--text", a.text, "--seed", std::to_string(seed), "--n",
                std::to_string(a.n), "--cfg-scale", cfg.str(), "--steps", std::to_string(options.steps), "--delta",
                delta.str(), "--out", kOutPlaceholder},
               {{"sampler", options.to_json()}, {"text", a.text}, {"seed", seed}, {"n", a.n}},
               {{"checkpoint_id", model.checkpoint_id}});
  json files = json::array();
  for (int i = 0; i < a.n; ++i) {
    const std::uint64_t s = seed + static_cast<std::uint64_t>(i);
    const auto sample = diffusion::sample_text_to_motion(model, a.text, s, options);
    char name[32];
    std::snprintf(name, sizeof(name), "motion_%03d.json", i);
    motion::write_motion_file(run.dir() / name, sample.to_file());
    run.log(std::string(name) + ": seed " + std::to_string(s) + ", " + std::to_string(sample.motion.length) +
            " frames");
    files.push_back({{"path", abs_path(run.dir() / name)}, {"seed", s}, {"length", sample.motion.length}});
  }
  emit(ctx, {{"out", abs_path(a.out)}, {"motions", files}},
       std::to_string(a.n) + " motion(s) written to " + a.out);
  return 0;
}

struct EditArgs {
  std::string ckpt, spec, out;
  std::uint64_t seed = 0;
};

int cmd_edit(const EditArgs& a, const Context& ctx) {
  const auto model = load_model(a.ckpt);
  require(fs::exists(a.spec), ErrorKind::not_found, "no edit spec at " + a.spec);
  json body = read_json(a.spec);
  const json request = service::resolve_edit_request(model, body);
  const std::uint64_t seed = seed_or_env(ctx, a.seed);
  const auto spec = editing::edit_spec_from_json(request["spec"]);
  const auto guidance = editing::GuidanceConfig::from_json(request["guidance"], {});

  RunDir run(a.out, ctx);
  write_json(run.dir() / "spec.json", body);
  run.snapshot({"edit", "--ckpt", abs_path(a.ckpt), "--spec", std::string(kRunPlaceholder) + "/spec.json", "--seed",
                std::to_string(seed), "--out", kOutPlaceholder},
               request, {{"checkpoint_id", model.checkpoint_id}, {"seed", seed}});
  const auto result = editing::guided_sample(model, spec, seed, guidance);
  auto file = result.sample.to_file();
  file.metadata["edit"]["spec"] = request["spec"];
  motion::write_motion_file(run.dir() / "motion.json", file);
  const auto errors = eval::control_errors({result.decoded_joints}, {spec});
  const json out = {{"out", abs_path(a.out)},
                    {"motion", abs_path(run.dir() / "motion.json")},
                    {"final_loss", result.final_loss},
                    {"gradient_evaluations", result.gradient_evaluations},
                    {"control_errors",
                     {{"traj_err", errors.traj_err}, {"loc_err", errors.loc_err}, {"avg_err", errors.avg_err}}}};
  run.log("final loss " + std::to_string(result.final_loss) + ", avg err " + std::to_string(errors.avg_err) + " m");
  emit(ctx, out, "edited motion written to " + (run.dir() / "motion.json").string());
  return 0;
}

// ---------------------------------------------------------------- eval / ablate

eval::EvalEncoders evaluator_from(const std::string& dir, const json& config, const data::DatasetSplit& dataset,
                                  RunDir& run, json& resolved) {
  if (!dir.empty()) {
    require_checkpoint(dir, "weights.bin", "evaluator");
    return eval::load_eval_encoders(dir);
  }
  const auto ec = eval::EvaluatorConfig::from_json(section(config, "evaluator"));
  resolved["evaluator"] = ec.to_json();
  run.log("training evaluators for " + std::to_string(ec.iterations) + " iterations");
  std::vector<eval::EvaluatorLogRow> log;
  auto encoders = eval::train_eval_encoders(dataset, ec, &log);
  if (!log.empty()) run.log("evaluator final loss " + std::to_string(log.back().loss));
  return encoders;
}

struct EvalArgs {
  std::string ckpt, dataset, metrics = "all", out, evaluator, config;
  std::uint64_t seed = 0;
  int samples = 0;
};

int cmd_eval(const EvalArgs& a, const Context& ctx) {
  std::set<std::string> metrics;
  {
    std::stringstream ss(a.metrics);
    for (std::string m; std::getline(ss, m, ',');) {
      if (m != "all" && m != "reconstruction" && m != "generation" && m != "control")
        throw ConfigError("metrics", "unknown metric group '" + m + "' (all, reconstruction, generation, control)");
      metrics.insert(m);
    }
  }
  check_field(!metrics.empty(), "metrics", "must not be empty");
  const bool reconstruction_only = metrics == std::set<std::string>{"reconstruction"};
  require(fs::exists(a.ckpt), ErrorKind::not_found, "no checkpoint at " + a.ckpt);
  const bool is_ldm = fs::exists(fs::path(a.ckpt) / "vae" / "config.json");
  check_field(is_ldm || reconstruction_only, "metrics", "generation and control metrics need an LDM checkpoint");
  const json file = load_config(a.config);
  const auto src = dataset_from(a.dataset, file, ctx);
  const std::uint64_t seed = seed_or_env(ctx, a.seed);

  const fs::path out(a.out);
  RunDir run(out.has_parent_path() ? out.parent_path() : fs::path("."), ctx, out.stem().string());
  json resolved = json::object();
  if (!src.config.is_null()) resolved["dataset"] = src.config;
  const auto encoders = evaluator_from(a.evaluator, file, src.split, run, resolved);
  write_json(run.config_path(), resolved);
  std::vector<std::string> args = {"eval", "--ckpt", abs_path(a.ckpt), "--metrics", a.metrics, "--seed",
                                   std::to_string(seed), "--samples", std::to_string(a.samples), "--config",
                                   run.config_placeholder()};
  if (!src.path.empty()) args.insert(args.end(), {"--dataset", src.path});
  if (!a.evaluator.empty()) args.insert(args.end(), {"--evaluator", abs_path(a.evaluator)});
  args.insert(args.end(), {"--out", kOutPlaceholder});
  run.snapshot(args, resolved);

  json report;
  if (reconstruction_only) {
    const auto vae = is_ldm ? vae::load_vae(fs::path(a.ckpt) / "vae") : vae::load_vae(a.ckpt);
    std::vector<motion::MotionSequence> real, recon;
    const auto& test = src.split.test;
    const std::size_t n = a.samples > 0 ? std::min<std::size_t>(test.size(), a.samples) : test.size();
    std::vector<data::DatasetItem> items(test.begin(), test.begin() + static_cast<long>(n));
    for (const auto& item : items) {
      real.push_back(item.motion);
      recon.push_back(vae::reconstruct_motion(vae, item.motion));
    }
    report = {{"metrics",
               {{"rfid", eval::rfid(encoders, recon, real)}, {"mpjpe_mm", vae::reconstruction_mpjpe(vae, items)}}},
              {"metadata",
               {{"banner", eval::kEvaluatorBanner},
                {"hardware", eval::hardware_string()},
                {"checkpoints", {{"vae", vae.checkpoint_id}, {"evaluator", encoders.checkpoint_id}}},
                {"counts", {{"reconstructed", n}}}}}};
  } else {
    const auto model = load_model(a.ckpt);
    eval::EvaluationOptions options;
    options.samples = a.samples;
    options.seed = seed;
    options.sampler = diffusion::SamplerOptions::from_config(model.config);
    options.guidance.sampler = options.sampler;
    if (!metrics.count("all") && !metrics.count("control")) options.control_prompts = 0;
    options.on_progress = [&](const std::string& m) { run.log(m); };
    report = eval::evaluate_model(model, src.split, encoders, options).to_json();
  }
  write_json(out, report);
  emit(ctx, report, "report written to " + a.out + "\n" + report["metrics"].dump(2));
  return 0;
}

struct AblateArgs {
  std::string grid, dataset, evaluator, out;
  int seeds = 3;
  std::uint64_t seed = 0;
};

int cmd_ablate(const AblateArgs& a, const Context& ctx) {
  require(fs::exists(a.grid), ErrorKind::not_found, "no grid file at " + a.grid);
  json file = load_config(a.grid);
  check_field(a.seeds >= 1, "seeds", "must be >= 1");
  const auto src = dataset_from(a.dataset, file, ctx);
  json grid_json = file;
  grid_json.erase("dataset");
  grid_json.erase("evaluator");
  if (grid_json.contains("ablation")) grid_json = grid_json["ablation"];
  const auto grid = eval::AblationGrid::from_json(grid_json);
  const std::uint64_t base = seed_or_env(ctx, a.seed);
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < a.seeds; ++i) seeds.push_back(base + static_cast<std::uint64_t>(i));

  RunDir run(a.out, ctx);
  json resolved = {{"ablation", grid.to_json()}};
  if (!src.config.is_null()) resolved["dataset"] = src.config;
  const auto encoders = evaluator_from(a.evaluator, file, src.split, run, resolved);
  write_json(run.config_path(), resolved);
  std::vector<std::string> args = {"ablate", "--grid", run.config_placeholder(), "--seeds", std::to_string(a.seeds),
                                   "--seed", std::to_string(base)};
  if (!src.path.empty()) args.insert(args.end(), {"--dataset", src.path});
  if (!a.evaluator.empty()) args.insert(args.end(), {"--evaluator", abs_path(a.evaluator)});
  args.insert(args.end(), {"--out", kOutPlaceholder});
  run.snapshot(args, resolved);

  eval::AblationOptions options;
  options.work_dir = run.dir() / "cells";
  options.on_progress = [&](const std::string& m) { run.log(m); };
  const auto report = eval::run_ablation_suite(grid, src.split, seeds, encoders, options);
  atomic_write(run.dir() / "ablation.csv", report.to_csv());
  write_json(run.dir() / "ablation.json", report.to_json());
  emit(ctx, {{"out", abs_path(a.out)}, {"rows", report.rows.size()}, {"csv", abs_path(run.dir() / "ablation.csv")}},
       report.to_csv());
  return 0;
}

// ---------------------------------------------------------------- serve / checkpoints / replay

struct ServeArgs {
  std::string config, workspace, host, checkpoint;
  std::optional<int> port, workers;
};

int cmd_serve(const ServeArgs& a, const Context& ctx) {
  auto config = service::ServiceConfig::from_json(load_config(a.config));
  config.apply_environment();
  if (!a.workspace.empty()) config.workspace = a.workspace;
  if (a.port) config.port = *a.port;
  if (!a.host.empty()) config.host = a.host;
  if (a.workers) config.workers = *a.workers;
  if (!a.checkpoint.empty()) config.checkpoint = a.checkpoint;
  config.validate();

  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  service::Service svc(config);
  write_json(config.workspace / "service.json", config.to_json());
  service::HttpServer server(svc);
  const int port = server.bind(config.host, config.port);
  server.start();
  emit(ctx, {{"host", config.host}, {"port", port}, {"workspace", abs_path(config.workspace)}},
       "serving " + abs_path(config.workspace) + " on http://" + config.host + ":" + std::to_string(port));
  int sig = 0;
  sigwait(&signals, &sig);
  server.stop();
  return 0;
}

struct InstallArgs {
  std::string ckpt, name, workspace;
  bool activate = false;
};

int cmd_checkpoint_install(const InstallArgs& a, const Context& ctx) {
  const auto model = load_model(a.ckpt);
  service::ServiceConfig config;
  config.apply_environment();
  if (!a.workspace.empty()) config.workspace = a.workspace;
  service::WorkspaceStore store(config.workspace);
  const auto dir = store.checkpoint_dir(a.name);
  if (fs::exists(dir)) throw ConfigError("name", "checkpoint '" + a.name + "' already exists");
  const auto staging = store.root() / "checkpoints" / ("." + a.name + ".staging");
  fs::remove_all(staging);
  diffusion::save_ldm(staging, model);
  fs::rename(staging, dir);
  store.register_checkpoint(a.name);
  if (a.activate) store.set_active_checkpoint(a.name);
  emit(ctx, {{"name", a.name}, {"checkpoint_id", model.checkpoint_id}, {"workspace", abs_path(config.workspace)}},
       "installed " + a.name + " (" + model.checkpoint_id + ")");
  return 0;
}

int dispatch(std::vector<std::string> args, Context ctx);

struct ReplayArgs {
  std::string run, out;
};

int cmd_replay(const ReplayArgs& a, Context ctx) {
  fs::path snapshot = a.run;
  if (fs::is_directory(snapshot)) snapshot /= "run.json";
  require(fs::exists(snapshot), ErrorKind::not_found, "no run snapshot at " + snapshot.string());
  const json j = read_json(snapshot);
  const std::string run_dir = abs_path(snapshot.parent_path());
  std::vector<std::string> args;
  for (std::string arg : j.at("args").get<std::vector<std::string>>()) {
    if (arg == kOutPlaceholder) arg = a.out;
    if (arg.rfind(kRunPlaceholder, 0) == 0) arg = run_dir + arg.substr(std::string(kRunPlaceholder).size());
    args.push_back(arg);
  }
  ctx.replaying = true;
  return dispatch(std::move(args), ctx);
}

// ---------------------------------------------------------------- dispatch

json error_json(const std::exception& e, const std::string& kind) {
  json err = {{"kind", kind}, {"message", e.what()}};
  if (const auto* c = dynamic_cast<const ConfigError*>(&e)) err["field"] = c->field();
  return {{"error", err}};
}

int dispatch(std::vector<std::string> args, Context ctx) {
  CLI::App app("mola: text-to-motion latent diffusion with training-free guided editing", "mola");
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  app.add_flag("--json", ctx.json_output, "Machine-readable JSON on stdout");

  std::function<int()> action;

  auto* dataset = app.add_subcommand("dataset", "Synthetic dataset");
  dataset->require_subcommand(1);
  DatasetArgs da;
  auto* build = dataset->add_subcommand("build", "Build and save a synthetic dataset");
  build->add_option("--n", da.n, "Number of motions")->capture_default_str();
  build->add_option("--seed", da.seed, "Generator seed")->capture_default_str();
  build->add_option("--skeleton", da.skeleton, "Joint count (5 or 22)")->capture_default_str();
  build->add_option("--out", da.out, "Output directory")->required();
  build->callback([&] { action = [&] { return cmd_dataset_build(da, ctx); }; });

  auto* train = app.add_subcommand("train", "Train a model");
  train->require_subcommand(1);
  TrainVaeArgs tv;
  auto* tvae = train->add_subcommand("vae", "Stage 1: motion VAE with adversarial training");
  tvae->add_option("--config", tv.config, "YAML or JSON config (sections: dataset, vae)");
  tvae->add_option("--dataset", tv.dataset, "Dataset directory (default: build from the config)");
  tvae->add_option("--adversary", tv.adversary, "none, gan or san");
  tvae->add_option("--dz", tv.dz, "Latent channels");
  tvae->add_option("--iterations", tv.iterations, "Override the iteration count");
  tvae->add_flag("--resume", tv.resume, "Resume from the output directory");
  tvae->add_option("--out", tv.out, "Run and checkpoint directory")->required();
  tvae->callback([&] { action = [&] { return cmd_train_vae(tv, ctx); }; });

  TrainLdmArgs tl;
  auto* tldm = train->add_subcommand("ldm", "Stage 2: conditional latent diffusion on a frozen VAE");
  tldm->add_option("--vae-ckpt", tl.vae_ckpt, "VAE checkpoint directory")->required();
  tldm->add_option("--config", tl.config, "YAML or JSON config (sections: dataset, ldm)");
  tldm->add_option("--dataset", tl.dataset, "Dataset directory (default: build from the config)");
  tldm->add_option("--iterations", tl.iterations, "Override the iteration count");
  tldm->add_flag("--resume", tl.resume, "Resume from the output directory");
  tldm->add_option("--out", tl.out, "Run and checkpoint directory")->required();
  tldm->callback([&] { action = [&] { return cmd_train_ldm(tl, ctx); }; });

  SampleArgs sa;
  auto* sample = app.add_subcommand("sample", "Text-to-motion generation");
  sample->add_option("--ckpt", sa.ckpt, "LDM checkpoint directory")->required();
  sample->add_option("--text", sa.text, "Caption")->required();
  sample->add_option("--seed", sa.seed, "Seed of the first sample")->capture_default_str();
  sample->add_option("--n", sa.n, "Number of samples (seeds seed, seed+1, ...)")->capture_default_str();
  sample->add_option("--cfg-scale", sa.cfg_scale, "Guidance scale s");
  sample->add_option("--steps", sa.steps, "Sampling steps");
  sample->add_option("--delta", sa.delta, "Activation threshold for the length");
  sample->add_option("--out", sa.out, "Output directory")->required();
  sample->callback([&] { action = [&] { return cmd_sample(sa, ctx); }; });

  EditArgs ea;
  auto* edit = app.add_subcommand("edit", "Guided editing from an edit spec");
  edit->add_option("--ckpt", ea.ckpt, "LDM checkpoint directory")->required();
  edit->add_option("--spec", ea.spec, "Edit spec JSON")->required();
  edit->add_option("--seed", ea.seed, "Seed")->capture_default_str();
  edit->add_option("--out", ea.out, "Output directory")->required();
  edit->callback([&] { action = [&] { return cmd_edit(ea, ctx); }; });

  EvalArgs va;
  auto* ev = app.add_subcommand("eval", "Evaluation metrics");
  ev->add_option("--ckpt", va.ckpt, "LDM (or VAE, for reconstruction) checkpoint directory")->required();
  ev->add_option("--dataset", va.dataset, "Dataset directory (default: build from the config)");
  ev->add_option("--metrics", va.metrics, "all, or a comma list of reconstruction, generation, control")
      ->capture_default_str();
  ev->add_option("--evaluator", va.evaluator, "Evaluator directory (default: train one)");
  ev->add_option("--config", va.config, "YAML or JSON config (sections: dataset, evaluator)");
  ev->add_option("--seed", va.seed, "Evaluation seed")->capture_default_str();
  ev->add_option("--samples", va.samples, "Test captions to use (0: all)")->capture_default_str();
  ev->add_option("--out", va.out, "Report JSON path")->required();
  ev->callback([&] { action = [&] { return cmd_eval(va, ctx); }; });

  AblateArgs aa;
  auto* ablate = app.add_subcommand("ablate", "Ablation grid");
  ablate->add_option("--grid", aa.grid, "Grid YAML or JSON")->required();
  ablate->add_option("--seeds", aa.seeds, "Number of seeds")->capture_default_str();
  ablate->add_option("--seed", aa.seed, "First seed")->capture_default_str();
  ablate->add_option("--dataset", aa.dataset, "Dataset directory (default: build from the grid file)");
  ablate->add_option("--evaluator", aa.evaluator, "Evaluator directory (default: train one)");
  ablate->add_option("--out", aa.out, "Output directory")->required();
  ablate->callback([&] { action = [&] { return cmd_ablate(aa, ctx); }; });

  ServeArgs sv;
  auto* serve = app.add_subcommand("serve", "HTTP service");
  serve->add_option("--config", sv.config, "YAML or JSON config (section: service)");
  serve->add_option("--workspace", sv.workspace, "Workspace directory");
  serve->add_option("--port", sv.port, "Port (0: any free port)");
  serve->add_option("--host", sv.host, "Bind address");
  serve->add_option("--workers", sv.workers, "Inference worker threads");
  serve->add_option("--checkpoint", sv.checkpoint, "Checkpoint to activate at startup");
  serve->callback([&] { action = [&] { return cmd_serve(sv, ctx); }; });

  auto* checkpoint = app.add_subcommand("checkpoint", "Workspace checkpoints");
  checkpoint->require_subcommand(1);
  InstallArgs ia;
  auto* install = checkpoint->add_subcommand("install", "Copy an LDM checkpoint into a workspace");
  install->add_option("--ckpt", ia.ckpt, "LDM checkpoint directory")->required();
  install->add_option("--name", ia.name, "Name in the workspace")->required();
  install->add_option("--workspace", ia.workspace, "Workspace directory");
  install->add_flag("--activate", ia.activate, "Make it the active checkpoint");
  install->callback([&] { action = [&] { return cmd_checkpoint_install(ia, ctx); }; });

  ReplayArgs ra;
  auto* replay = app.add_subcommand("replay", "Re-run a run directory from its snapshot");
  replay->add_option("run", ra.run, "Run directory or snapshot file")->required();
  replay->add_option("--out", ra.out, "New output location")->required();
  replay->callback([&] { action = [&] { return cmd_replay(ra, ctx); }; });

  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() != 0) throw;
    return app.exit(e);
  }
  return action ? action() : 0;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  const bool json_errors = std::find(args.begin(), args.end(), "--json") != args.end();
  auto fail = [&](const std::exception& e, const std::string& kind, int code) {
    const auto body = error_json(e, kind).dump();
    std::cerr << body << std::endl;
    if (json_errors) std::cout << body << std::endl;
    return code;
  };
  try {
    return dispatch(args, Context{});
  } catch (const CLI::ParseError& e) {
    return fail(e, "config", 2);
  } catch (const ConfigError& e) {
    return fail(e, "config", 2);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::not_found) return fail(e, "not_found", 3);
    if (e.kind() == ErrorKind::config) return fail(e, "config", 2);
    return fail(e, to_string(e.kind()), 1);
  } catch (const std::exception& e) {
    return fail(e, "internal", 1);
  }
}
