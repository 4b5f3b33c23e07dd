// Copyright 2026 The mola Authors
// SPDX-License-Identifier: Apache-2.0

#include "mola/diffusion/stage2.hpp"

#include "mola/error.hpp"
#include "mola/io.hpp"
#include "mola/nn/optim.hpp"
#include "mola/nn/serialize.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace mola::diffusion {

using nn::Matrix;
using nn::Tensor;
using nn::Vector;

nn::NamedParameters LdmBundle::parameters() const {
  nn::NamedParameters out;
  text->collect("text", out);
  denoiser->collect("denoiser", out);
  return out;
}

LatentSet encode_latents(const vae::VaeBundle& vae, const std::vector<data::DatasetItem>& items,
                         const Tokenizer& tokenizer) {
  LatentSet set;
  nn::NoGradGuard guard;
  for (const auto& item : items) {
    const auto input = vae::to_vae_input(item.motion, vae.config);
    const auto padded = motion::pad_and_activate(motion::normalize(input, vae.stats), vae.config.max_frames);
    const int frames = static_cast<int>(padded.features.cols());
    const vae::Posterior post = vae.model->encode(Tensor(padded.features), {1, frames});
    set.mean.push_back(post.mean.value());
    set.logvar.push_back(post.logvar.value());
    set.tokens.push_back(tokenizer.encode(item.caption));
    set.captions.push_back(item.caption);
  }
  return set;
}

std::string ldm_checkpoint_id(const LdmBundle& bundle) {
  const std::string own = nn::parameters_hash(bundle.parameters());
  return hash_hex(fnv1a64(own + "/" + bundle.vae.checkpoint_id));
}

namespace {

const char* kLogHeader = "iteration,lr,loss,eps_mse,val_eps_mse,dropped";

std::string format_row(const Stage2LogRow& r) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%d", r.iteration, r.lr, r.loss, r.eps_mse,
                r.val_eps_mse, r.dropped);
  return buf;
}

std::vector<Stage2LogRow> read_log(const std::filesystem::path& path) {
  std::vector<Stage2LogRow> rows;
  if (!std::filesystem::exists(path)) return rows;
  std::istringstream in(read_file(path));
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    Stage2LogRow r;
    if (std::sscanf(line.c_str(), "%d,%lf,%lf,%lf,%lf,%d", &r.iteration, &r.lr, &r.loss, &r.eps_mse, &r.val_eps_mse,
                    &r.dropped) == 6)
      rows.push_back(r);
  }
  return rows;
}

void write_log(const std::filesystem::path& path, const std::vector<Stage2LogRow>& rows) {
  std::string out = std::string(kLogHeader) + "\n";
  for (const auto& r : rows) out += format_row(r) + "\n";
  atomic_write(path, out);
}

Matrix standardize(const Matrix& z, const Vector& mean, const Vector& std) {
  return (z.colwise() - mean).array().colwise() / std.array();
}

nlohmann::json vector_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector vector_from_json(const nlohmann::json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

LdmBundle make_bundle(const vae::VaeBundle& vae, const DiffusionConfig& config, Tokenizer tokenizer,
                      std::uint64_t init_seed) {
  LdmBundle b;
  b.config = config;
  b.vae = vae;
  b.tokenizer = std::move(tokenizer);
  Rng init(init_seed);
  b.text = std::make_shared<TextEncoder>(b.tokenizer.size(), config, init);
  b.denoiser = std::make_shared<Denoiser>(vae.config.d_z, b.latent_length(), config, init);
  b.schedule = config.make_schedule();
  b.latent_mean = Vector::Zero(vae.config.d_z);
  b.latent_std = Vector::Ones(vae.config.d_z);
  return b;
}

struct TrainState {
  long long samples = 0;
  long long drops = 0;
};

void save_training_state(const std::filesystem::path& dir, const LdmBundle& bundle, const nn::AdamW& opt,
                         int iteration, const TrainState& state, const std::vector<Stage2LogRow>& log) {
  save_ldm(dir, bundle);
  opt.save(dir / "opt.bin");
  write_log(dir / "training_log.csv", log);
  write_json(dir / "state.json", {{"iteration", iteration},
                                  {"condition_samples", state.samples},
                                  {"condition_drops", state.drops},
                                  {"seed", bundle.config.seed}});
}

}  // namespace

double validation_eps_mse(const LdmBundle& model, const LatentSet& set, std::uint64_t seed) {
  require(set.size() > 0, ErrorKind::invalid_input, "validation_eps_mse: empty set");
  nn::NoGradGuard guard;
  Rng rng(seed);
  const int d_l = model.latent_length();
  const int d_z = model.d_z();
  constexpr std::size_t kChunk = 64;
  double total = 0.0;
  for (std::size_t start = 0; start < set.size(); start += kChunk) {
    const std::size_t count = std::min(kChunk, set.size() - start);
    Matrix z_t(d_z, static_cast<Eigen::Index>(count) * d_l);
    Matrix eps(d_z, z_t.cols());
    std::vector<int> t(count);
    std::vector<std::vector<int>> tokens;
    for (std::size_t i = 0; i < count; ++i) {
      t[i] = static_cast<int>(rng.uniform_int(1, model.schedule.steps()));
      const Matrix e = rng.normal_matrix(d_z, d_l);
      const Matrix z0 = standardize(set.mean[start + i], model.latent_mean, model.latent_std);
      eps.middleCols(static_cast<Eigen::Index>(i) * d_l, d_l) = e;
      z_t.middleCols(static_cast<Eigen::Index>(i) * d_l, d_l) = forward_diffuse(z0, e, t[i], model.schedule);
      tokens.push_back(set.tokens[start + i]);
    }
    const Matrix pred = (*model.denoiser)(Tensor(z_t), t, (*model.text)(tokens)).value();
    total += (pred - eps).squaredNorm();
  }
  return total / (static_cast<double>(set.size()) * d_z * d_l);
}

Stage2Result train_stage2(const vae::VaeBundle& vae, const data::DatasetSplit& dataset, const DiffusionConfig& config,
                          const Stage2Options& options) {
  config.validate();
  require(vae.model != nullptr, ErrorKind::invalid_input, "train_stage2: VAE not loaded");
  require(!dataset.train.empty() && !dataset.val.empty(), ErrorKind::invalid_input,
          "train_stage2: need non-empty train and val splits");

  Stage2Result result;
  LdmBundle& bundle = result.bundle;
  bundle = make_bundle(vae, config, Tokenizer(data::caption_vocabulary()), Rng::mix(config.seed, 0x2417));

  const LatentSet train = encode_latents(vae, dataset.train, bundle.tokenizer);
  const LatentSet val = encode_latents(vae, dataset.val, bundle.tokenizer);
  const int d_z = bundle.d_z();
  const int d_l = bundle.latent_length();
  {
    Vector sum = Vector::Zero(d_z);
    Vector sq = Vector::Zero(d_z);
    for (const auto& m : train.mean) {
      sum += m.rowwise().sum();
      sq += m.array().square().matrix().rowwise().sum();
    }
    const double n = static_cast<double>(train.size()) * d_l;
    bundle.latent_mean = sum / n;
    bundle.latent_std = (sq / n - bundle.latent_mean.array().square().matrix()).cwiseMax(1e-12).cwiseSqrt();
  }

  nn::AdamW opt(bundle.parameters());
  TrainState state;
  int start = 0;
  if (options.resume && std::filesystem::exists(options.out_dir / "state.json")) {
    const auto saved = read_json(options.out_dir / "state.json");
    nn::load_parameters(options.out_dir / "weights.bin", bundle.parameters());
    opt.load(options.out_dir / "opt.bin");
    start = saved.at("iteration").get<int>();
    state.samples = saved.at("condition_samples").get<long long>();
    state.drops = saved.at("condition_drops").get<long long>();
    result.log = read_log(options.out_dir / "training_log.csv");
  }

  const auto& schedule = bundle.schedule;
  const std::uint64_t val_seed = Rng::mix(config.seed, 0x5a1);
  int it = start;
  for (; it < config.iterations; ++it) {
    if (options.stop_after >= 0 && it >= options.stop_after) break;
    Rng rng(Rng::mix(config.seed, static_cast<std::uint64_t>(it) + 1));
    const int batch = config.batch;
    Matrix z_t(d_z, static_cast<Eigen::Index>(batch) * d_l);
    Matrix eps(d_z, z_t.cols());
    std::vector<int> t(static_cast<std::size_t>(batch));
    std::vector<bool> drop(static_cast<std::size_t>(batch));
    std::vector<std::vector<int>> tokens(static_cast<std::size_t>(batch));
    int dropped = 0;
    for (int b = 0; b < batch; ++b) {
      const auto i = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(train.size()) - 1));
      const auto ub = static_cast<std::size_t>(b);
      t[ub] = static_cast<int>(rng.uniform_int(1, schedule.steps()));
      drop[ub] = rng.bernoulli(config.cond_drop);
      dropped += drop[ub] ? 1 : 0;
      Matrix z0 = train.mean[i];
      if (config.sample_z0)
        z0 += ((0.5 * train.logvar[i].array()).exp() * rng.normal_matrix(d_z, d_l).array()).matrix();
      const Matrix e = rng.normal_matrix(d_z, d_l);
      eps.middleCols(static_cast<Eigen::Index>(b) * d_l, d_l) = e;
      z_t.middleCols(static_cast<Eigen::Index>(b) * d_l, d_l) =
          forward_diffuse(standardize(z0, bundle.latent_mean, bundle.latent_std), e, t[ub], schedule);
      tokens[ub] = train.tokens[i];
    }
    state.samples += batch;
    state.drops += dropped;

    opt.zero_grad();
    const Tensor pred = (*bundle.denoiser)(Tensor(z_t), t, (*bundle.text)(tokens, drop));
    const Tensor loss = nn::mse_loss(pred, eps);
    const double eps_mse = loss.item();
    if (!std::isfinite(eps_mse))
      throw Error(ErrorKind::divergence, "stage 2 iteration " + std::to_string(it) + ": non-finite loss");
    loss.backward();
    const double lr = config.learning_rate(it);
    opt.step(lr);

    const bool last = it + 1 == config.iterations;
    const bool eval = (it + 1) % config.eval_every == 0 || last;
    if (it == 0 || (it + 1) % config.log_every == 0 || eval) {
      Stage2LogRow row{it + 1, lr, eps_mse * d_z * d_l, eps_mse, -1.0, dropped};
      if (eval) row.val_eps_mse = validation_eps_mse(bundle, val, val_seed);
      result.log.push_back(row);
      if (options.on_log) options.on_log(row);
    }
    if (!options.out_dir.empty() && ((it + 1) % config.checkpoint_every == 0 || last)) {
      bundle.checkpoint_id = ldm_checkpoint_id(bundle);
      save_training_state(options.out_dir, bundle, opt, it + 1, state, result.log);
    }
  }
  result.iterations_done = it;
  result.condition_samples = state.samples;
  result.condition_drops = state.drops;
  result.final_val_eps_mse = validation_eps_mse(bundle, val, val_seed);
  bundle.checkpoint_id = ldm_checkpoint_id(bundle);
  if (!options.out_dir.empty()) save_training_state(options.out_dir, bundle, opt, it, state, result.log);
  return result;
}

void save_ldm(const std::filesystem::path& dir, const LdmBundle& bundle) {
  std::filesystem::create_directories(dir);
  vae::save_vae(dir / "vae", bundle.vae);
  write_json(dir / "config.json", bundle.config.to_json());
  write_json(dir / "vocabulary.json", bundle.tokenizer.vocabulary());
  write_json(dir / "latent_stats.json",
             {{"mean", vector_json(bundle.latent_mean)}, {"std", vector_json(bundle.latent_std)}});
  nn::save_parameters(dir / "weights.bin", bundle.parameters());
  atomic_write(dir / "checkpoint_id", ldm_checkpoint_id(bundle) + "\n");
}

LdmBundle load_ldm(const std::filesystem::path& dir) {
  for (const char* f : {"config.json", "weights.bin", "latent_stats.json", "vocabulary.json"})
    if (!std::filesystem::exists(dir / f))
      throw Error(ErrorKind::not_found, "no LDM checkpoint at " + dir.string() + " (missing " + f + ")");
  const auto config = DiffusionConfig::from_json(read_json(dir / "config.json"));
  const auto vae = vae::load_vae(dir / "vae");
  LdmBundle b = make_bundle(vae, config, Tokenizer(read_json(dir / "vocabulary.json").get<std::vector<std::string>>()), 0);
  nn::load_parameters(dir / "weights.bin", b.parameters());
  const auto stats = read_json(dir / "latent_stats.json");
  b.latent_mean = vector_from_json(stats.at("mean"));
  b.latent_std = vector_from_json(stats.at("std"));
  require(b.latent_mean.size() == b.d_z() && b.latent_std.size() == b.d_z(), ErrorKind::shape_mismatch,
          "latent_stats.json does not match the VAE latent width");
  b.checkpoint_id = ldm_checkpoint_id(b);
  return b;
}

}  // namespace mola::diffusion
