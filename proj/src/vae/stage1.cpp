// Copyright 2026 The mola Authors
// SPDX-License-Identifier: Apache-2.0

#include "mola/vae/stage1.hpp"

#include "mola/error.hpp"
#include "mola/io.hpp"
#include "mola/nn/optim.hpp"
#include "mola/nn/serialize.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace mola::vae {

using nn::Matrix;
using nn::SeqShape;
using nn::Tensor;

motion::MotionSequence to_vae_input(const motion::MotionSequence& full, const VaeConfig& config) {
  require(full.representation == motion::Representation::full, ErrorKind::invalid_input,
          "to_vae_input expects full-representation motions");
  return config.input == motion::Representation::encoder ? motion::to_encoder_features(full) : full;
}

SequenceBank make_sequence_bank(const std::vector<data::DatasetItem>& items, const VaeConfig& config,
                                const motion::NormalizationStats& stats) {
  SequenceBank bank;
  bank.sequences.reserve(items.size());
  for (const auto& item : items) {
    const auto normalized = motion::normalize(to_vae_input(item.motion, config), stats);
    bank.sequences.push_back(motion::pad_and_activate(normalized, config.max_frames).features);
    bank.lengths.push_back(item.motion.length);
  }
  return bank;
}

namespace {

const char* kLogHeader = "iteration,lr,loss,reconstruction,activation,kl,position,adversarial,discriminator";

std::string format_row(const Stage1LogRow& r) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g", r.iteration, r.lr, r.loss,
                r.reconstruction, r.activation, r.kl, r.position, r.adversarial, r.discriminator);
  return buf;
}

std::vector<Stage1LogRow> read_log(const std::filesystem::path& path) {
  std::vector<Stage1LogRow> rows;
  if (!std::filesystem::exists(path)) return rows;
  std::istringstream in(read_file(path));
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    Stage1LogRow r;
    if (std::sscanf(line.c_str(), "%d,%lf,%lf,%lf,%lf,%lf,%lf,%lf,%lf", &r.iteration, &r.lr, &r.loss, &r.reconstruction,
                    &r.activation, &r.kl, &r.position, &r.adversarial, &r.discriminator) == 9)
      rows.push_back(r);
  }
  return rows;
}

void write_log(const std::filesystem::path& path, const std::vector<Stage1LogRow>& rows) {
  std::string out = std::string(kLogHeader) + "\n";
  for (const auto& r : rows) out += format_row(r) + "\n";
  atomic_write(path, out);
}

Matrix make_batch(const SequenceBank& bank, const VaeConfig& config, Rng& rng) {
  const int n = static_cast<int>(bank.sequences.front().rows());
  Matrix x(n, static_cast<Eigen::Index>(config.batch) * config.crop_length);
  for (int b = 0; b < config.batch; ++b) {
    const auto i = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(bank.sequences.size()) - 1));
    const int max_start = std::min(bank.lengths[i] - 1, config.max_frames - config.crop_length);
    const auto start = static_cast<int>(rng.uniform_int(0, std::max(max_start, 0)));
    x.middleCols(static_cast<Eigen::Index>(b) * config.crop_length, config.crop_length) =
        bank.sequences[i].middleCols(start, config.crop_length);
  }
  return x;
}

void save_training_state(const std::filesystem::path& dir, const VaeBundle& bundle, const Discriminator& disc,
                         const nn::AdamW& opt_vae, const nn::AdamW& opt_disc, int iteration,
                         const std::vector<Stage1LogRow>& log) {
  save_vae(dir, bundle);
  nn::save_parameters(dir / "disc.bin", disc.parameters());
  opt_vae.save(dir / "opt_vae.bin");
  opt_disc.save(dir / "opt_disc.bin");
  write_log(dir / "training_log.csv", log);
  write_json(dir / "state.json", {{"iteration", iteration}, {"seed", bundle.config.seed}});
}

}  // namespace

Stage1Result train_stage1(const data::DatasetSplit& dataset, const VaeConfig& config, const Stage1Options& options) {
  config.validate();
  require(dataset.skeleton.n_joints == config.n_joints, ErrorKind::invalid_input,
          "dataset skeleton has " + std::to_string(dataset.skeleton.n_joints) + " joints, config expects " +
              std::to_string(config.n_joints));
  require(!dataset.train.empty(), ErrorKind::invalid_input, "empty training split");
  require(dataset.max_frames <= config.max_frames, ErrorKind::invalid_input, "dataset motions exceed vae.max_frames");

  Stage1Result result;
  VaeBundle& bundle = result.bundle;
  bundle.config = config;
  bundle.stats = dataset.stats_for(config.input);
  const SequenceBank bank = make_sequence_bank(dataset.train, config, bundle.stats);

  Rng init(Rng::mix(config.seed, 0x1417));
  bundle.model = std::make_shared<VaeModel>(config, init);
  result.discriminator = std::make_shared<Discriminator>(config, init);
  Discriminator& disc = *result.discriminator;
  nn::AdamW opt_vae(bundle.model->parameters());
  nn::AdamW opt_disc(disc.parameters());

  int start = 0;
  if (options.resume && std::filesystem::exists(options.out_dir / "state.json")) {
    const auto state = read_json(options.out_dir / "state.json");
    nn::load_parameters(options.out_dir / "weights.bin", bundle.model->parameters());
    nn::load_parameters(options.out_dir / "disc.bin", disc.parameters());
    opt_vae.load(options.out_dir / "opt_vae.bin");
    opt_disc.load(options.out_dir / "opt_disc.bin");
    start = state.at("iteration").get<int>();
    result.log = read_log(options.out_dir / "training_log.csv");
  }

  const SeqShape shape{config.batch, config.crop_length};
  const SeqShape latent_shape{config.batch, config.latent_length(config.crop_length)};
  const nn::Vector std_all = bundle.stats.std;
  const nn::Vector mean_all = bundle.stats.mean;

  int it = start;
  for (; it < config.iterations; ++it) {
    if (options.stop_after >= 0 && it >= options.stop_after) break;
    Rng rng(Rng::mix(config.seed, static_cast<std::uint64_t>(it) + 1));
    const Matrix x = make_batch(bank, config, rng);
    const double lr = config.learning_rate(it);

    // VAE step.
    opt_vae.zero_grad();
    opt_disc.zero_grad();
    const Posterior post = bundle.model->encode(Tensor(x), shape);
    const Tensor z = sample_posterior(post, rng.normal_matrix(config.d_z, latent_shape.columns()));
    const Reconstruction rec = bundle.model->decode(z, latent_shape);
    VaeLossTerms terms = motion_vae_loss(x, rec, post, config, bundle.stats, shape);
    Tensor total = terms.total;
    const Tensor fake = nn::affine_rows(nn::concat_rows({rec.motion, nn::sigmoid(rec.logits)}), std_all, mean_all);
    double adv_value = 0.0;
    if (config.adversary != Adversary::none && config.lambda_adv > 0) {
      const Tensor adv = generator_adv_loss(disc.score(disc.features(fake, shape)));
      adv_value = adv.item();
      total = total + config.lambda_adv * adv;
    }
    if (!std::isfinite(total.item()))
      throw Error(ErrorKind::divergence, "stage 1 iteration " + std::to_string(it) +
                                             ": non-finite loss (recon=" + std::to_string(terms.reconstruction) +
                                             ", act=" + std::to_string(terms.activation) +
                                             ", kl=" + std::to_string(terms.kl) + ")");
    total.backward();
    opt_vae.step(lr);

    // Discriminator step on the pre-update reconstruction.
    double disc_value = 0.0;
    if (config.adversary != Adversary::none) {
      opt_disc.zero_grad();
      const Tensor real_in = nn::constant((x.array().colwise() * std_all.array()).colwise() + mean_all.array());
      const Tensor fake_in = nn::constant(fake.value());
      const Tensor h_real = disc.features(real_in, shape);
      const Tensor h_fake = disc.features(fake_in, shape);
      const Tensor objective = config.adversary == Adversary::gan
                                   ? discriminator_hinge_loss(disc.score(h_real), disc.score(h_fake))
                                   : san_discriminator_loss(h_real, h_fake, disc.direction());
      disc_value = objective.item();
      if (!std::isfinite(disc_value))
        throw Error(ErrorKind::divergence, "stage 1 iteration " + std::to_string(it) + ": non-finite discriminator loss");
      nn::scale(objective, -1.0).backward();
      opt_disc.step(lr);
      if (config.adversary == Adversary::san) disc.project_direction();
    }

    if (it == 0 || (it + 1) % config.log_every == 0 || it + 1 == config.iterations) {
      Stage1LogRow row{it + 1, lr, total.item(), terms.reconstruction, terms.activation, terms.kl, terms.position,
                       adv_value, disc_value};
      result.log.push_back(row);
      if (options.on_log) options.on_log(row);
    }
    if (!options.out_dir.empty() && ((it + 1) % config.checkpoint_every == 0 || it + 1 == config.iterations)) {
      bundle.checkpoint_id = nn::parameters_hash(bundle.model->parameters());
      save_training_state(options.out_dir, bundle, disc, opt_vae, opt_disc, it + 1, result.log);
    }
  }
  result.iterations_done = it;
  bundle.checkpoint_id = nn::parameters_hash(bundle.model->parameters());
  if (!options.out_dir.empty()) save_training_state(options.out_dir, bundle, disc, opt_vae, opt_disc, it, result.log);
  return result;
}

void save_vae(const std::filesystem::path& dir, const VaeBundle& bundle) {
  std::filesystem::create_directories(dir);
  write_json(dir / "config.json", bundle.config.to_json());
  nn::save_parameters(dir / "weights.bin", bundle.model->parameters());
  write_json(dir / "stats.json", bundle.stats.to_json());
  atomic_write(dir / "checkpoint_id", nn::parameters_hash(bundle.model->parameters()) + "\n");
}

VaeBundle load_vae(const std::filesystem::path& dir) {
  if (!std::filesystem::exists(dir / "config.json") || !std::filesystem::exists(dir / "weights.bin"))
    throw Error(ErrorKind::not_found, "no VAE checkpoint at " + dir.string());
  VaeBundle bundle;
  bundle.config = VaeConfig::from_json(read_json(dir / "config.json"));
  Rng init(0);
  bundle.model = std::make_shared<VaeModel>(bundle.config, init);
  nn::load_parameters(dir / "weights.bin", bundle.model->parameters());
  bundle.stats = motion::NormalizationStats::from_json(read_json(dir / "stats.json"));
  bundle.checkpoint_id = nn::parameters_hash(bundle.model->parameters());
  return bundle;
}

Matrix encode_mean(const VaeBundle& vae, const Matrix& normalized) {
  nn::NoGradGuard guard;
  const int frames = static_cast<int>(normalized.cols());
  return vae.model->encode(Tensor(normalized), {1, frames}).mean.value();
}

Matrix decode_latent(const VaeBundle& vae, const Matrix& z) {
  nn::NoGradGuard guard;
  const Reconstruction rec = vae.model->decode(Tensor(z), {1, static_cast<int>(z.cols())});
  Matrix out(rec.motion.rows() + 1, rec.motion.cols());
  out.topRows(rec.motion.rows()) = rec.motion.value();
  out.bottomRows(1) = rec.logits.value().unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
  return out;
}

Matrix decode_to_features(const VaeBundle& vae, const Matrix& z) {
  return motion::denormalize_features(decode_latent(vae, z), vae.stats);
}

motion::MotionSequence reconstruct_motion(const VaeBundle& vae, const motion::MotionSequence& full) {
  const auto input = to_vae_input(full, vae.config);
  require(input.frames() <= vae.config.max_frames, ErrorKind::shape_mismatch, "motion exceeds vae.max_frames");
  const auto padded = motion::pad_and_activate(motion::normalize(input, vae.stats), vae.config.max_frames);
  motion::MotionSequence out = input;
  out.features = decode_to_features(vae, encode_mean(vae, padded.features)).leftCols(full.length);
  out.length = full.length;
  return out;
}

double reconstruction_mpjpe(const VaeBundle& vae, const std::vector<data::DatasetItem>& items) {
  require(!items.empty(), ErrorKind::invalid_input, "reconstruction_mpjpe: no motions");
  double total = 0.0;
  double count = 0.0;
  const int nj = vae.config.n_joints;
  for (const auto& item : items) {
    const auto input = to_vae_input(item.motion, vae.config);
    const auto padded = motion::pad_and_activate(motion::normalize(input, vae.stats), vae.config.max_frames);
    const Matrix features = decode_to_features(vae, encode_mean(vae, padded.features));
    const int len = item.motion.length;
    const Matrix rec = motion::recover_global_joints(features.leftCols(len), nj);
    const Matrix gt = motion::recover_global_joints(input.features, nj);
    for (int f = 0; f < len; ++f)
      for (int j = 0; j < nj; ++j) total += (rec.block<3, 1>(3 * j, f) - gt.block<3, 1>(3 * j, f)).norm();
    count += static_cast<double>(len) * nj;
  }
  return 1000.0 * total / count;
}

}  // namespace mola::vae
