// Copyright 2026 The mola Authors
// SPDX-License-Identifier: Apache-2.0

#include "mola/error.hpp"
#include "mola/nn/serialize.hpp"
#include "mola/vae/stage1.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>

using namespace mola;
using namespace mola::vae;
using nn::Matrix;
using nn::Tensor;

namespace {

VaeConfig tiny_config() {
  VaeConfig c;
  c.n_joints = 5;
  c.d_z = 4;
  c.width = 12;
  c.d_w = 8;
  c.disc_width = 8;
  c.batch = 3;
  c.crop_length = 16;
  c.iterations = 6;
  c.lr_decay_at = 4;
  c.checkpoint_every = 2;
  c.log_every = 1;
  c.seed = 5;
  return c;
}

const data::DatasetSplit& tiny_dataset() {
  static const data::DatasetSplit ds = data::build_dataset(40, 3, motion::toy_skeleton());
  return ds;
}

std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("mola_vae_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

double smooth_l1(double d) { return std::abs(d) < 1.0 ? 0.5 * d * d : std::abs(d) - 0.5; }
double softplus(double v) { return v > 0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v)); }

}  // namespace

TEST_CASE("vae config json round trip and validation") {
  VaeConfig c = tiny_config();
  c.adversary = Adversary::gan;
  c.recon_loss = ReconLoss::mse;
  const VaeConfig back = VaeConfig::from_json(c.to_json());
  CHECK(back.to_json() == c.to_json());

  auto j = c.to_json();
  j["widht"] = 3;
  CHECK_THROWS_AS(VaeConfig::from_json(j), ConfigError);
  j = c.to_json();
  j["d_z"] = "four";
  try {
    VaeConfig::from_json(j);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.field() == "vae.d_z");
  }
  c.crop_length = 18;  // not divisible by the downsample ratio
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK(tiny_config().learning_rate(0) == doctest::Approx(2e-4));
  CHECK(tiny_config().learning_rate(4) == doctest::Approx(2e-5));
}

TEST_CASE("vae shapes") {
  const VaeConfig c = tiny_config();
  Rng rng(1);
  VaeModel model(c, rng);
  const nn::SeqShape shape{2, 32};
  const Matrix x = rng.normal_matrix(c.input_dim(), shape.columns());
  const Posterior post = model.encode(Tensor(x), shape);
  CHECK(post.mean.rows() == c.d_z);
  CHECK(post.mean.cols() == 2 * 8);
  CHECK(post.logvar.cols() == 2 * 8);
  const Reconstruction rec = model.decode(post.mean, {2, 8});
  CHECK(rec.motion.rows() == c.input_dim() - 1);
  CHECK(rec.motion.cols() == 64);
  CHECK(rec.logits.rows() == 1);
  CHECK_THROWS_AS(model.encode(Tensor(x), {2, 30}), Error);
  CHECK_THROWS_AS(model.encode(Tensor(Matrix::Zero(7, 64)), shape), Error);

  Discriminator disc(c, rng);
  const Tensor h = disc.features(Tensor(x), shape);
  CHECK(h.rows() == c.d_w);
  CHECK(h.cols() == 2);
  CHECK(disc.direction().value().norm() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("encoder output for a sequence depends only on that sequence") {
  const VaeConfig c = tiny_config();
  Rng rng(2);
  VaeModel model(c, rng);
  nn::NoGradGuard guard;
  const Matrix a = rng.normal_matrix(c.input_dim(), 16);
  const Matrix b = rng.normal_matrix(c.input_dim(), 16);
  Matrix both(c.input_dim(), 32);
  both << a, b;
  const Matrix batched = model.encode(Tensor(both), {2, 16}).mean.value();
  const Matrix single = model.encode(Tensor(a), {1, 16}).mean.value();
  CHECK((batched.leftCols(4) - single).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("vae loss matches an elementwise oracle") {
  VaeConfig c = tiny_config();
  c.position_enhance_weight = 0.0;
  c.lambda_act = 0.7;
  c.lambda_reg = 0.01;
  Rng rng(3);
  const int n = c.input_dim();
  const int cols = 8;
  Matrix x = 1.5 * rng.normal_matrix(n, cols);
  for (int f = 0; f < cols; ++f) x(n - 1, f) = f < 5 ? 1.0 : 0.0;
  Reconstruction rec{Tensor(rng.normal_matrix(n - 1, cols)), Tensor(rng.normal_matrix(1, cols))};
  Posterior post{Tensor(rng.normal_matrix(c.d_z, 4)), Tensor(0.3 * rng.normal_matrix(c.d_z, 4))};
  const motion::NormalizationStats stats;
  const VaeLossTerms t = motion_vae_loss(x, rec, post, c, stats, {2, 4});

  double recon = 0.0;
  for (int i = 0; i < n - 1; ++i)
    for (int f = 0; f < cols; ++f) recon += smooth_l1(rec.motion.value()(i, f) - x(i, f));
  recon /= (n - 1) * cols;
  double bce = 0.0;
  for (int f = 0; f < cols; ++f) {
    const double l = rec.logits.value()(0, f);
    bce += x(n - 1, f) * softplus(-l) + (1 - x(n - 1, f)) * softplus(l);
  }
  bce /= cols;
  double kl = 0.0;
  for (int i = 0; i < c.d_z; ++i)
    for (int k = 0; k < 4; ++k) {
      const double m = post.mean.value()(i, k);
      const double lv = post.logvar.value()(i, k);
      kl += 0.5 * (m * m + std::exp(lv) - 1.0 - lv);
    }
  kl /= 2;
  CHECK(t.reconstruction == doctest::Approx(recon).epsilon(1e-12));
  CHECK(t.activation == doctest::Approx(bce).epsilon(1e-12));
  CHECK(t.kl == doctest::Approx(kl).epsilon(1e-12));
  CHECK(t.total.item() == doctest::Approx(recon + 0.7 * bce + 0.01 * kl).epsilon(1e-12));
}

TEST_CASE("position term vanishes for a perfect reconstruction and ignores padding") {
  const auto& ds = tiny_dataset();
  VaeConfig c = tiny_config();
  const auto stats = ds.stats_for(c.input);
  const auto seq = to_vae_input(ds.train.front().motion, c);
  const int len = seq.length;
  const int cols = (len / 4 + 2) * 4;
  const Matrix x = motion::pad_and_activate(motion::normalize(seq, stats), cols).features;
  const int n = c.input_dim();
  Matrix motion_part = x.topRows(n - 1);
  Reconstruction rec{Tensor(motion_part), Tensor(Matrix::Constant(1, cols, 20.0))};
  Posterior post{Tensor(Matrix::Zero(c.d_z, cols / 4)), Tensor(Matrix::Zero(c.d_z, cols / 4))};
  const VaeLossTerms exact = motion_vae_loss(x, rec, post, c, stats, {1, cols});
  CHECK(exact.position == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(exact.kl == doctest::Approx(0.0));

  // Garbage in padded frames only changes the feature term, not the position term.
  motion_part.rightCols(cols - len).setConstant(3.0);
  Reconstruction padded_noise{Tensor(motion_part), rec.logits};
  const VaeLossTerms noisy = motion_vae_loss(x, padded_noise, post, c, stats, {1, cols});
  CHECK(noisy.position == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(noisy.reconstruction > exact.reconstruction);
}

TEST_CASE("hinge objective values") {
  CHECK(discriminator_hinge_loss(0.5, -0.3) == doctest::Approx(-1.2));
  CHECK(discriminator_hinge_loss(2.0, -3.0) == doctest::Approx(0.0));
  CHECK(discriminator_hinge_loss(-1.0, 1.0) == doctest::Approx(-4.0));
  Matrix real(1, 3), fake(1, 3);
  real << 0.5, 2.0, -1.0;
  fake << -0.3, -3.0, 1.0;
  const double expected =
      (discriminator_hinge_loss(0.5, -0.3) + discriminator_hinge_loss(2.0, -3.0) + discriminator_hinge_loss(-1.0, 1.0)) /
      3.0;
  CHECK(discriminator_hinge_loss(Tensor(real), Tensor(fake)).item() == doctest::Approx(expected));
  CHECK(generator_adv_loss(Tensor(fake)).item() == doctest::Approx(-fake.mean()));
}

TEST_CASE("SAN objective splits gradients between features and direction") {
  Rng rng(4);
  Matrix w = rng.normal_matrix(1, 6);
  w /= w.norm();
  Tensor dir = Tensor::parameter(w);
  Tensor hr = Tensor::parameter(rng.normal_matrix(6, 5));
  Tensor hf = Tensor::parameter(rng.normal_matrix(6, 5));
  const Tensor obj = san_discriminator_loss(hr, hf, dir);

  const Matrix fr = w * hr.value();
  const Matrix ff = w * hf.value();
  double hinge = 0.0;
  for (int i = 0; i < 5; ++i) hinge += discriminator_hinge_loss(fr(0, i), ff(0, i));
  const Matrix gap = hr.value().rowwise().mean() - hf.value().rowwise().mean();
  CHECK(obj.item() == doctest::Approx(hinge / 5 + (w * gap)(0, 0)).epsilon(1e-12));

  obj.backward();
  // Direction only sees the mean-feature gap.
  CHECK((dir.grad() - gap.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  // Features only see the hinge term: d/dh_real = w^T * 1[f_real < 1] / n.
  for (int i = 0; i < 5; ++i) {
    const double active = fr(0, i) < 1.0 ? 1.0 : 0.0;
    CHECK((hr.grad().col(i) - w.transpose() * active / 5.0).cwiseAbs().maxCoeff() < 1e-12);
  }

  Tensor bad = Tensor::parameter(2.0 * w);
  CHECK_THROWS_AS(san_discriminator_loss(hr, hf, bad), Error);
}

TEST_CASE("sequence bank pads normalized sequences with activation") {
  const auto& ds = tiny_dataset();
  const VaeConfig c = tiny_config();
  const auto bank = make_sequence_bank(ds.train, c, ds.stats_for(c.input));
  REQUIRE(bank.sequences.size() == ds.train.size());
  const Matrix& s = bank.sequences.front();
  const int len = bank.lengths.front();
  CHECK(s.rows() == c.input_dim());
  CHECK(s.cols() == c.max_frames);
  CHECK(s.row(s.rows() - 1).leftCols(len).minCoeff() == 1.0);
  if (len < c.max_frames) CHECK(s.rightCols(c.max_frames - len).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("stage 1 training is deterministic and resumable") {
  const auto& ds = tiny_dataset();
  const VaeConfig c = tiny_config();

  const Stage1Result full = train_stage1(ds, c);
  CHECK(full.iterations_done == c.iterations);
  CHECK(full.log.size() == static_cast<std::size_t>(c.iterations));
  for (const auto& row : full.log) CHECK(std::isfinite(row.loss));
  CHECK(full.discriminator->direction().value().norm() == doctest::Approx(1.0).epsilon(1e-12));
  const Stage1Result again = train_stage1(ds, c);
  CHECK(again.bundle.checkpoint_id == full.bundle.checkpoint_id);

  const auto dir = temp_dir("resume");
  Stage1Options first;
  first.out_dir = dir;
  first.stop_after = 3;
  const Stage1Result partial = train_stage1(ds, c, first);
  CHECK(partial.iterations_done == 3);
  CHECK(partial.bundle.checkpoint_id != full.bundle.checkpoint_id);
  for (const char* f : {"config.json", "weights.bin", "disc.bin", "opt_vae.bin", "opt_disc.bin", "state.json",
                        "stats.json", "training_log.csv", "checkpoint_id"})
    CHECK(std::filesystem::exists(dir / f));

  Stage1Options second;
  second.out_dir = dir;
  second.resume = true;
  const Stage1Result resumed = train_stage1(ds, c, second);
  CHECK(resumed.bundle.checkpoint_id == full.bundle.checkpoint_id);
  REQUIRE(resumed.log.size() == full.log.size());
  for (std::size_t i = 0; i < full.log.size(); ++i) CHECK(resumed.log[i].loss == full.log[i].loss);

  const VaeBundle loaded = load_vae(dir);
  CHECK(loaded.checkpoint_id == full.bundle.checkpoint_id);
  Rng rng(9);
  const Matrix z = rng.normal_matrix(c.d_z, 6);
  CHECK((decode_latent(loaded, z) - decode_latent(full.bundle, z)).cwiseAbs().maxCoeff() == 0.0);
  const Matrix dec = decode_latent(loaded, z);
  CHECK(dec.cols() == 24);
  CHECK(dec.row(dec.rows() - 1).minCoeff() > 0.0);
  CHECK(dec.row(dec.rows() - 1).maxCoeff() < 1.0);
  std::filesystem::remove_all(dir);
}

TEST_CASE("stage 1 adversary variants run") {
  const auto& ds = tiny_dataset();
  for (Adversary a : {Adversary::none, Adversary::gan}) {
    VaeConfig c = tiny_config();
    c.adversary = a;
    c.iterations = 2;
    const Stage1Result r = train_stage1(ds, c);
    CHECK(r.iterations_done == 2);
    if (a == Adversary::none) CHECK(r.log.back().discriminator == 0.0);
  }
}

TEST_CASE("short training reduces reconstruction error") {
  const auto& ds = tiny_dataset();
  VaeConfig c = tiny_config();
  c.iterations = 60;
  c.lr = 2e-3;
  c.lr_final = 2e-3;
  c.batch = 4;
  c.log_every = 20;
  const Stage1Result r = train_stage1(ds, c);
  CHECK(r.log.back().reconstruction < 0.8 * r.log.front().reconstruction);
  const double mpjpe = reconstruction_mpjpe(r.bundle, ds.val);
  CHECK(std::isfinite(mpjpe));
  CHECK(mpjpe > 0.0);
}

TEST_CASE("load_vae reports missing checkpoints") {
  try {
    load_vae(temp_dir("missing"));
    FAIL("expected Error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::not_found);
  }
}
