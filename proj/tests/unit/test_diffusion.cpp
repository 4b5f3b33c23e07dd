// Copyright 2026 The mola Authors
// SPDX-License-Identifier: Apache-2.0

#include "fixtures.hpp"
#include "mola/diffusion/sampler.hpp"
#include "mola/error.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace mola;
using namespace mola::diffusion;
using mola::testing::fresh_dir;
using mola::testing::small_dataset;
using mola::testing::small_ldm;
using mola::testing::small_ldm_config;
using mola::testing::small_vae;
using nn::Matrix;

namespace {

double cosine_oracle(int t, int T) {
  const double c = std::cos((static_cast<double>(t) / T + 0.008) / 1.008 * std::numbers::pi / 2);
  return c * c;
}

}  // namespace

TEST_CASE("cosine schedule matches a direct evaluation with clipped betas") {
  const NoiseSchedule s(ScheduleFamily::cosine, 1000, 0.02);
  CHECK(s.steps() == 1000);
  CHECK(s.alpha_bar(0) == 1.0);
  double ab = 1.0;
  for (int t = 1; t <= 1000; ++t) {
    const double beta = std::min(1.0 - cosine_oracle(t, 1000) / cosine_oracle(t - 1, 1000), 0.02);
    ab *= 1.0 - beta;
    CHECK(s.alpha_bar(t) == doctest::Approx(ab).epsilon(1e-12));
    CHECK(s.alpha_bar(t) < s.alpha_bar(t - 1));
    CHECK(1.0 - s.alpha(t) <= 0.02 + 1e-15);
  }
  CHECK(s.alpha_bar(1000) > 0.0);
  CHECK_THROWS_AS(s.alpha_bar(1001), Error);
}

TEST_CASE("linear schedule betas") {
  const NoiseSchedule s(ScheduleFamily::linear, 10, 0.02);
  double ab = 1.0;
  for (int t = 1; t <= 10; ++t) {
    ab *= 1.0 - (1e-4 + (0.02 - 1e-4) * (t - 1) / 9.0);
    CHECK(s.alpha_bar(t) == doctest::Approx(ab).epsilon(1e-14));
  }
}

TEST_CASE("from_alpha_bar rejects non-decreasing input") {
  Eigen::VectorXd ab(3);
  ab << 0.9, 0.95, 0.5;
  CHECK_THROWS_AS(NoiseSchedule::from_alpha_bar(ab), Error);
  ab << 0.9, 0.5, 0.1;
  CHECK(NoiseSchedule::from_alpha_bar(ab).alpha_bar(2) == 0.5);
}

TEST_CASE("trailing timesteps") {
  const auto t = trailing_timesteps(1000, 50);
  REQUIRE(t.size() == 50);
  for (int k = 0; k < 50; ++k) CHECK(t[static_cast<std::size_t>(k)] == 1000 - 20 * k);
  CHECK(t.back() == 20);
  const auto odd = trailing_timesteps(10, 3);
  CHECK(odd == std::vector<int>{10, 7, 4});
  CHECK(trailing_timesteps(5, 5) == std::vector<int>{5, 4, 3, 2, 1});
  CHECK_THROWS_AS(trailing_timesteps(10, 11), Error);
  CHECK_THROWS_AS(trailing_timesteps(10, 0), Error);
}

TEST_CASE("cfg_epsilon identities") {
  Rng rng(1);
  const Matrix c = rng.normal_matrix(3, 5);
  const Matrix u = rng.normal_matrix(3, 5);
  CHECK((cfg_epsilon(c, u, 1.0) - c).cwiseAbs().maxCoeff() == 0.0);
  CHECK((cfg_epsilon(c, u, 0.0) - u).cwiseAbs().maxCoeff() == 0.0);
  const Matrix s7 = cfg_epsilon(c, u, 7.0);
  CHECK((s7 - (u + 7.0 * (c - u))).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("forward diffusion has the prescribed marginal moments") {
  const NoiseSchedule s(ScheduleFamily::cosine, 100);
  Rng rng(3);
  const int n = 20000;
  const Matrix z0 = Matrix::Constant(1, n, 0.7);
  const Matrix eps = rng.normal_matrix(1, n);
  for (int t : {1, 40, 100}) {
    const Matrix zt = forward_diffuse(z0, eps, t, s);
    const double mean = zt.mean();
    const double var = (zt.array() - mean).square().sum() / (n - 1);
    const double ab = s.alpha_bar(t);
    CHECK(std::abs(mean - std::sqrt(ab) * 0.7) < 4.0 * std::sqrt((1 - ab) / n) + 1e-12);
    CHECK(var == doctest::Approx(1 - ab).epsilon(0.05));
    CHECK((tweedie_estimate(zt, eps, t, s) - z0).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("deterministic DDIM with oracle noise recovers z0") {
  const NoiseSchedule s(ScheduleFamily::cosine, 1000);
  Rng rng(8);
  const Matrix z0 = rng.normal_matrix(4, 6);
  Matrix z = forward_diffuse(z0, rng.normal_matrix(4, 6), 1000, s);
  const auto steps = trailing_timesteps(1000, 50);
  for (std::size_t k = 0; k < steps.size(); ++k) {
    const int t = steps[k];
    const int t_prev = k + 1 < steps.size() ? steps[k + 1] : 0;
    const Matrix eps = (z - std::sqrt(s.alpha_bar(t)) * z0) / std::sqrt(1 - s.alpha_bar(t));
    z = ddim_step(z, eps, t, t_prev, s);
  }
  CHECK((z - z0).cwiseAbs().maxCoeff() < 1e-5);
}

TEST_CASE("stochastic DDIM variance stays within the schedule") {
  const NoiseSchedule s(ScheduleFamily::cosine, 100);
  for (int t = 2; t <= 100; t += 7) {
    const double sigma = s.sigma(t, t - 1, 1.0);
    CHECK(sigma * sigma <= 1 - s.alpha_bar(t - 1) + 1e-12);
  }
  Rng rng(2);
  const Matrix z0 = rng.normal_matrix(2, 2);
  const Matrix eps = rng.normal_matrix(2, 2);
  const Matrix noise = rng.normal_matrix(2, 2);
  const Matrix zt = forward_diffuse(z0, eps, 50, s);
  const Matrix det = ddim_step(zt, eps, 50, 40, s);
  const Matrix sto = ddim_step(zt, eps, 50, 40, s, 0.5, noise);
  const double sig = s.sigma(50, 40, 0.5);
  const Matrix expected = std::sqrt(s.alpha_bar(40)) * z0 +
                          std::sqrt(1 - s.alpha_bar(40) - sig * sig) * eps + sig * noise;
  CHECK((sto - expected).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((det - sto).norm() > 0);
  CHECK_THROWS_AS(ddim_step(zt, eps, 40, 50, s), Error);
}

TEST_CASE("diffusion config round trip and errors") {
  DiffusionConfig c = small_ldm_config();
  CHECK(DiffusionConfig::from_json(c.to_json()).to_json() == c.to_json());
  auto j = c.to_json();
  j["heads"] = 3;
  try {
    DiffusionConfig::from_json(j);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.field().rfind("ldm.", 0) == 0);
  }
  j = c.to_json();
  j["bogus"] = 1;
  CHECK_THROWS_AS(DiffusionConfig::from_json(j), ConfigError);
  c.warmup = 10;
  c.iterations = 110;
  CHECK(c.learning_rate(0) < c.learning_rate(9));
  CHECK(c.learning_rate(10) == doctest::Approx(c.lr));
  CHECK(c.learning_rate(109) >= c.lr_min);
  CHECK(c.learning_rate(109) < c.learning_rate(50));
}

TEST_CASE("tokenizer") {
  const Tokenizer tok(data::caption_vocabulary());
  const auto ids = tok.encode("A person WALKS forward.");
  CHECK(ids.size() == 4);
  CHECK(ids == tok.encode("a person walks forward"));
  try {
    tok.encode("a person moonwalks");
    FAIL("expected tokenizer error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::tokenizer);
  }
  CHECK_THROWS_AS(tok.encode("   ...  "), Error);
}

TEST_CASE("text encoder and denoiser shapes") {
  DiffusionConfig c = small_ldm_config();
  Rng rng(1);
  const Tokenizer tok(data::caption_vocabulary());
  const TextEncoder text(tok.size(), c, rng);
  const Denoiser den(4, 7, c, rng);
  const std::vector<std::vector<int>> tokens{tok.encode("a person walks"), tok.encode("a person squats")};
  const nn::Tensor cond = text(tokens, {false, true});
  CHECK(cond.rows() == c.d_c);
  CHECK(cond.cols() == 2);
  CHECK((cond.value().col(1) - text.null_embedding().value()).norm() == 0.0);
  const nn::Tensor eps = den(nn::Tensor(rng.normal_matrix(4, 14)), {5, 80}, cond);
  CHECK(eps.rows() == 4);
  CHECK(eps.cols() == 14);
  // Zero-initialized output layer.
  CHECK(eps.value().norm() == 0.0);
}

TEST_CASE("stage 2 initial loss equals the noise energy") {
  const auto& ldm = small_ldm();
  const int entries = ldm.d_z() * ldm.latent_length();
  const auto cfg = small_ldm_config();
  const Stage2Result r = train_stage2(small_vae(), small_dataset(), cfg);
  REQUIRE(!r.log.empty());
  CHECK(r.log.front().loss == doctest::Approx(entries).epsilon(0.15));
  CHECK(r.log.front().eps_mse == doctest::Approx(1.0).epsilon(0.15));
  CHECK(r.bundle.checkpoint_id == ldm.checkpoint_id);
}

TEST_CASE("condition dropout rate") {
  auto cfg = small_ldm_config();
  cfg.cond_drop = 0.5;
  cfg.iterations = 60;
  cfg.batch = 8;
  cfg.d_model = 8;
  cfg.eval_every = 1000;
  cfg.checkpoint_every = 1000;
  const Stage2Result r = train_stage2(small_vae(), small_dataset(), cfg);
  CHECK(r.condition_samples == 480);
  const double rate = static_cast<double>(r.condition_drops) / static_cast<double>(r.condition_samples);
  CHECK(std::abs(rate - 0.5) < 3.0 * std::sqrt(0.25 / 480));
}

TEST_CASE("stage 2 resume reproduces an uninterrupted run") {
  const auto cfg = small_ldm_config();
  const auto dir = fresh_dir("ldm_resume");
  Stage2Options first;
  first.out_dir = dir;
  first.stop_after = 3;
  const Stage2Result partial = train_stage2(small_vae(), small_dataset(), cfg, first);
  CHECK(partial.iterations_done == 3);
  Stage2Options second;
  second.out_dir = dir;
  second.resume = true;
  const Stage2Result resumed = train_stage2(small_vae(), small_dataset(), cfg, second);
  CHECK(resumed.bundle.checkpoint_id == small_ldm().checkpoint_id);
  CHECK(resumed.condition_samples == static_cast<long long>(cfg.batch) * cfg.iterations);

  const LdmBundle loaded = load_ldm(dir);
  CHECK(loaded.checkpoint_id == small_ldm().checkpoint_id);
  CHECK_THROWS_AS(load_ldm(dir / "nope"), Error);
  try {
    load_ldm(dir / "nope");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::not_found);
  }
}

TEST_CASE("guided_epsilon at s = 1 is the conditional prediction") {
  const auto& m = small_ldm();
  Rng rng(4);
  const Matrix z = rng.normal_matrix(m.d_z(), m.latent_length());
  const std::vector<std::vector<int>> tokens{m.tokenizer.encode("a person walks forward")};
  nn::NoGradGuard guard;
  const Matrix cond = (*m.denoiser)(nn::Tensor(z), {30}, (*m.text)(tokens)).value();
  const Matrix unc = (*m.denoiser)(nn::Tensor(z), {30}, (*m.text)(tokens, {true})).value();
  CHECK((guided_epsilon(m, z, {30}, tokens, 1.0) - cond).cwiseAbs().maxCoeff() == 0.0);
  CHECK((guided_epsilon(m, z, {30}, tokens, 0.0) - unc).cwiseAbs().maxCoeff() == 0.0);
  CHECK((guided_epsilon(m, z, {30}, tokens, 2.5) - cfg_epsilon(cond, unc, 2.5)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("sampling is deterministic in the seed") {
  const auto& m = small_ldm();
  const auto opts = SamplerOptions::from_config(m.config);
  const Sample a = sample_text_to_motion(m, "a person runs forward", 7, opts);
  const Sample b = sample_text_to_motion(m, "a person runs forward", 7, opts);
  const Sample c = sample_text_to_motion(m, "a person runs forward", 8, opts);
  CHECK(a.motion.features == b.motion.features);
  CHECK(a.latent == b.latent);
  CHECK((a.latent - c.latent).norm() > 0);
  CHECK(a.motion.length >= 1);
  CHECK(a.motion.length <= m.vae.config.max_frames);
  CHECK(a.joints.cols() == a.motion.length);
  CHECK(a.metadata["generator"]["seed"] == 7);
  CHECK(a.metadata["generator"]["checkpoint_id"] == m.checkpoint_id);

  const auto batch = sample_text_to_motion_batch(m, {"a person runs forward", "a person waves"}, {7, 9}, opts);
  CHECK((batch[0].latent - a.latent).cwiseAbs().maxCoeff() < 1e-9);

  if (a.motion.length > 1)
    for (int t = 0; t < a.motion.length; ++t) CHECK(a.motion.features(a.motion.layout().activation(), t) >= opts.delta);
}

TEST_CASE("sampler option validation names the field") {
  SamplerOptions o;
  o.steps = 0;
  try {
    o.validate(100);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.field() == "steps");
  }
  o = SamplerOptions{};
  o.delta = 1.5;
  CHECK_THROWS_AS(o.validate(100), ConfigError);
}
