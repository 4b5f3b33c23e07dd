// Copyright 2026 The mola Authors
// SPDX-License-Identifier: Apache-2.0

#include "mola/vae/model.hpp"

#include "mola/error.hpp"

#include <cmath>

namespace mola::vae {

using nn::SeqShape;
using nn::Tensor;

namespace {

constexpr double kSlope = 0.2;

Tensor act(const Tensor& x) { return nn::leaky_relu(x, kSlope); }

SeqShape half(const SeqShape& s) { return {s.batch, s.length / 2}; }
SeqShape twice(const SeqShape& s) { return {s.batch, s.length * 2}; }

std::vector<ResBlock1d> make_blocks(int count, int width, Rng& rng) {
  std::vector<ResBlock1d> out;
  for (int i = 0; i < count; ++i) out.emplace_back(width, rng);
  return out;
}

Tensor run_blocks(const std::vector<ResBlock1d>& blocks, Tensor x, const SeqShape& shape) {
  for (const auto& b : blocks) x = b(x, shape);
  return x;
}

void collect_blocks(const std::vector<ResBlock1d>& blocks, const std::string& prefix, nn::NamedParameters& out) {
  for (std::size_t i = 0; i < blocks.size(); ++i) blocks[i].collect(prefix + "." + std::to_string(i), out);
}

}  // namespace

ResBlock1d::ResBlock1d(int width, Rng& rng)
    : conv1(width, width, 3, 1, 1, rng, std::sqrt(2.0)), conv2(width, width, 3, 1, 1, rng, 0.5) {}

Tensor ResBlock1d::operator()(const Tensor& x, const SeqShape& shape) const {
  return x + conv2(act(conv1(act(x), shape)), shape);
}

void ResBlock1d::collect(const std::string& prefix, nn::NamedParameters& out) const {
  conv1.collect(prefix + ".conv1", out);
  conv2.collect(prefix + ".conv2", out);
}

VaeModel::VaeModel(const VaeConfig& config, Rng& rng) : config_(config), input_dim_(config.input_dim()) {
  config_.validate();
  const int w = config.width;
  const double g = std::sqrt(2.0);
  enc_stem_ = nn::Conv1d(input_dim_, w, 3, 1, 1, rng, g);
  enc_down1_ = nn::Conv1d(w, w, 4, 2, 1, rng, g);
  enc_res1_ = make_blocks(config.res_blocks, w, rng);
  enc_down2_ = nn::Conv1d(w, w, 4, 2, 1, rng, g);
  enc_res2_ = make_blocks(config.res_blocks, w, rng);
  enc_head_ = nn::Conv1d(w, 2 * config.d_z, 3, 1, 1, rng, 0.5);

  dec_stem_ = nn::Conv1d(config.d_z, w, 3, 1, 1, rng, g);
  dec_res0_ = make_blocks(config.res_blocks, w, rng);
  dec_up1_ = nn::Conv1d(w, w, 3, 1, 1, rng, g);
  dec_res1_ = make_blocks(config.res_blocks, w, rng);
  dec_up2_ = nn::Conv1d(w, w, 3, 1, 1, rng, g);
  dec_head_ = nn::Conv1d(w, input_dim_, 3, 1, 1, rng, 0.5);
}

Posterior VaeModel::encode(const Tensor& x, const SeqShape& shape) const {
  require(x.rows() == input_dim_, ErrorKind::shape_mismatch,
          "encode: expected " + std::to_string(input_dim_) + " channels, got " + std::to_string(x.rows()));
  require(shape.length % config_.downsample_ratio == 0, ErrorKind::shape_mismatch,
          "encode: sequence length must be divisible by 4");
  Tensor h = act(enc_stem_(x, shape));
  SeqShape s1 = half(shape);
  h = run_blocks(enc_res1_, act(enc_down1_(h, shape)), s1);
  SeqShape s2 = half(s1);
  h = run_blocks(enc_res2_, act(enc_down2_(h, s1)), s2);
  Tensor out = enc_head_(h, s2);
  return {nn::slice_rows(out, 0, config_.d_z), nn::slice_rows(out, config_.d_z, config_.d_z)};
}

Reconstruction VaeModel::decode(const Tensor& z, const SeqShape& latent_shape) const {
  require(z.rows() == config_.d_z, ErrorKind::shape_mismatch,
          "decode: expected " + std::to_string(config_.d_z) + " latent channels, got " + std::to_string(z.rows()));
  Tensor h = run_blocks(dec_res0_, act(dec_stem_(z, latent_shape)), latent_shape);
  SeqShape s1 = twice(latent_shape);
  h = run_blocks(dec_res1_, act(dec_up1_(nn::upsample2(h, latent_shape), s1)), s1);
  SeqShape s2 = twice(s1);
  h = act(dec_up2_(nn::upsample2(h, s1), s2));
  Tensor out = dec_head_(h, s2);
  return {nn::slice_rows(out, 0, input_dim_ - 1), nn::slice_rows(out, input_dim_ - 1, 1)};
}

nn::NamedParameters VaeModel::parameters() const {
  nn::NamedParameters out;
  enc_stem_.collect("encoder.stem", out);
  enc_down1_.collect("encoder.down1", out);
  collect_blocks(enc_res1_, "encoder.res1", out);
  enc_down2_.collect("encoder.down2", out);
  collect_blocks(enc_res2_, "encoder.res2", out);
  enc_head_.collect("encoder.head", out);
  dec_stem_.collect("decoder.stem", out);
  collect_blocks(dec_res0_, "decoder.res0", out);
  dec_up1_.collect("decoder.up1", out);
  collect_blocks(dec_res1_, "decoder.res1", out);
  dec_up2_.collect("decoder.up2", out);
  dec_head_.collect("decoder.head", out);
  return out;
}

Tensor sample_posterior(const Posterior& posterior, const nn::Matrix& noise) {
  require(noise.rows() == posterior.mean.rows() && noise.cols() == posterior.mean.cols(), ErrorKind::shape_mismatch,
          "sample_posterior: noise shape");
  return posterior.mean + nn::mul(nn::exp(nn::scale(posterior.logvar, 0.5)), nn::constant(noise));
}

Discriminator::Discriminator(const VaeConfig& config, Rng& rng) {
  const int w = config.disc_width;
  const double g = std::sqrt(2.0);
  stem_ = nn::Conv1d(config.input_dim(), w, 3, 1, 1, rng, g);
  down1_ = nn::Conv1d(w, w, 4, 2, 1, rng, g);
  down2_ = nn::Conv1d(w, w, 4, 2, 1, rng, g);
  head_ = nn::Conv1d(w, config.d_w, 3, 1, 1, rng, g);
  nn::Matrix dir = rng.normal_matrix(1, config.d_w);
  direction_ = Tensor::parameter(dir / dir.norm());
}

Tensor Discriminator::features(const Tensor& x, const SeqShape& shape) const {
  Tensor h = act(stem_(x, shape));
  h = act(down1_(h, shape));
  const SeqShape s1 = half(shape);
  h = act(down2_(h, s1));
  const SeqShape s2 = half(s1);
  return nn::sequence_mean(act(head_(h, s2)), s2);
}

void Discriminator::project_direction() {
  Tensor d = direction_;
  const double norm = d.value().norm();
  require(norm > 0 && std::isfinite(norm), ErrorKind::divergence, "discriminator direction collapsed");
  d.mutable_value() /= norm;
}

nn::NamedParameters Discriminator::parameters() const {
  nn::NamedParameters out;
  stem_.collect("disc.stem", out);
  down1_.collect("disc.down1", out);
  down2_.collect("disc.down2", out);
  head_.collect("disc.head", out);
  out.emplace_back("disc.direction", direction_);
  return out;
}

}  // namespace mola::vae
