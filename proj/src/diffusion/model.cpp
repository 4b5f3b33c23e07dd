// Copyright 2026 The mola Authors
// SPDX-License-Identifier: Apache-2.0

#include "mola/diffusion/model.hpp"

#include "mola/error.hpp"

#include <cctype>
#include <numeric>
#include <sstream>

namespace mola::diffusion {

using nn::Matrix;
using nn::SeqShape;
using nn::Tensor;

namespace {

std::vector<int> range(int n) {
  std::vector<int> out(static_cast<std::size_t>(n));
  std::iota(out.begin(), out.end(), 0);
  return out;
}

}  // namespace

Tokenizer::Tokenizer(std::vector<std::string> vocabulary) : vocabulary_(std::move(vocabulary)) {
  for (std::size_t i = 0; i < vocabulary_.size(); ++i) {
    const bool inserted = index_.emplace(vocabulary_[i], static_cast<int>(i)).second;
    require(inserted, ErrorKind::invalid_input, "duplicate vocabulary entry '" + vocabulary_[i] + "'");
  }
}

std::vector<int> Tokenizer::encode(const std::string& text) const {
  std::string cleaned;
  cleaned.reserve(text.size());
  for (unsigned char ch : text)
    cleaned.push_back(std::isalnum(ch) || ch == '\'' || ch == '-' ? static_cast<char>(std::tolower(ch)) : ' ');
  std::istringstream words(cleaned);
  std::vector<int> ids;
  for (std::string w; words >> w;) {
    const auto it = index_.find(w);
    if (it == index_.end()) throw Error(ErrorKind::tokenizer, "unknown token '" + w + "'");
    ids.push_back(it->second);
  }
  if (ids.empty()) throw Error(ErrorKind::tokenizer, "empty caption");
  return ids;
}

TextEncoder::TextEncoder(int vocab_size, const DiffusionConfig& config, Rng& rng)
    : max_tokens_(config.max_tokens),
      tokens_(vocab_size, config.text_width, rng, 0.5),
      positions_(Tensor::parameter(nn::sinusoidal_embedding(range(config.max_tokens), config.text_width) * 0.1)),
      norm_(config.text_width),
      head_(config.text_width, config.d_c, rng),
      null_(Tensor::parameter(rng.normal_matrix(config.d_c, 1))) {
  for (int i = 0; i < config.text_layers; ++i)
    blocks_.emplace_back(config.text_width, config.text_heads, config.text_width * 2, rng);
}

Tensor TextEncoder::operator()(const std::vector<std::vector<int>>& tokens, const std::vector<bool>& drop) const {
  const int batch = static_cast<int>(tokens.size());
  require(batch >= 1, ErrorKind::invalid_input, "text encoder: empty batch");
  require(drop.empty() || static_cast<int>(drop.size()) == batch, ErrorKind::shape_mismatch,
          "text encoder: drop mask size");
  std::vector<int> index(static_cast<std::size_t>(batch));
  std::vector<int> kept;
  for (int b = 0; b < batch; ++b) {
    const bool dropped = !drop.empty() && drop[static_cast<std::size_t>(b)];
    if (!dropped) kept.push_back(b);
  }
  const int n = static_cast<int>(kept.size());
  for (int b = 0, k = 0; b < batch; ++b) {
    const bool dropped = !drop.empty() && drop[static_cast<std::size_t>(b)];
    index[static_cast<std::size_t>(b)] = dropped ? n : k++;
  }
  if (n == 0) return nn::gather_cols(null_, std::vector<int>(static_cast<std::size_t>(batch), 0));

  int length = 0;
  std::vector<int> lengths;
  for (int b : kept) {
    const int l = static_cast<int>(tokens[static_cast<std::size_t>(b)].size());
    require(l >= 1 && l <= max_tokens_, ErrorKind::tokenizer,
            "caption has " + std::to_string(l) + " tokens, limit is " + std::to_string(max_tokens_));
    lengths.push_back(l);
    length = std::max(length, l);
  }
  std::vector<int> ids(static_cast<std::size_t>(n) * length, 0);
  Matrix pool = Matrix::Zero(static_cast<Eigen::Index>(n) * length, n);
  for (int k = 0; k < n; ++k) {
    const auto& seq = tokens[static_cast<std::size_t>(kept[static_cast<std::size_t>(k)])];
    for (int i = 0; i < lengths[static_cast<std::size_t>(k)]; ++i) {
      ids[static_cast<std::size_t>(k) * length + i] = seq[static_cast<std::size_t>(i)];
      pool(static_cast<Eigen::Index>(k) * length + i, k) = 1.0 / lengths[static_cast<std::size_t>(k)];
    }
  }
  const SeqShape shape{n, length};
  Tensor h = nn::add_tiled(tokens_(ids), nn::slice_cols(positions_, 0, length));
  for (const auto& block : blocks_) h = block(h, shape, lengths);
  const Tensor pooled = nn::matmul(norm_(h), nn::constant(pool));
  const Tensor encoded = head_(pooled);
  if (n == batch) return encoded;
  return nn::gather_cols(nn::concat_cols({encoded, null_}), index);
}

void TextEncoder::collect(const std::string& prefix, nn::NamedParameters& out) const {
  tokens_.collect(prefix + ".tokens", out);
  out.emplace_back(prefix + ".positions", positions_);
  for (std::size_t i = 0; i < blocks_.size(); ++i) blocks_[i].collect(prefix + ".block" + std::to_string(i), out);
  norm_.collect(prefix + ".norm", out);
  head_.collect(prefix + ".head", out);
  out.emplace_back(prefix + ".null", null_);
}

Denoiser::Denoiser(int d_z, int latent_length, const DiffusionConfig& config, Rng& rng)
    : d_z_(d_z),
      latent_length_(latent_length),
      d_model_(config.d_model),
      in_(d_z, config.d_model, rng),
      time1_(config.d_model, config.d_model, rng),
      time2_(config.d_model, config.d_model, rng),
      cond_(config.d_c, config.d_model, rng),
      norm_(config.d_model),
      out_(config.d_model, d_z, rng) {
  positions_ = Tensor::parameter(nn::sinusoidal_embedding(range(latent_length), config.d_model, 100.0) * 0.5);
  for (int i = 0; i < config.blocks; ++i)
    blocks_.emplace_back(config.d_model, config.heads, config.d_model * config.mlp_ratio, rng);
  out_.zero_init();
}

Tensor Denoiser::operator()(const Tensor& z_t, const std::vector<int>& t, const Tensor& cond) const {
  const int batch = static_cast<int>(t.size());
  require(z_t.rows() == d_z_ && z_t.cols() == static_cast<Eigen::Index>(batch) * latent_length_,
          ErrorKind::shape_mismatch,
          "denoiser: latent must be " + std::to_string(d_z_) + " x " + std::to_string(batch * latent_length_));
  require(cond.cols() == batch, ErrorKind::shape_mismatch, "denoiser: one condition per sequence");
  const SeqShape latent{batch, latent_length_};
  const Tensor x = nn::add_tiled(in_(z_t), positions_);
  const Tensor temb = time2_(nn::silu(time1_(nn::constant(nn::sinusoidal_embedding(t, d_model_)))));
  const Tensor prefix = nn::concat_sequences(temb, {batch, 1}, cond_(cond), {batch, 1});
  const SeqShape full{batch, latent_length_ + 2};
  Tensor h = nn::concat_sequences(prefix, {batch, 2}, x, latent);
  for (const auto& block : blocks_) h = block(h, full);
  return out_(norm_(nn::slice_sequences(h, full, 2, latent_length_)));
}

void Denoiser::collect(const std::string& prefix, nn::NamedParameters& out) const {
  in_.collect(prefix + ".in", out);
  out.emplace_back(prefix + ".positions", positions_);
  time1_.collect(prefix + ".time1", out);
  time2_.collect(prefix + ".time2", out);
  cond_.collect(prefix + ".cond", out);
  for (std::size_t i = 0; i < blocks_.size(); ++i) blocks_[i].collect(prefix + ".block" + std::to_string(i), out);
  norm_.collect(prefix + ".norm", out);
  out_.collect(prefix + ".out", out);
}

}  // namespace mola::diffusion
