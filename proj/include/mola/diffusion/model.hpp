// Copyright 2026 The mola Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MOLA_DIFFUSION_MODEL_HPP
#define MOLA_DIFFUSION_MODEL_HPP

#include "mola/diffusion/config.hpp"
#include "mola/nn/transformer.hpp"

#include <map>
#include <string>
#include <vector>

namespace mola::diffusion {

/// Whitespace tokenizer over a closed vocabulary. Lower-cases and strips
/// punctuation; unknown words throw Error(tokenizer).
class Tokenizer {
 public:
  Tokenizer() = default;
  explicit Tokenizer(std::vector<std::string> vocabulary);

  std::vector<int> encode(const std::string& text) const;
  int size() const { return static_cast<int>(vocabulary_.size()); }
  const std::vector<std::string>& vocabulary() const { return vocabulary_; }

 private:
  std::vector<std::string> vocabulary_;
  std::map<std::string, int> index_;
};

/// Caption -> conditioning vector tau(c) (d_c). Token embeddings plus learned
/// positions, pre-norm transformer, masked mean pool, linear head.
/// Dropped conditions use a separate learned null embedding.
class TextEncoder {
 public:
  TextEncoder() = default;
  TextEncoder(int vocab_size, const DiffusionConfig& config, Rng& rng);

  /// d_c x B. Captions with drop[b] = true map to the null embedding.
  nn::Tensor operator()(const std::vector<std::vector<int>>& tokens, const std::vector<bool>& drop = {}) const;
  nn::Tensor null_embedding() const { return null_; }
  void collect(const std::string& prefix, nn::NamedParameters& out) const;

 private:
  int max_tokens_ = 0;
  nn::Embedding tokens_;
  nn::Tensor positions_;  // width x max_tokens
  std::vector<nn::TransformerBlock> blocks_;
  nn::LayerNorm norm_;
  nn::Linear head_;
  nn::Tensor null_;  // d_c x 1
};

/// Transformer denoiser over latent columns with a timestep token and a
/// condition token prepended to every sequence.
class Denoiser {
 public:
  Denoiser() = default;
  Denoiser(int d_z, int latent_length, const DiffusionConfig& config, Rng& rng);

  /// z_t: d_z x (B * d_l), t: B timesteps, cond: d_c x B. Returns eps (d_z x B * d_l).
  nn::Tensor operator()(const nn::Tensor& z_t, const std::vector<int>& t, const nn::Tensor& cond) const;
  int latent_length() const { return latent_length_; }
  void collect(const std::string& prefix, nn::NamedParameters& out) const;

 private:
  int d_z_ = 0;
  int latent_length_ = 0;
  int d_model_ = 0;
  nn::Linear in_;
  nn::Tensor positions_;  // d_model x d_l
  nn::Linear time1_, time2_;
  nn::Linear cond_;
  std::vector<nn::TransformerBlock> blocks_;
  nn::LayerNorm norm_;
  nn::Linear out_;
};

}  // namespace mola::diffusion

#endif  // MOLA_DIFFUSION_MODEL_HPP
