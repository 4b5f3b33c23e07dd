// Copyright 2026 The mola Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MOLA_EVAL_EVALUATORS_HPP
#define MOLA_EVAL_EVALUATORS_HPP

#include "mola/data/synthetic.hpp"
#include "mola/diffusion/model.hpp"
#include "mola/nn/layers.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace mola::eval {

struct EvaluatorConfig {
  int d_e = 64;
  int width = 64;
  int text_width = 64;
  int text_layers = 1;
  int text_heads = 4;
  int max_tokens = 16;
  int max_frames = data::kMaxFrames;
  int batch = 64;
  int iterations = 800;
  double lr = 1e-3;
  double temperature = 1.0;  // logits = -||m - t||^2 / temperature
  std::uint64_t seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
  static EvaluatorConfig from_json(const nlohmann::json& j, const std::string& prefix = "evaluator");
};

/// Conv encoder over normalized, padded encoder-representation sequences,
/// mean-pooled over time and projected to d_e.
class MotionEmbedder {
 public:
  MotionEmbedder() = default;
  MotionEmbedder(int input_dim, const EvaluatorConfig& config, Rng& rng);

  nn::Tensor operator()(const nn::Tensor& x, const nn::SeqShape& shape) const;
  void collect(const std::string& prefix, nn::NamedParameters& out) const;

 private:
  nn::Conv1d stem_, down1_, down2_;
  nn::Linear head_;
};

/// Frozen motion and text embedders with a shared d_e-dimensional space.
struct EvalEncoders {
  EvaluatorConfig config;
  int n_joints = 0;
  motion::NormalizationStats stats;  // encoder representation
  diffusion::Tokenizer tokenizer;
  std::shared_ptr<MotionEmbedder> motion;
  std::shared_ptr<diffusion::TextEncoder> text;
  std::string checkpoint_id;

  nn::NamedParameters parameters() const;
};

struct EvaluatorLogRow {
  int iteration = 0;
  double loss = 0.0;
};

/// Symmetric contrastive training on (motion, caption) pairs of the train split.
EvalEncoders train_eval_encoders(const data::DatasetSplit& dataset, const EvaluatorConfig& config,
                                 std::vector<EvaluatorLogRow>* log = nullptr);

/// d_e x n embeddings. Motions may be in either representation, denormalized,
/// and at most max_frames long.
nn::Matrix embed_motions(const EvalEncoders& encoders, const std::vector<motion::MotionSequence>& motions);
nn::Matrix embed_texts(const EvalEncoders& encoders, const std::vector<std::string>& captions);

/// FID between reconstructed and real motions in evaluator space.
double rfid(const EvalEncoders& encoders, const std::vector<motion::MotionSequence>& reconstructed,
            const std::vector<motion::MotionSequence>& real);

/// Fraction of items whose own caption is closer than a random other caption.
double matched_pair_rate(const EvalEncoders& encoders, const std::vector<data::DatasetItem>& items,
                         std::uint64_t seed);

/// Layout: config.json, stats.json, vocabulary.json, weights.bin, checkpoint_id.
void save_eval_encoders(const std::filesystem::path& dir, const EvalEncoders& encoders);
/// Throws Error(not_found) when the directory holds no evaluator checkpoint.
EvalEncoders load_eval_encoders(const std::filesystem::path& dir);

}  // namespace mola::eval

#endif  // MOLA_EVAL_EVALUATORS_HPP
