// Copyright 2026 The mola Authors
// SPDX-License-Identifier: Apache-2.0

#include "mola/eval/evaluators.hpp"

#include "mola/config.hpp"
#include "mola/error.hpp"
#include "mola/eval/metrics.hpp"
#include "mola/io.hpp"
#include "mola/nn/optim.hpp"
#include "mola/nn/serialize.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

namespace mola::eval {

using nn::Matrix;
using nn::SeqShape;
using nn::Tensor;

void EvaluatorConfig::validate() const {
  check_field(d_e >= 1, "evaluator.d_e", "must be >= 1");
  check_field(width >= 1, "evaluator.width", "must be >= 1");
  check_field(text_width >= 1 && text_heads >= 1 && text_width % text_heads == 0, "evaluator.text_heads",
              "must divide text_width");
  check_field(text_layers >= 0, "evaluator.text_layers", "must be >= 0");
  check_field(max_tokens >= 1, "evaluator.max_tokens", "must be >= 1");
  check_field(max_frames >= 4 && max_frames % 4 == 0, "evaluator.max_frames", "must be a positive multiple of 4");
  check_field(batch >= 2, "evaluator.batch", "must be >= 2");
  check_field(iterations >= 0, "evaluator.iterations", "must be >= 0");
  check_field(lr > 0, "evaluator.lr", "must be > 0");
  check_field(temperature > 0, "evaluator.temperature", "must be > 0");
}

nlohmann::json EvaluatorConfig::to_json() const {
  return {{"d_e", d_e},
          {"width", width},
          {"text_width", text_width},
          {"text_layers", text_layers},
          {"text_heads", text_heads},
          {"max_tokens", max_tokens},
          {"max_frames", max_frames},
          {"batch", batch},
          {"iterations", iterations},
          {"lr", lr},
          {"temperature", temperature},
          {"seed", seed}};
}

EvaluatorConfig EvaluatorConfig::from_json(const nlohmann::json& j, const std::string& prefix) {
  EvaluatorConfig c;
  ConfigReader r(j, prefix);
  r.get("d_e", c.d_e);
  r.get("width", c.width);
  r.get("text_width", c.text_width);
  r.get("text_layers", c.text_layers);
  r.get("text_heads", c.text_heads);
  r.get("max_tokens", c.max_tokens);
  r.get("max_frames", c.max_frames);
  r.get("batch", c.batch);
  r.get("iterations", c.iterations);
  r.get("lr", c.lr);
  r.get("temperature", c.temperature);
  r.get("seed", c.seed);
  r.reject_unknown();
  c.validate();
  return c;
}

MotionEmbedder::MotionEmbedder(int input_dim, const EvaluatorConfig& config, Rng& rng)
    : stem_(input_dim, config.width, 3, 1, 1, rng),
      down1_(config.width, config.width, 4, 2, 1, rng),
      down2_(config.width, config.width, 4, 2, 1, rng),
      head_(config.width, config.d_e, rng) {}

Tensor MotionEmbedder::operator()(const Tensor& x, const SeqShape& shape) const {
  Tensor h = nn::leaky_relu(stem_(x, shape), 0.2);
  SeqShape s = shape;
  h = nn::leaky_relu(down1_(h, s), 0.2);
  s = down1_.output_shape(s);
  h = nn::leaky_relu(down2_(h, s), 0.2);
  s = down2_.output_shape(s);
  return head_(nn::sequence_mean(h, s));
}

void MotionEmbedder::collect(const std::string& prefix, nn::NamedParameters& out) const {
  stem_.collect(prefix + ".stem", out);
  down1_.collect(prefix + ".down1", out);
  down2_.collect(prefix + ".down2", out);
  head_.collect(prefix + ".head", out);
}

nn::NamedParameters EvalEncoders::parameters() const {
  nn::NamedParameters out;
  motion->collect("motion", out);
  text->collect("text", out);
  return out;
}

namespace {

diffusion::DiffusionConfig text_config(const EvaluatorConfig& c) {
  diffusion::DiffusionConfig d;
  d.text_width = c.text_width;
  d.text_layers = c.text_layers;
  d.text_heads = c.text_heads;
  d.max_tokens = c.max_tokens;
  d.d_c = c.d_e;
  return d;
}

void build_networks(EvalEncoders& e) {
  Rng init(Rng::mix(e.config.seed, 0xE7A1));
  const int input_dim = motion::FeatureLayout{e.n_joints, motion::Representation::encoder}.dim();
  e.motion = std::make_shared<MotionEmbedder>(input_dim, e.config, init);
  e.text = std::make_shared<diffusion::TextEncoder>(e.tokenizer.size(), text_config(e.config), init);
}

std::string compute_id(const EvalEncoders& e) {
  return hash_hex(fnv1a64(nn::parameters_hash(e.parameters()) + "/" + e.stats.to_json().dump()));
}

Matrix prepare(const EvalEncoders& e, const motion::MotionSequence& m) {
  const motion::MotionSequence enc =
      m.representation == motion::Representation::full ? motion::to_encoder_features(m) : m;
  require(enc.skeleton.n_joints == e.n_joints, ErrorKind::shape_mismatch,
          "evaluator expects " + std::to_string(e.n_joints) + " joints, motion has " +
              std::to_string(enc.skeleton.n_joints));
  require(enc.frames() <= e.config.max_frames, ErrorKind::shape_mismatch,
          "motion longer than the evaluator window (" + std::to_string(enc.frames()) + " > " +
              std::to_string(e.config.max_frames) + ")");
  return motion::pad_and_activate(motion::normalize(enc, e.stats), e.config.max_frames).features;
}

Tensor stack(const std::vector<Matrix>& parts) {
  Matrix x(parts.front().rows(), static_cast<Eigen::Index>(parts.size()) * parts.front().cols());
  for (std::size_t i = 0; i < parts.size(); ++i)
    x.middleCols(static_cast<Eigen::Index>(i) * parts.front().cols(), parts.front().cols()) = parts[i];
  return Tensor(std::move(x));
}

}  // namespace

EvalEncoders train_eval_encoders(const data::DatasetSplit& dataset, const EvaluatorConfig& config,
                                 std::vector<EvaluatorLogRow>* log) {
  config.validate();
  require(dataset.train.size() >= 2, ErrorKind::invalid_input, "evaluator training needs at least two motions");
  require(dataset.max_frames <= config.max_frames, ErrorKind::invalid_input,
          "dataset motions exceed evaluator.max_frames");
  EvalEncoders e;
  e.config = config;
  e.n_joints = dataset.skeleton.n_joints;
  e.stats = dataset.stats_for(motion::Representation::encoder);
  e.tokenizer = diffusion::Tokenizer(data::caption_vocabulary());
  build_networks(e);

  std::vector<Matrix> bank;
  std::vector<std::vector<int>> tokens;
  for (const auto& item : dataset.train) {
    bank.push_back(prepare(e, item.motion));
    tokens.push_back(e.tokenizer.encode(item.caption));
  }
  const int n = static_cast<int>(bank.size());
  const int batch = std::min(config.batch, n);
  std::vector<int> labels(static_cast<std::size_t>(batch));
  std::iota(labels.begin(), labels.end(), 0);

  nn::AdamW opt(e.parameters());
  for (int it = 0; it < config.iterations; ++it) {
    Rng rng(Rng::mix(config.seed, static_cast<std::uint64_t>(it) + 1));
    const auto idx = rng.sample_without_replacement(n, batch);
    std::vector<Matrix> xs;
    std::vector<std::vector<int>> ts;
    for (int i : idx) {
      xs.push_back(bank[static_cast<std::size_t>(i)]);
      ts.push_back(tokens[static_cast<std::size_t>(i)]);
    }
    const Tensor m = (*e.motion)(stack(xs), {batch, config.max_frames});
    const Tensor t = (*e.text)(ts);
    const Tensor logits = (-1.0 / config.temperature) * nn::pairwise_sq_dist(m, t);
    const Tensor loss =
        0.5 * (nn::cross_entropy_cols(logits, labels) + nn::cross_entropy_cols(nn::transpose(logits), labels));
    opt.zero_grad();
    loss.backward();
    const double progress = static_cast<double>(it) / std::max(1, config.iterations);
    opt.step(config.lr * (0.55 + 0.45 * std::cos(std::numbers::pi * progress)));
    if (log) log->push_back({it, loss.item()});
  }
  e.checkpoint_id = compute_id(e);
  return e;
}

Matrix embed_motions(const EvalEncoders& encoders, const std::vector<motion::MotionSequence>& motions) {
  nn::NoGradGuard guard;
  Matrix out(encoders.config.d_e, static_cast<Eigen::Index>(motions.size()));
  constexpr std::size_t kChunk = 64;
  for (std::size_t start = 0; start < motions.size(); start += kChunk) {
    const std::size_t count = std::min(kChunk, motions.size() - start);
    std::vector<Matrix> xs;
    for (std::size_t i = 0; i < count; ++i) xs.push_back(prepare(encoders, motions[start + i]));
    out.middleCols(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(count)) =
        (*encoders.motion)(stack(xs), {static_cast<int>(count), encoders.config.max_frames}).value();
  }
  return out;
}

Matrix embed_texts(const EvalEncoders& encoders, const std::vector<std::string>& captions) {
  nn::NoGradGuard guard;
  std::vector<std::vector<int>> tokens;
  for (const auto& c : captions) tokens.push_back(encoders.tokenizer.encode(c));
  if (tokens.empty()) return Matrix(encoders.config.d_e, 0);
  return (*encoders.text)(tokens).value();
}

double rfid(const EvalEncoders& encoders, const std::vector<motion::MotionSequence>& reconstructed,
            const std::vector<motion::MotionSequence>& real) {
  return fid(embed_motions(encoders, real), embed_motions(encoders, reconstructed));
}

double matched_pair_rate(const EvalEncoders& encoders, const std::vector<data::DatasetItem>& items,
                         std::uint64_t seed) {
  require(items.size() >= 2, ErrorKind::invalid_input, "matched_pair_rate needs at least two items");
  std::vector<motion::MotionSequence> motions;
  std::vector<std::string> captions;
  for (const auto& item : items) {
    motions.push_back(item.motion);
    captions.push_back(item.caption);
  }
  const Matrix m = embed_motions(encoders, motions);
  const Matrix t = embed_texts(encoders, captions);
  Rng rng(seed);
  const auto n = static_cast<std::int64_t>(items.size());
  int wins = 0;
  for (std::int64_t i = 0; i < n; ++i) {
    std::int64_t j = rng.uniform_int(0, n - 2);
    if (j >= i) ++j;
    if ((m.col(i) - t.col(i)).norm() < (m.col(i) - t.col(j)).norm()) ++wins;
  }
  return static_cast<double>(wins) / static_cast<double>(n);
}

void save_eval_encoders(const std::filesystem::path& dir, const EvalEncoders& encoders) {
  std::filesystem::create_directories(dir);
  write_json(dir / "config.json", {{"evaluator", encoders.config.to_json()}, {"n_joints", encoders.n_joints}});
  write_json(dir / "stats.json", encoders.stats.to_json());
  write_json(dir / "vocabulary.json", encoders.tokenizer.vocabulary());
  nn::save_parameters(dir / "weights.bin", encoders.parameters());
  atomic_write(dir / "checkpoint_id", encoders.checkpoint_id + "\n");
}

EvalEncoders load_eval_encoders(const std::filesystem::path& dir) {
  if (!std::filesystem::exists(dir / "config.json") || !std::filesystem::exists(dir / "weights.bin"))
    throw Error(ErrorKind::not_found, "no evaluator checkpoint at " + dir.string());
  const auto cfg = read_json(dir / "config.json");
  EvalEncoders e;
  e.config = EvaluatorConfig::from_json(cfg.at("evaluator"));
  e.n_joints = cfg.at("n_joints").get<int>();
  e.stats = motion::NormalizationStats::from_json(read_json(dir / "stats.json"));
  e.tokenizer = diffusion::Tokenizer(read_json(dir / "vocabulary.json").get<std::vector<std::string>>());
  build_networks(e);
  nn::load_parameters(dir / "weights.bin", e.parameters());
  e.checkpoint_id = compute_id(e);
  return e;
}

}  // namespace mola::eval
