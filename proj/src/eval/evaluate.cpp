// Copyright 2026 The mola Authors
// SPDX-License-Identifier: Apache-2.0

#include "mola/eval/evaluate.hpp"

#include "mola/error.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

namespace mola::eval {

namespace {

const char* kFields[] = {"r_precision_top1", "r_precision_top2", "r_precision_top3", "fid",      "rfid",
                         "mm_dist",          "diversity",        "mmodality",        "mpjpe_mm", "jsd",
                         "emd_frames",       "traj_err",         "loc_err",          "avg_err",  "aits_seconds"};

std::vector<double> values(const MetricsReport& r) {
  return {r.r_precision[0], r.r_precision[1], r.r_precision[2], r.fid,      r.rfid,
          r.mm_dist,        r.diversity,      r.mmodality,      r.mpjpe_mm, r.jsd,
          r.emd_frames,     r.traj_err,       r.loc_err,        r.avg_err,  r.aits_seconds};
}

void progress(const EvaluationOptions& o, const std::string& message) {
  if (o.on_progress) o.on_progress(message);
}

std::vector<diffusion::Sample> generate(const diffusion::LdmBundle& model, const std::vector<std::string>& texts,
                                        const std::vector<std::uint64_t>& seeds,
                                        const diffusion::SamplerOptions& options) {
  constexpr std::size_t kChunk = 32;
  std::vector<diffusion::Sample> out;
  for (std::size_t start = 0; start < texts.size(); start += kChunk) {
    const std::size_t end = std::min(texts.size(), start + kChunk);
    auto part = diffusion::sample_text_to_motion_batch(
        model, {texts.begin() + static_cast<long>(start), texts.begin() + static_cast<long>(end)},
        {seeds.begin() + static_cast<long>(start), seeds.begin() + static_cast<long>(end)}, options);
    for (auto& s : part) out.push_back(std::move(s));
  }
  return out;
}

std::vector<motion::MotionSequence> motions_of(const std::vector<diffusion::Sample>& samples) {
  std::vector<motion::MotionSequence> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.motion);
  return out;
}

}  // namespace

void MetricsReport::validate() const {
  const auto v = values(*this);
  for (std::size_t i = 0; i < v.size(); ++i)
    require(std::isfinite(v[i]), ErrorKind::invalid_input, std::string("metrics report: ") + kFields[i] + " is not finite");
  for (double rate : {r_precision[0], r_precision[1], r_precision[2], traj_err, loc_err, jsd})
    require(rate >= 0.0 && rate <= 1.0, ErrorKind::invalid_input, "metrics report: rate outside [0, 1]");
}

nlohmann::json MetricsReport::to_json() const {
  nlohmann::json metrics = nlohmann::json::object();
  const auto v = values(*this);
  for (std::size_t i = 0; i < v.size(); ++i) metrics[kFields[i]] = v[i];
  return {{"metrics", metrics}, {"metadata", metadata}};
}

MetricsReport MetricsReport::from_json(const nlohmann::json& j) {
  MetricsReport r;
  const auto& m = j.at("metrics");
  double* slots[] = {&r.r_precision[0], &r.r_precision[1], &r.r_precision[2], &r.fid,      &r.rfid,
                     &r.mm_dist,        &r.diversity,      &r.mmodality,      &r.mpjpe_mm, &r.jsd,
                     &r.emd_frames,     &r.traj_err,       &r.loc_err,        &r.avg_err,  &r.aits_seconds};
  for (std::size_t i = 0; i < std::size(kFields); ++i) *slots[i] = m.at(kFields[i]).get<double>();
  if (j.contains("metadata")) r.metadata = j["metadata"];
  return r;
}

std::string MetricsReport::csv_header() {
  std::string out;
  for (const char* f : kFields) out += (out.empty() ? "" : ",") + std::string(f);
  return out;
}

std::string MetricsReport::csv_row() const {
  std::string out;
  char buf[64];
  for (double v : values(*this)) {
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    out += (out.empty() ? "" : ",") + std::string(buf);
  }
  return out;
}

nlohmann::json EvaluationOptions::to_json() const {
  return {{"samples", samples},
          {"s_d", s_d},
          {"mmodality_captions", mmodality_captions},
          {"s_l", s_l},
          {"control_prompts", control_prompts},
          {"aits_prompts", aits_prompts},
          {"r_precision_pool", r_precision_pool},
          {"sampler", sampler.to_json()},
          {"guidance", guidance.to_json()},
          {"seed", seed}};
}

editing::EditSpec path_spec_from_motion(const data::DatasetItem& item) {
  const auto& j = item.joints;
  Eigen::MatrixXd path(j.cols(), 2);
  path.col(0) = j.row(0).transpose();
  path.col(1) = j.row(2).transpose();
  return editing::build_path_following_spec(path, item.caption, item.motion.skeleton, j.row(1).mean());
}

MetricsReport evaluate_model(const diffusion::LdmBundle& model, const data::DatasetSplit& dataset,
                             const EvalEncoders& encoders, const EvaluationOptions& options) {
  const auto& test = dataset.test;
  require(!test.empty(), ErrorKind::invalid_input, "evaluation needs a non-empty test split");
  const std::size_t n =
      options.samples > 0 ? std::min(test.size(), static_cast<std::size_t>(options.samples)) : test.size();
  MetricsReport report;

  progress(options, "generating " + std::to_string(n) + " samples");
  std::vector<std::string> captions;
  std::vector<std::uint64_t> seeds;
  std::vector<motion::MotionSequence> real;
  std::vector<int> real_lengths;
  for (std::size_t i = 0; i < n; ++i) {
    captions.push_back(test[i].caption);
    seeds.push_back(Rng::mix(options.seed, i));
    real.push_back(test[i].motion);
  }
  for (const auto& item : test) real_lengths.push_back(item.motion.length);
  const auto samples = generate(model, captions, seeds, options.sampler);
  const Eigen::MatrixXd gen_f = embed_motions(encoders, motions_of(samples));
  const Eigen::MatrixXd text_f = embed_texts(encoders, captions);
  const Eigen::MatrixXd real_f = embed_motions(encoders, real);

  report.r_precision = r_precision(gen_f, text_f, Rng::mix(options.seed, 0x52), options.r_precision_pool);
  report.fid = fid(real_f, gen_f);
  report.mm_dist = mm_dist(gen_f, text_f);
  const auto div = diversity(gen_f, options.s_d, Rng::mix(options.seed, 0xD1));
  report.diversity = div.value;

  std::vector<int> gen_lengths;
  for (const auto& s : samples) gen_lengths.push_back(s.motion.length);
  const auto lengths = length_distribution_report(gen_lengths, real_lengths);
  report.jsd = lengths.jsd;
  report.emd_frames = lengths.emd_frames;

  progress(options, "multimodality");
  std::vector<std::string> distinct;
  std::set<std::string> seen;
  for (const auto& item : test)
    if (seen.insert(item.caption).second && static_cast<int>(distinct.size()) < options.mmodality_captions)
      distinct.push_back(item.caption);
  std::vector<Eigen::MatrixXd> per_caption;
  for (std::size_t k = 0; k < distinct.size(); ++k) {
    std::vector<std::string> texts(static_cast<std::size_t>(2 * options.s_l), distinct[k]);
    std::vector<std::uint64_t> mm_seeds;
    for (int r = 0; r < 2 * options.s_l; ++r) mm_seeds.push_back(Rng::mix(Rng::mix(options.seed, 0x3307 + k), r));
    per_caption.push_back(embed_motions(encoders, motions_of(generate(model, texts, mm_seeds, options.sampler))));
  }
  report.mmodality = mmodality(per_caption, options.s_l, Rng::mix(options.seed, 0x33));

  progress(options, "reconstruction");
  std::vector<motion::MotionSequence> recon;
  std::vector<data::DatasetItem> recon_items(test.begin(), test.begin() + static_cast<long>(n));
  for (const auto& item : recon_items) recon.push_back(vae::reconstruct_motion(model.vae, item.motion));
  report.mpjpe_mm = vae::reconstruction_mpjpe(model.vae, recon_items);
  report.rfid = fid(real_f, embed_motions(encoders, recon));

  progress(options, "path-following control errors");
  std::vector<Eigen::MatrixXd> controlled;
  std::vector<editing::EditSpec> specs;
  const std::size_t prompts = std::min(test.size(), static_cast<std::size_t>(std::max(options.control_prompts, 0)));
  for (std::size_t i = 0; i < prompts; ++i) {
    specs.push_back(path_spec_from_motion(test[i]));
    controlled.push_back(
        editing::guided_sample(model, specs.back(), Rng::mix(options.seed, 0xC0 + i), options.guidance).decoded_joints);
  }
  if (!specs.empty()) {
    const auto ce = control_errors(controlled, specs);
    report.traj_err = ce.traj_err;
    report.loc_err = ce.loc_err;
    report.avg_err = ce.avg_err;
  }

  progress(options, "inference time");
  std::vector<std::string> aits_prompts(captions.begin(),
                                        captions.begin() + static_cast<long>(std::min<std::size_t>(
                                                               captions.size(), std::max(options.aits_prompts, 1))));
  report.aits_seconds = aits(
      [&](const std::string& text) { diffusion::sample_text_to_motion(model, text, options.seed, options.sampler); },
      aits_prompts, static_cast<int>(aits_prompts.size()));

  report.metadata = {{"banner", kEvaluatorBanner},
                     {"hardware", hardware_string()},
                     {"seeds", {{"evaluation", options.seed}, {"ldm", model.config.seed}, {"vae", model.vae.config.seed},
                                {"evaluator", encoders.config.seed}, {"dataset", dataset.seed}}},
                     {"checkpoints",
                      {{"ldm", model.checkpoint_id}, {"vae", model.vae.checkpoint_id}, {"evaluator", encoders.checkpoint_id}}},
                     {"config",
                      {{"ldm", model.config.to_json()},
                       {"vae", model.vae.config.to_json()},
                       {"evaluator", encoders.config.to_json()},
                       {"evaluation", options.to_json()}}},
                     {"counts",
                      {{"generated", n},
                       {"test", test.size()},
                       {"mmodality_captions", per_caption.size()},
                       {"control_prompts", prompts},
                       {"diversity_subset", div.subset_size},
                       {"diversity_shrunk", div.shrunk}}}};
  if (prompts == 0) report.metadata["control_errors"] = "not evaluated";
  report.validate();
  return report;
}

}  // namespace mola::eval
