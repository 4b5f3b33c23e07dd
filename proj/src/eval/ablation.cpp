// Copyright 2026 The mola Authors
// SPDX-License-Identifier: Apache-2.0

#include "mola/eval/ablation.hpp"

#include "mola/config.hpp"
#include "mola/diffusion/sampler.hpp"
#include "mola/diffusion/stage2.hpp"
#include "mola/error.hpp"
#include "mola/eval/evaluate.hpp"
#include "mola/vae/stage1.hpp"

#include <cstdio>
#include <map>

namespace mola::eval {

std::string AblationCell::key() const {
  return "dz" + std::to_string(d_z) + "_" + vae::to_string(adversary) + "_" + motion::to_string(input);
}

void AblationGrid::validate() const {
  vae.validate();
  ldm.validate();
  check_field(!d_z.empty() && !adversaries.empty() && !inputs.empty(), "ablation.grid", "axes must be non-empty");
  for (int d : d_z) check_field(d >= 1, "ablation.grid.d_z", "must be >= 1");
  check_field(reference_d_z >= 1, "ablation.reference.d_z", "must be >= 1");
  check_field(generation_samples >= 0, "ablation.generation.samples", "must be >= 0");
  check_field(control_prompts >= 0, "ablation.control.prompts", "must be >= 0");
  sampler.validate(ldm.diffusion_steps);
  guidance.validate();
}

nlohmann::json AblationGrid::to_json() const {
  nlohmann::json adv = nlohmann::json::array();
  for (auto a : adversaries) adv.push_back(vae::to_string(a));
  nlohmann::json in = nlohmann::json::array();
  for (auto r : inputs) in.push_back(motion::to_string(r));
  return {{"vae", vae.to_json()},
          {"ldm", ldm.to_json()},
          {"grid", {{"d_z", d_z}, {"adversary", adv}, {"input", in}}},
          {"reference",
           {{"d_z", reference_d_z},
            {"adversary", vae::to_string(reference_adversary)},
            {"input", motion::to_string(reference_input)}}},
          {"generation", {{"samples", generation_samples}, {"sampler", sampler.to_json()}}},
          {"control", {{"prompts", control_prompts}, {"guidance", guidance.to_json()}}}};
}

AblationGrid AblationGrid::from_json(const nlohmann::json& j) {
  AblationGrid g;
  ConfigReader r(j, "ablation");
  if (r.has("vae")) g.vae = vae::VaeConfig::from_json(r.at("vae"), "ablation.vae");
  if (r.has("ldm")) g.ldm = diffusion::DiffusionConfig::from_json(r.at("ldm"), "ablation.ldm");
  g.sampler = diffusion::SamplerOptions::from_config(g.ldm);
  g.guidance.sampler = g.sampler;
  auto parse_adv = [](const nlohmann::json& v, const std::string& field) {
    if (!v.is_string()) throw ConfigError(field, "expected a string");
    try {
      return vae::adversary_from_string(v.get<std::string>());
    } catch (const Error& e) {
      throw ConfigError(field, e.what());
    }
  };
  auto parse_input = [](const nlohmann::json& v, const std::string& field) {
    if (!v.is_string()) throw ConfigError(field, "expected a string");
    try {
      return motion::representation_from_string(v.get<std::string>());
    } catch (const Error& e) {
      throw ConfigError(field, e.what());
    }
  };
  if (r.has("grid")) {
    ConfigReader gr(r.at("grid"), "ablation.grid");
    gr.get("d_z", g.d_z);
    if (gr.has("adversary")) {
      g.adversaries.clear();
      for (const auto& v : gr.at("adversary")) g.adversaries.push_back(parse_adv(v, "ablation.grid.adversary"));
    }
    if (gr.has("input")) {
      g.inputs.clear();
      for (const auto& v : gr.at("input")) g.inputs.push_back(parse_input(v, "ablation.grid.input"));
    }
    gr.reject_unknown();
  }
  if (r.has("reference")) {
    ConfigReader rr(r.at("reference"), "ablation.reference");
    rr.get("d_z", g.reference_d_z);
    if (rr.has("adversary")) g.reference_adversary = parse_adv(rr.at("adversary"), "ablation.reference.adversary");
    if (rr.has("input")) g.reference_input = parse_input(rr.at("input"), "ablation.reference.input");
    rr.reject_unknown();
  }
  if (r.has("generation")) {
    ConfigReader gr(r.at("generation"), "ablation.generation");
    gr.get("samples", g.generation_samples);
    if (gr.has("sampler")) {
      ConfigReader s(gr.at("sampler"), "ablation.generation.sampler");
      s.get("steps", g.sampler.steps);
      s.get("cfg_scale", g.sampler.cfg_scale);
      s.get("eta", g.sampler.eta);
      s.get("delta", g.sampler.delta);
      s.reject_unknown();
    }
    gr.reject_unknown();
  }
  g.guidance.sampler = g.sampler;
  if (r.has("control")) {
    ConfigReader cr(r.at("control"), "ablation.control");
    cr.get("prompts", g.control_prompts);
    if (cr.has("guidance")) g.guidance = editing::GuidanceConfig::from_json(cr.at("guidance"), g.guidance);
    cr.reject_unknown();
  }
  r.reject_unknown();
  g.validate();
  return g;
}

nlohmann::json AblationReport::to_json() const {
  nlohmann::json rows_j = nlohmann::json::array();
  for (const auto& row : rows) {
    nlohmann::json j = {{"table", row.table},
                        {"group", row.group},
                        {"label", row.label},
                        {"reference", row.reference},
                        {"d_z", row.cell.d_z},
                        {"adversary", vae::to_string(row.cell.adversary)},
                        {"input", motion::to_string(row.cell.input)},
                        {"seed", row.seed},
                        {"vae_checkpoint", row.vae_checkpoint},
                        {"ldm_checkpoint", row.ldm_checkpoint},
                        {"rfid", row.rfid},
                        {"mpjpe_mm", row.mpjpe_mm},
                        {"fid", row.fid ? nlohmann::json(*row.fid) : nlohmann::json(nullptr)},
                        {"mm_dist", row.mm_dist ? nlohmann::json(*row.mm_dist) : nlohmann::json(nullptr)}};
    if (row.control)
      j["control"] = {{"traj_err", row.control->traj_err},
                      {"loc_err", row.control->loc_err},
                      {"avg_err", row.control->avg_err}};
    rows_j.push_back(std::move(j));
  }
  return {{"rows", rows_j}, {"metadata", metadata}};
}

std::string AblationReport::to_csv() const {
  std::string out =
      "table,group,label,reference,d_z,adversary,input,seed,vae_checkpoint,ldm_checkpoint,rfid,mpjpe_mm,fid,mm_dist,"
      "traj_err,loc_err,avg_err\n";
  auto num = [](double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return std::string(buf);
  };
  for (const auto& r : rows) {
    out += r.table + "," + r.group + "," + r.label + "," + (r.reference ? "1" : "0") + "," + std::to_string(r.cell.d_z) +
           "," + vae::to_string(r.cell.adversary) + "," + motion::to_string(r.cell.input) + "," +
           std::to_string(r.seed) + "," + r.vae_checkpoint + "," + r.ldm_checkpoint + "," + num(r.rfid) + "," +
           num(r.mpjpe_mm) + "," + (r.fid ? num(*r.fid) : "") + "," + (r.mm_dist ? num(*r.mm_dist) : "") + "," +
           (r.control ? num(r.control->traj_err) : "") + "," + (r.control ? num(r.control->loc_err) : "") + "," +
           (r.control ? num(r.control->avg_err) : "") + "\n";
  }
  return out;
}

namespace {

struct CellResult {
  std::string vae_checkpoint, ldm_checkpoint;
  double rfid = 0.0, mpjpe_mm = 0.0;
  std::optional<double> fid, mm_dist;
  std::optional<ControlErrors> control;
};

struct PlannedRow {
  std::string group, label;
  AblationCell cell;
  bool editing = false;
};

std::vector<PlannedRow> plan(const AblationGrid& g) {
  std::vector<PlannedRow> rows;
  const AblationCell ref{g.reference_d_z, g.reference_adversary, g.reference_input};
  for (int d : g.d_z) {
    AblationCell c = ref;
    c.d_z = d;
    rows.push_back({"d_z", "d_z=" + std::to_string(d), c});
  }
  for (auto a : g.adversaries) {
    AblationCell c = ref;
    c.adversary = a;
    rows.push_back({"adversary", std::string("adversary=") + vae::to_string(a), c});
  }
  for (auto in : g.inputs) {
    AblationCell c = ref;
    c.input = in;
    rows.push_back({"input", std::string("input=") + motion::to_string(in), c});
  }
  if (g.control_prompts > 0)
    for (auto in : g.inputs) {
      AblationCell c = ref;
      c.input = in;
      rows.push_back({"input", std::string("input=") + motion::to_string(in), c, true});
    }
  return rows;
}

CellResult run_cell(const AblationGrid& g, const AblationCell& cell, bool want_control, const data::DatasetSplit& ds,
                    std::uint64_t seed, const EvalEncoders& encoders, const AblationOptions& options) {
  CellResult out;
  vae::VaeConfig vc = g.vae;
  vc.d_z = cell.d_z;
  vc.adversary = cell.adversary;
  vc.input = cell.input;
  vc.seed = seed;
  const auto dir = options.work_dir.empty() ? std::filesystem::path()
                                            : options.work_dir / ("seed" + std::to_string(seed)) / cell.key();
  vae::Stage1Options s1;
  if (!dir.empty()) s1.out_dir = dir / "vae";
  const vae::VaeBundle vae = vae::train_stage1(ds, vc, s1).bundle;
  out.vae_checkpoint = vae.checkpoint_id;

  std::vector<motion::MotionSequence> real, recon;
  for (const auto& item : ds.test) {
    real.push_back(item.motion);
    recon.push_back(vae::reconstruct_motion(vae, item.motion));
  }
  const Eigen::MatrixXd real_f = embed_motions(encoders, real);
  out.rfid = fid(real_f, embed_motions(encoders, recon));
  out.mpjpe_mm = vae::reconstruction_mpjpe(vae, ds.test);

  if (g.generation_samples == 0 && !want_control) return out;
  diffusion::DiffusionConfig lc = g.ldm;
  lc.seed = seed;
  diffusion::Stage2Options s2;
  if (!dir.empty()) s2.out_dir = dir / "ldm";
  const diffusion::LdmBundle ldm = diffusion::train_stage2(vae, ds, lc, s2).bundle;
  out.ldm_checkpoint = ldm.checkpoint_id;

  if (g.generation_samples > 0) {
    const std::size_t n = std::min(ds.test.size(), static_cast<std::size_t>(g.generation_samples));
    std::vector<std::string> captions;
    std::vector<std::uint64_t> seeds;
    for (std::size_t i = 0; i < n; ++i) {
      captions.push_back(ds.test[i].caption);
      seeds.push_back(Rng::mix(seed, i));
    }
    std::vector<motion::MotionSequence> gen;
    for (auto& s : diffusion::sample_text_to_motion_batch(ldm, captions, seeds, g.sampler))
      gen.push_back(std::move(s.motion));
    const Eigen::MatrixXd gen_f = embed_motions(encoders, gen);
    out.fid = fid(real_f, gen_f);
    out.mm_dist = mm_dist(gen_f, embed_texts(encoders, captions));
  }
  if (want_control) {
    const std::size_t n = std::min(ds.test.size(), static_cast<std::size_t>(g.control_prompts));
    std::vector<Eigen::MatrixXd> joints;
    std::vector<editing::EditSpec> specs;
    for (std::size_t i = 0; i < n; ++i) {
      specs.push_back(path_spec_from_motion(ds.test[i]));
      joints.push_back(editing::guided_sample(ldm, specs.back(), Rng::mix(seed, 0xC0 + i), g.guidance).decoded_joints);
    }
    out.control = control_errors(joints, specs);
  }
  return out;
}

}  // namespace

AblationReport run_ablation_suite(const AblationGrid& grid, const data::DatasetSplit& dataset,
                                  const std::vector<std::uint64_t>& seeds, const EvalEncoders& encoders,
                                  const AblationOptions& options) {
  grid.validate();
  require(!seeds.empty(), ErrorKind::invalid_input, "ablation needs at least one seed");
  require(dataset.skeleton.n_joints == grid.vae.n_joints, ErrorKind::invalid_input,
          "ablation: dataset skeleton and vae.n_joints disagree");
  const auto planned = plan(grid);
  AblationReport report;
  for (std::uint64_t seed : seeds) {
    std::map<std::string, bool> needs_control;
    for (const auto& p : planned)
      if (p.editing) needs_control[p.cell.key()] = true;
    std::map<std::string, CellResult> done;
    for (const auto& p : planned) {
      const std::string key = p.cell.key();
      if (!done.count(key)) {
        if (options.on_progress) options.on_progress("seed " + std::to_string(seed) + ": cell " + key);
        done[key] = run_cell(grid, p.cell, needs_control.count(key) > 0, dataset, seed, encoders, options);
      }
      const CellResult& r = done[key];
      AblationRow row;
      row.table = p.editing ? "editing" : "reconstruction";
      row.group = p.group;
      row.label = p.label;
      row.reference = p.cell.d_z == grid.reference_d_z && p.cell.adversary == grid.reference_adversary &&
                      p.cell.input == grid.reference_input;
      row.cell = p.cell;
      row.seed = seed;
      row.vae_checkpoint = r.vae_checkpoint;
      row.ldm_checkpoint = r.ldm_checkpoint;
      row.rfid = r.rfid;
      row.mpjpe_mm = r.mpjpe_mm;
      if (!p.editing) {
        row.fid = r.fid;
        row.mm_dist = r.mm_dist;
      } else {
        row.control = r.control;
      }
      report.rows.push_back(std::move(row));
    }
  }
  report.metadata = {{"banner", kEvaluatorBanner},
                     {"hardware", hardware_string()},
                     {"grid", grid.to_json()},
                     {"seeds", seeds},
                     {"dataset", {{"seed", dataset.seed}, {"train", dataset.train.size()}, {"test", dataset.test.size()}}},
                     {"evaluator_checkpoint", encoders.checkpoint_id}};
  return report;
}

}  // namespace mola::eval
