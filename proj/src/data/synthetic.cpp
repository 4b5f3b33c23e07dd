// Copyright 2026 The mola Authors
// SPDX-License-Identifier: Apache-2.0

#include "mola/data/synthetic.hpp"

#include "mola/error.hpp"
#include "mola/io.hpp"
#include "mola/motion/motion_file.hpp"
#include "mola/rng.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

namespace mola::data {

using motion::JointTrack;
using motion::SkeletonSpec;

const char* to_string(Action action) {
  switch (action) {
    case Action::walk: return "walk";
    case Action::run: return "run";
    case Action::turn_left: return "turn_left";
    case Action::turn_right: return "turn_right";
    case Action::circle: return "circle";
    case Action::wave: return "wave";
    case Action::squat: return "squat";
    case Action::walk_then_stop: return "walk_then_stop";
  }
  return "?";
}

const char* to_string(Speed speed) {
  switch (speed) {
    case Speed::slow: return "slow";
    case Speed::normal: return "normal";
    case Speed::fast: return "fast";
  }
  return "?";
}

Action action_from_string(const std::string& name) {
  for (Action a : kAllActions)
    if (name == to_string(a)) return a;
  throw Error(ErrorKind::invalid_input, "unknown action '" + name + "'");
}

Speed speed_from_string(const std::string& name) {
  for (Speed s : kAllSpeeds)
    if (name == to_string(s)) return s;
  throw Error(ErrorKind::invalid_input, "unknown speed '" + name + "'");
}

void MotionParams::validate() const {
  require(length_frames >= kMinFrames && length_frames <= kMaxFrames, ErrorKind::invalid_input,
          "length_frames must lie in [24, 196]");
  require(caption_variant >= 0 && caption_variant < kCaptionVariants, ErrorKind::invalid_input,
          "caption_variant out of range");
  require(static_cast<int>(action) >= 0 && static_cast<int>(action) < 8, ErrorKind::invalid_input, "unknown action");
  require(static_cast<int>(speed) >= 0 && static_cast<int>(speed) < 3, ErrorKind::invalid_input, "unknown speed");
}

// ---------------------------------------------------------------------------
// Captions

namespace {

struct CaptionTemplate {
  std::array<const char*, 2> phrases;  // "{adv}" marks the adverb slot
  bool adverb_before_verb;
};

CaptionTemplate caption_template(Action action) {
  switch (action) {
    case Action::walk: return {{"walks forward{adv}", "walks straight ahead{adv}"}, false};
    case Action::run: return {{"runs forward{adv}", "jogs straight ahead{adv}"}, false};
    case Action::turn_left: return {{"walks and turns left{adv}", "walks while turning to the left{adv}"}, false};
    case Action::turn_right: return {{"walks and turns right{adv}", "walks while turning to the right{adv}"}, false};
    case Action::circle: return {{"walks in a circle{adv}", "walks around in a circle{adv}"}, false};
    case Action::wave: return {{"{adv}waves with the right hand", "{adv}waves hello"}, true};
    case Action::squat: return {{"{adv}squats down", "{adv}does a squat"}, true};
    case Action::walk_then_stop: return {{"walks forward{adv} and then stops", "walks{adv} and stops"}, false};
  }
  return {{"", ""}, false};
}

std::string adverb(Speed speed, bool before_verb, int variant) {
  if (speed == Speed::normal) return "";
  static const std::array<const char*, 2> slow_pre{"slowly", "gently"};
  static const std::array<const char*, 2> fast_pre{"quickly", "rapidly"};
  static const std::array<const char*, 2> slow_post{"slowly", "at a slow pace"};
  static const std::array<const char*, 2> fast_post{"quickly", "fast"};
  const auto v = static_cast<std::size_t>(variant);
  if (before_verb) return std::string(speed == Speed::slow ? slow_pre[v] : fast_pre[v]) + " ";
  return std::string(" ") + (speed == Speed::slow ? slow_post[v] : fast_post[v]);
}

}  // namespace

std::string caption_for(const MotionParams& params) {
  static const std::array<const char*, 4> subjects{"a person", "someone", "a man", "a woman"};
  const int v = params.caption_variant;
  const CaptionTemplate tpl = caption_template(params.action);
  std::string phrase = tpl.phrases[static_cast<std::size_t>((v / 4) % 2)];
  const auto slot = phrase.find("{adv}");
  phrase.replace(slot, 5, adverb(params.speed, tpl.adverb_before_verb, (v / 8) % 2));
  return std::string(subjects[static_cast<std::size_t>(v % 4)]) + " " + phrase;
}

std::vector<std::string> all_captions() {
  std::set<std::string> out;
  for (Action a : kAllActions)
    for (Speed s : kAllSpeeds)
      for (int v = 0; v < kCaptionVariants; ++v) {
        MotionParams p;
        p.action = a;
        p.speed = s;
        p.caption_variant = v;
        out.insert(caption_for(p));
      }
  return {out.begin(), out.end()};
}

std::vector<std::string> caption_vocabulary() {
  std::set<std::string> tokens;
  for (const auto& c : all_captions()) {
    std::istringstream ss(c);
    std::string tok;
    while (ss >> tok) tokens.insert(tok);
  }
  return {tokens.begin(), tokens.end()};
}

// ---------------------------------------------------------------------------
// Motion generation

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kPreRoll = 40;
constexpr int kPostRoll = 60;

double smoothstep(double x) {
  x = std::clamp(x, 0.0, 1.0);
  return x * x * (3.0 - 2.0 * x);
}

double frac(double x) { return x - std::floor(x); }

struct Gait {
  double speed = 0.0;         // m/frame
  double cycle_length = 1.0;  // m per stride cycle
  double duty = 0.62;
  double lift = 0.08;
  double bob = 0.015;
  double crouch = 0.03;
  double lean = 0.06;
  double arm_swing = 0.35;
  double elbow_bend = 0.3;
};

Gait gait_for(const MotionParams& p, Rng& rng) {
  const auto si = static_cast<std::size_t>(p.speed);
  static const std::array<double, 3> walk{0.030, 0.045, 0.060};
  static const std::array<double, 3> run{0.090, 0.120, 0.150};
  static const std::array<double, 3> turn{0.025, 0.035, 0.045};
  Gait g;
  switch (p.action) {
    case Action::walk:
    case Action::circle:
    case Action::walk_then_stop: g.speed = walk[si]; break;
    case Action::turn_left:
    case Action::turn_right: g.speed = turn[si]; break;
    case Action::run:
      g.speed = run[si];
      g.cycle_length = 1.6;
      g.duty = 0.38;
      g.lift = 0.14;
      g.bob = 0.03;
      g.crouch = 0.06;
      g.lean = 0.2;
      g.arm_swing = 0.6;
      g.elbow_bend = 1.2;
      break;
    case Action::wave:
    case Action::squat: g.speed = 0.0; break;
  }
  if (p.action != Action::run) g.cycle_length = 0.9 + 4.0 * g.speed;
  g.speed *= rng.uniform(0.9, 1.1);
  return g;
}

struct RootTimeline {
  std::vector<double> heading;
  std::vector<double> speed;
  std::vector<Eigen::Vector2d> xz;  // (x, z)
  std::vector<double> phase;
};

struct Anchor {
  Eigen::Vector3d heel;
  double yaw = 0.0;
};

Eigen::Vector3d yaw_rotate(double yaw, const Eigen::Vector3d& v) { return motion::rotation_y(yaw) * v; }

std::vector<Eigen::Vector3d> rest_positions(const SkeletonSpec& s) {
  std::vector<Eigen::Vector3d> pos(static_cast<std::size_t>(s.n_joints));
  pos[0] = Eigen::Vector3d(0.0, s.rest_root_height, 0.0);
  for (int j = 1; j < s.n_joints; ++j)
    pos[static_cast<std::size_t>(j)] = pos[static_cast<std::size_t>(s.parents[j])] + s.offsets[static_cast<std::size_t>(j)];
  return pos;
}

/// Knee placement for a two-bone leg; straightens (and stretches) when out of reach.
Eigen::Vector3d solve_knee(const Eigen::Vector3d& hip, const Eigen::Vector3d& ankle, double thigh, double shin,
                           const Eigen::Vector3d& forward) {
  const Eigen::Vector3d d = ankle - hip;
  const double dist = d.norm();
  if (dist >= thigh + shin - 1e-9 || dist < 1e-9) return hip + d * (thigh / (thigh + shin));
  const Eigen::Vector3d u = d / dist;
  const double along = (thigh * thigh - shin * shin + dist * dist) / (2.0 * dist);
  const double height = std::sqrt(std::max(thigh * thigh - along * along, 0.0));
  Eigen::Vector3d perp = forward - forward.dot(u) * u;
  if (perp.norm() < 1e-9) perp = Eigen::Vector3d::UnitZ() - u.z() * u;
  return hip + along * u + height * perp.normalized();
}

}  // namespace

GeneratedMotion generate_motion(const MotionParams& params, const SkeletonSpec& skeleton) {
  params.validate();
  if (skeleton.n_joints != 5 && skeleton.n_joints != 22)
    throw ConfigError("skeleton", "generator supports the built-in 5- and 22-joint skeletons");
  require(skeleton.has_foot_joints(), ErrorKind::config, "generator needs foot joints");

  Rng rng(Rng::mix(params.seed, 0x5e11));
  const Gait gait = gait_for(params, rng);
  const int length = params.length_frames;
  const int total = kPreRoll + length + kPostRoll;
  const double span = std::max(length - 1, 1);

  // Action-specific profiles.
  double turn_total = 0.0;
  if (params.action == Action::turn_left) turn_total = rng.uniform(80.0, 110.0) * kPi / 180.0;
  if (params.action == Action::turn_right) turn_total = -rng.uniform(80.0, 110.0) * kPi / 180.0;
  const double stop_at = rng.uniform(0.35, 0.55) * length;
  const double squat_depth = rng.uniform(0.25, 0.4);
  static const std::array<double, 3> squat_period{60.0, 45.0, 30.0};
  static const std::array<double, 3> wave_period{20.0, 14.0, 9.0};
  const auto si = static_cast<std::size_t>(params.speed);
  const double squat_count = std::max(1.0, std::round(length / squat_period[si]));
  const double wave_phase = rng.uniform(0.0, 2.0 * kPi);
  const double start_phase = gait.speed > 0.0 ? rng.uniform(0.0, 1.0) : 0.55;

  RootTimeline tl;
  tl.heading.resize(static_cast<std::size_t>(total));
  tl.speed.resize(static_cast<std::size_t>(total));
  tl.xz.resize(static_cast<std::size_t>(total));
  tl.phase.resize(static_cast<std::size_t>(total));
  for (int n = 0; n < total; ++n) {
    const double t = n - kPreRoll;
    double h = 0.0;
    if (params.action == Action::turn_left || params.action == Action::turn_right)
      h = turn_total * smoothstep(t / span);
    else if (params.action == Action::circle)
      h = 2.0 * kPi * t / span;
    double v = gait.speed;
    if (params.action == Action::walk_then_stop) v *= 1.0 - smoothstep((t - stop_at) / 12.0);
    tl.heading[static_cast<std::size_t>(n)] = h;
    tl.speed[static_cast<std::size_t>(n)] = v;
  }

  // Root integration and gait clock.
  const double base_rate = gait.speed / gait.cycle_length;
  auto double_stance = [&](double phase) { return frac(phase) < gait.duty && frac(phase + 0.5) < gait.duty; };
  Eigen::Vector2d xz(0.0, 0.0);
  double phase = start_phase;
  for (int n = 0; n < total; ++n) {
    const auto k = static_cast<std::size_t>(n);
    tl.xz[k] = xz;
    tl.phase[k] = phase;
    const double h = tl.heading[k], v = tl.speed[k];
    xz += Eigen::Vector2d(std::sin(h) * v, std::cos(h) * v);
    double rate = v / gait.cycle_length;
    if (base_rate > 0.0 && rate < 0.5 * base_rate && !double_stance(phase)) rate = 0.5 * base_rate;
    phase += rate;
  }
  const Eigen::Vector2d origin = tl.xz[kPreRoll];
  for (auto& p : tl.xz) p -= origin;

  const auto rest = rest_positions(skeleton);
  const auto& fj = skeleton.foot_joints;
  const std::array<int, 2> heel_joint{fj[0], fj[2]};
  const std::array<int, 2> toe_joint{fj[1], fj[3]};
  const std::array<double, 2> phase_offset{0.0, 0.5};

  // One planted heel position per stance interval, taken at mid-stance.
  std::array<std::map<long, Anchor>, 2> anchors;
  auto anchor = [&](int foot, long interval) -> const Anchor& {
    auto& cache = anchors[static_cast<std::size_t>(foot)];
    auto it = cache.find(interval);
    if (it != cache.end()) return it->second;
    int n = total - 1;
    for (int m = 0; m < total; ++m)
      if (tl.phase[static_cast<std::size_t>(m)] + phase_offset[static_cast<std::size_t>(foot)] >=
          static_cast<double>(interval) + gait.duty / 2.0) {
        n = m;
        break;
      }
    const auto k = static_cast<std::size_t>(n);
    const Eigen::Vector3d lateral(rest[static_cast<std::size_t>(heel_joint[static_cast<std::size_t>(foot)])].x(), 0.0, 0.0);
    Anchor a;
    a.yaw = tl.heading[k];
    a.heel = Eigen::Vector3d(tl.xz[k].x(), 0.0, tl.xz[k].y()) + yaw_rotate(a.yaw, lateral);
    a.heel.y() = rest[static_cast<std::size_t>(heel_joint[static_cast<std::size_t>(foot)])].y();
    return cache.emplace(interval, a).first->second;
  };

  GeneratedMotion out;
  out.joints.resize(3 * skeleton.n_joints, length);
  out.stance.resize(4, length);
  out.heading.resize(length);
  if (params.action == Action::circle) out.circle_radius = gait.speed / (2.0 * std::sin(kPi / span));

  const bool humanoid = skeleton.n_joints == 22;
  for (int i = 0; i < length; ++i) {
    const auto k = static_cast<std::size_t>(i + kPreRoll);
    const double t = i;
    const double yaw = tl.heading[k];
    const double ph = tl.phase[k];
    const double gait_level = gait.speed > 0.0 ? tl.speed[k] / gait.speed : 0.0;
    const Eigen::Vector3d ground(tl.xz[k].x(), 0.0, tl.xz[k].y());
    auto to_world = [&](const Eigen::Vector3d& local) { return ground + yaw_rotate(yaw, local); };
    auto set_joint = [&](int j, const Eigen::Vector3d& p) { out.joints.block<3, 1>(3 * j, i) = p; };
    out.heading(i) = yaw;

    // Feet.
    std::array<Eigen::Vector3d, 2> heel_pos, toe_pos;
    for (int foot = 0; foot < 2; ++foot) {
      const auto f = static_cast<std::size_t>(foot);
      const double psi = ph + phase_offset[f];
      const auto interval = static_cast<long>(std::floor(psi));
      const double fr = psi - std::floor(psi);
      const Eigen::Vector3d toe_offset = rest[static_cast<std::size_t>(toe_joint[f])] - rest[static_cast<std::size_t>(heel_joint[f])];
      double foot_yaw;
      bool planted = fr < gait.duty;
      if (planted) {
        const Anchor& a = anchor(foot, interval);
        heel_pos[f] = a.heel;
        foot_yaw = a.yaw;
      } else {
        const Anchor& a = anchor(foot, interval);
        const Anchor& b = anchor(foot, interval + 1);
        const double s = (fr - gait.duty) / (1.0 - gait.duty);
        const double w = smoothstep(s);
        heel_pos[f] = (1.0 - w) * a.heel + w * b.heel;
        heel_pos[f].y() += gait.lift * std::sin(kPi * s);
        foot_yaw = (1.0 - w) * a.yaw + w * b.yaw;
      }
      toe_pos[f] = heel_pos[f] + yaw_rotate(foot_yaw, toe_offset);
      out.stance(2 * foot, i) = planted ? 1.0 : 0.0;
      out.stance(2 * foot + 1, i) = planted ? 1.0 : 0.0;
      set_joint(heel_joint[f], heel_pos[f]);
      set_joint(toe_joint[f], toe_pos[f]);
    }

    // Pelvis.
    double height = skeleton.rest_root_height;
    double squat_level = 0.0;
    Eigen::Vector3d pelvis_local(0.0, 0.0, 0.0);
    switch (params.action) {
      case Action::squat: {
        const double s = 0.5 * (1.0 - std::cos(2.0 * kPi * squat_count * t / length));
        squat_level = s;
        height -= squat_depth * s;
        pelvis_local.z() = -0.12 * s;
        break;
      }
      case Action::wave:
        height -= 0.01;
        pelvis_local.x() = 0.02 * std::sin(2.0 * kPi * t / (3.0 * wave_period[si]) + wave_phase);
        break;
      default:
        height -= gait_level * (gait.crouch + gait.bob * std::cos(4.0 * kPi * ph));
        break;
    }
    pelvis_local.y() = height;
    const Eigen::Vector3d pelvis = to_world(pelvis_local);
    set_joint(0, pelvis);
    if (!humanoid) continue;

    // Humanoid body, built in the heading frame.
    const double lean = gait_level * gait.lean + 0.5 * squat_level + 0.02;
    const Eigen::Vector3d up_dir(0.0, std::cos(lean), std::sin(lean));
    auto tilt = [&](const Eigen::Vector3d& v) {
      return Eigen::Vector3d(v.x(), v.y() * std::cos(lean) - v.z() * std::sin(lean),
                             v.y() * std::sin(lean) + v.z() * std::cos(lean));
    };
    const Eigen::Vector3d forward = yaw_rotate(yaw, Eigen::Vector3d::UnitZ());

    const Eigen::Vector3d l_hip = to_world(pelvis_local + Eigen::Vector3d(0.09, -0.08, 0.0));
    const Eigen::Vector3d r_hip = to_world(pelvis_local + Eigen::Vector3d(-0.09, -0.08, 0.0));
    set_joint(1, l_hip);
    set_joint(2, r_hip);
    set_joint(4, solve_knee(l_hip, heel_pos[0], 0.40, 0.40, forward));
    set_joint(5, solve_knee(r_hip, heel_pos[1], 0.40, 0.40, forward));

    const Eigen::Vector3d spine1 = pelvis_local + 0.12 * up_dir;
    const Eigen::Vector3d spine2 = spine1 + 0.13 * up_dir;
    const Eigen::Vector3d spine3 = spine2 + 0.05 * up_dir;
    const Eigen::Vector3d neck = spine3 + 0.20 * up_dir;
    const Eigen::Vector3d head = neck + tilt(Eigen::Vector3d(0.0, 0.12, 0.03));
    set_joint(3, to_world(spine1));
    set_joint(6, to_world(spine2));
    set_joint(9, to_world(spine3));
    set_joint(12, to_world(neck));
    set_joint(15, to_world(head));

    const std::array<double, 2> side{1.0, -1.0};  // left = +X
    for (int arm = 0; arm < 2; ++arm) {
      const auto a = static_cast<std::size_t>(arm);
      const Eigen::Vector3d collar = spine3 + tilt(Eigen::Vector3d(0.08 * side[a], 0.12, 0.0));
      const Eigen::Vector3d shoulder = collar + tilt(Eigen::Vector3d(0.10 * side[a], 0.03, 0.0));
      const double swing = gait_level * gait.arm_swing * std::sin(2.0 * kPi * ph) * (arm == 0 ? -1.0 : 1.0);
      Eigen::Vector3d upper(0.12 * side[a], -std::cos(swing), std::sin(swing));
      const double bend = swing + gait_level * gait.elbow_bend + 0.1;
      Eigen::Vector3d fore(0.05 * side[a], -std::cos(bend), std::sin(bend));
      if (squat_level > 0.0) {
        upper = (1.0 - squat_level) * upper + squat_level * Eigen::Vector3d(0.05 * side[a], -0.1, 1.0);
        fore = (1.0 - squat_level) * fore + squat_level * Eigen::Vector3d(0.0, 0.0, 1.0);
      }
      if (params.action == Action::wave && arm == 1) {
        const double w = 0.6 * std::sin(2.0 * kPi * t / wave_period[si] + wave_phase);
        upper = Eigen::Vector3d(-0.6, 0.8, 0.15);
        fore = Eigen::Vector3d(-std::sin(w), std::cos(w), 0.1);
      }
      const Eigen::Vector3d elbow = shoulder + 0.26 * upper.normalized();
      const Eigen::Vector3d wrist = elbow + 0.25 * fore.normalized();
      set_joint(arm == 0 ? 13 : 14, to_world(collar));
      set_joint(arm == 0 ? 16 : 17, to_world(shoulder));
      set_joint(arm == 0 ? 18 : 19, to_world(elbow));
      set_joint(arm == 0 ? 20 : 21, to_world(wrist));
    }
  }

  // Root at the XZ origin, facing +Z at frame 0 as seen by the feature extractor.
  const Eigen::Vector3d root0(out.joints(0, 0), 0.0, out.joints(2, 0));
  for (int j = 0; j < skeleton.n_joints; ++j) out.joints.middleRows(3 * j, 3).colwise() -= root0;
  const double h0 = motion::estimate_headings(out.joints.leftCols(1), skeleton)(0);
  const Eigen::Matrix3d undo = motion::rotation_y(-h0);
  for (int j = 0; j < skeleton.n_joints; ++j) out.joints.middleRows(3 * j, 3) = undo * out.joints.middleRows(3 * j, 3);
  out.heading.array() -= h0;
  return out;
}

// ---------------------------------------------------------------------------
// Dataset

int sample_length(Action action, std::uint64_t seed) {
  // Probability of the long mode per action; averages to 0.5 over actions.
  static const std::map<Action, double> long_mode{
      {Action::walk, 0.3},   {Action::run, 0.3},   {Action::turn_left, 0.7}, {Action::turn_right, 0.7},
      {Action::circle, 0.8}, {Action::wave, 0.2},  {Action::squat, 0.2},     {Action::walk_then_stop, 0.8}};
  Rng rng(Rng::mix(seed, 0x1e46));
  const bool is_long = rng.bernoulli(long_mode.at(action));
  const double mu = is_long ? 150.0 : 60.0;
  const double sigma = is_long ? 20.0 : 15.0;
  for (;;) {
    const double x = mu + sigma * rng.normal();
    if (x >= kMinFrames && x <= kMaxFrames) return static_cast<int>(std::lround(x));
  }
}

motion::NormalizationStats DatasetSplit::stats_for(motion::Representation rep) const {
  if (rep == motion::Representation::full) return stats;
  const motion::FeatureLayout enc{skeleton.n_joints, motion::Representation::encoder};
  motion::NormalizationStats out;
  out.mean.resize(enc.dim());
  out.std.resize(enc.dim());
  out.mean.head(enc.activation()) = stats.mean.head(enc.activation());
  out.std.head(enc.activation()) = stats.std.head(enc.activation());
  out.mean(enc.activation()) = 0.0;
  out.std(enc.activation()) = 1.0;
  return out;
}

namespace {

DatasetItem make_item(int index, std::uint64_t dataset_seed, const SkeletonSpec& skeleton) {
  const std::uint64_t item_seed = Rng::mix(dataset_seed, static_cast<std::uint64_t>(index));
  Rng rng(item_seed);
  MotionParams p;
  p.action = kAllActions[static_cast<std::size_t>(rng.uniform_int(0, 7))];
  p.speed = kAllSpeeds[static_cast<std::size_t>(rng.uniform_int(0, 2))];
  p.caption_variant = static_cast<int>(rng.uniform_int(0, kCaptionVariants - 1));
  p.seed = item_seed;
  p.length_frames = sample_length(p.action, item_seed);

  DatasetItem item;
  char id[16];
  std::snprintf(id, sizeof(id), "m%05d", index);
  item.id = id;
  item.params = p;
  item.caption = caption_for(p);
  GeneratedMotion g = generate_motion(p, skeleton);
  item.motion = motion::build_full_pose_features(g.joints, skeleton);
  item.motion.caption = item.caption;
  item.joints = std::move(g.joints);
  return item;
}

}  // namespace

DatasetSplit build_dataset(int n, std::uint64_t seed, const SkeletonSpec& skeleton) {
  require(n >= 40, ErrorKind::invalid_input, "dataset needs n >= 40");
  std::vector<DatasetItem> items;
  items.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) items.push_back(make_item(i, seed, skeleton));

  // Stratify by length: within each block of 20 (sorted by length) assign 16/1/3.
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return items[static_cast<std::size_t>(a)].params.length_frames < items[static_cast<std::size_t>(b)].params.length_frames;
  });
  Rng rng(Rng::mix(seed, 0x5b1));
  std::vector<int> split_of(static_cast<std::size_t>(n), 0);
  for (int start = 0; start < n; start += 20) {
    const int size = std::min(20, n - start);
    const int n_val = size == 20 ? 1 : static_cast<int>(std::lround(0.05 * size));
    const int n_test = size == 20 ? 3 : static_cast<int>(std::lround(0.15 * size));
    std::vector<int> tags(static_cast<std::size_t>(size), 0);
    for (int k = 0; k < n_val; ++k) tags[static_cast<std::size_t>(k)] = 1;
    for (int k = n_val; k < n_val + n_test; ++k) tags[static_cast<std::size_t>(k)] = 2;
    rng.shuffle(tags);
    for (int k = 0; k < size; ++k)
      split_of[static_cast<std::size_t>(order[static_cast<std::size_t>(start + k)])] = tags[static_cast<std::size_t>(k)];
  }

  DatasetSplit ds;
  ds.skeleton = skeleton;
  ds.seed = seed;
  for (int i = 0; i < n; ++i) {
    auto& item = items[static_cast<std::size_t>(i)];
    switch (split_of[static_cast<std::size_t>(i)]) {
      case 0: ds.train.push_back(std::move(item)); break;
      case 1: ds.val.push_back(std::move(item)); break;
      default: ds.test.push_back(std::move(item)); break;
    }
  }
  std::vector<motion::MotionSequence> train_motions;
  train_motions.reserve(ds.train.size());
  for (const auto& item : ds.train) train_motions.push_back(item.motion);
  ds.stats = motion::NormalizationStats::compute(train_motions);
  return ds;
}

void save_dataset(const DatasetSplit& ds, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "motions");
  nlohmann::json manifest;
  manifest["version"] = 1;
  manifest["seed"] = ds.seed;
  manifest["n_joints"] = ds.skeleton.n_joints;
  manifest["fps"] = ds.skeleton.fps;
  manifest["max_frames"] = ds.max_frames;
  manifest["items"] = nlohmann::json::array();
  auto emit = [&](const std::vector<DatasetItem>& items, const char* split) {
    for (const auto& item : items) {
      const std::string rel = "motions/" + item.id + ".motion.json";
      motion::MotionFile file;
      file.motion = item.motion;
      file.global_joints = item.joints;
      motion::write_motion_file(dir / rel, file);
      manifest["items"].push_back({{"id", item.id},
                                   {"path", rel},
                                   {"caption", item.caption},
                                   {"split", split},
                                   {"action", to_string(item.params.action)},
                                   {"speed", to_string(item.params.speed)},
                                   {"length", item.params.length_frames},
                                   {"caption_variant", item.params.caption_variant},
                                   {"seed", item.params.seed}});
    }
  };
  emit(ds.train, "train");
  emit(ds.val, "val");
  emit(ds.test, "test");
  write_json(dir / "stats.json", ds.stats.to_json());
  write_json(dir / "manifest.json", manifest);
}

DatasetSplit load_dataset(const std::filesystem::path& dir) {
  const auto manifest = read_json(dir / "manifest.json");
  require(manifest.value("version", 0) == 1, ErrorKind::invalid_input, "unsupported dataset manifest version");
  DatasetSplit ds;
  ds.skeleton = motion::skeleton_for_joints(manifest.at("n_joints").get<int>());
  ds.skeleton.fps = manifest.at("fps").get<int>();
  ds.seed = manifest.at("seed").get<std::uint64_t>();
  ds.max_frames = manifest.at("max_frames").get<int>();
  for (const auto& entry : manifest.at("items")) {
    DatasetItem item;
    item.id = entry.at("id").get<std::string>();
    item.caption = entry.at("caption").get<std::string>();
    item.params.action = action_from_string(entry.at("action").get<std::string>());
    item.params.speed = speed_from_string(entry.at("speed").get<std::string>());
    item.params.length_frames = entry.at("length").get<int>();
    item.params.caption_variant = entry.at("caption_variant").get<int>();
    item.params.seed = entry.at("seed").get<std::uint64_t>();
    auto file = motion::read_motion_file(dir / entry.at("path").get<std::string>());
    item.motion = std::move(file.motion);
    item.motion.skeleton = ds.skeleton;
    if (file.global_joints) item.joints = std::move(*file.global_joints);
    const auto split = entry.at("split").get<std::string>();
    if (split == "train")
      ds.train.push_back(std::move(item));
    else if (split == "val")
      ds.val.push_back(std::move(item));
    else
      ds.test.push_back(std::move(item));
  }
  ds.stats = motion::NormalizationStats::from_json(read_json(dir / "stats.json"));
  return ds;
}

}  // namespace mola::data
