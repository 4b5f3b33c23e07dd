// Copyright 2026 The mola Authors
// SPDX-License-Identifier: Apache-2.0

#include "mola/eval/metrics.hpp"

#include <chrono>
#include <fstream>
#include <thread>

namespace mola::eval {

namespace {

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& s) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (s + s.transpose()));
  const Eigen::VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace

double frechet_distance(const Eigen::VectorXd& mu1, const Eigen::MatrixXd& s1, const Eigen::VectorXd& mu2,
                        const Eigen::MatrixXd& s2) {
  require(mu1.size() == mu2.size() && s1.rows() == mu1.size() && s2.rows() == mu2.size() && s1.cols() == s1.rows() &&
              s2.cols() == s2.rows(),
          ErrorKind::shape_mismatch, "frechet_distance: shapes disagree");
  const Eigen::MatrixXd r1 = psd_sqrt(s1);
  const Eigen::MatrixXd m = r1 * s2 * r1;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
  const Eigen::VectorXd ev = eig.eigenvalues();
  const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
  require(ev.minCoeff() >= -1e-6 * scale, ErrorKind::divergence,
          "frechet_distance: covariance product has a negative eigenvalue " + std::to_string(ev.minCoeff()));
  const double trace_sqrt = ev.cwiseMax(0.0).cwiseSqrt().sum();
  const double value = (mu1 - mu2).squaredNorm() + s1.trace() + s2.trace() - 2.0 * trace_sqrt;
  return std::max(value, 0.0);
}

double mmodality(const std::vector<Eigen::MatrixXd>& per_caption, int s_l, std::uint64_t seed, Distance mode) {
  require(!per_caption.empty() && s_l >= 1, ErrorKind::invalid_input, "mmodality: need at least one caption");
  double total = 0.0;
  for (std::size_t k = 0; k < per_caption.size(); ++k) {
    const auto& g = per_caption[k];
    require(g.cols() >= 2 * s_l, ErrorKind::invalid_input,
            "mmodality: caption " + std::to_string(k) + " has " + std::to_string(g.cols()) +
                " generations, needs " + std::to_string(2 * s_l));
    Rng rng(Rng::mix(seed, k));
    const auto idx = rng.sample_without_replacement(static_cast<int>(g.cols()), 2 * s_l);
    double sum = 0.0;
    for (int i = 0; i < s_l; ++i)
      sum += detail::column_distance(g.col(idx[static_cast<std::size_t>(i)]),
                                     g.col(idx[static_cast<std::size_t>(s_l + i)]), mode);
    total += sum / s_l;
  }
  return total / static_cast<double>(per_caption.size());
}

Eigen::VectorXd length_histogram(const std::vector<int>& lengths, int lo, int hi, int width) {
  require(width >= 1 && hi > lo, ErrorKind::invalid_input, "length_histogram: bad bin layout");
  require(!lengths.empty(), ErrorKind::invalid_input, "length_histogram: no lengths");
  const int bins = (hi - lo) / width + 1;
  Eigen::VectorXd h = Eigen::VectorXd::Zero(bins);
  for (int len : lengths) h(std::clamp((len - lo) / width, 0, bins - 1)) += 1.0;
  return h / static_cast<double>(lengths.size());
}

double jensen_shannon(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
  require(p.size() == q.size(), ErrorKind::shape_mismatch, "jensen_shannon: histogram sizes differ");
  const Eigen::VectorXd m = 0.5 * (p + q);
  auto kl = [&](const Eigen::VectorXd& a) {
    double out = 0.0;
    for (Eigen::Index i = 0; i < a.size(); ++i)
      if (a(i) > 0) out += a(i) * std::log2(a(i) / m(i));
    return out;
  };
  return std::clamp(0.5 * kl(p) + 0.5 * kl(q), 0.0, 1.0);
}

double emd_1d(std::vector<int> a, std::vector<int> b) {
  require(!a.empty() && !b.empty(), ErrorKind::invalid_input, "emd_1d: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  // Integral of |F_a - F_b| over the merged support.
  std::vector<int> support(a);
  support.insert(support.end(), b.begin(), b.end());
  std::sort(support.begin(), support.end());
  support.erase(std::unique(support.begin(), support.end()), support.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  double total = 0.0;
  std::size_t ia = 0;
  std::size_t ib = 0;
  for (std::size_t s = 0; s + 1 < support.size(); ++s) {
    while (ia < a.size() && a[ia] <= support[s]) ++ia;
    while (ib < b.size() && b[ib] <= support[s]) ++ib;
    total += std::abs(static_cast<double>(ia) / na - static_cast<double>(ib) / nb) * (support[s + 1] - support[s]);
  }
  return total;
}

LengthReport length_distribution_report(const std::vector<int>& generated, const std::vector<int>& real, int lo,
                                        int hi, int width) {
  LengthReport r;
  r.generated_hist = length_histogram(generated, lo, hi, width);
  r.real_hist = length_histogram(real, lo, hi, width);
  r.jsd = jensen_shannon(r.generated_hist, r.real_hist);
  r.emd_frames = emd_1d(generated, real);
  return r;
}

ControlErrors control_errors(const std::vector<Eigen::MatrixXd>& joints, const std::vector<editing::EditSpec>& specs,
                             double thresh) {
  require(joints.size() == specs.size() && !specs.empty(), ErrorKind::shape_mismatch,
          "control_errors: one motion per spec required");
  ControlErrors out;
  std::size_t entries = 0;
  std::size_t over = 0;
  std::size_t failed_motions = 0;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const auto& spec = specs[i];
    const auto& x = joints[i];
    require(x.rows() == 3 * spec.n_joints() && x.cols() >= spec.frames(), ErrorKind::shape_mismatch,
            "control_errors: motion " + std::to_string(i) + " does not cover its spec");
    double worst = 0.0;
    for (int f = 0; f < spec.frames(); ++f)
      for (int j = 0; j < spec.n_joints(); ++j) {
        if (spec.mask(j, f) == 0.0) continue;
        const double e = (x.block<3, 1>(3 * j, f) - spec.targets.block<3, 1>(3 * j, f)).norm();
        out.avg_err += e;
        worst = std::max(worst, e);
        ++entries;
        if (e > thresh) ++over;
      }
    if (worst > thresh) ++failed_motions;
  }
  require(entries > 0, ErrorKind::invalid_input, "control_errors: no masked entries");
  out.avg_err /= static_cast<double>(entries);
  out.loc_err = static_cast<double>(over) / static_cast<double>(entries);
  out.traj_err = static_cast<double>(failed_motions) / static_cast<double>(specs.size());
  return out;
}

double aits(const std::function<void(const std::string&)>& sampler, const std::vector<std::string>& prompts, int n) {
  require(n >= 1, ErrorKind::invalid_input, "aits: n must be >= 1");
  require(!prompts.empty(), ErrorKind::invalid_input, "aits: no prompts");
  sampler(prompts.front());
  const auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < n; ++i) sampler(prompts[static_cast<std::size_t>(i) % prompts.size()]);
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
  return elapsed.count() / n;
}

std::string hardware_string() {
  std::string model = "unknown cpu";
  std::ifstream in("/proc/cpuinfo");
  for (std::string line; std::getline(in, line);) {
    if (line.rfind("model name", 0) == 0) {
      const auto colon = line.find(':');
      if (colon != std::string::npos) model = line.substr(colon + 2);
      break;
    }
  }
  return model + ", " + std::to_string(std::thread::hardware_concurrency()) + " threads, single-threaded run";
}

}  // namespace mola::eval
