// Copyright 2026 The mola Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MOLA_EVAL_METRICS_HPP
#define MOLA_EVAL_METRICS_HPP

#include "mola/editing/edit_spec.hpp"
#include "mola/error.hpp"
#include "mola/rng.hpp"

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

// Feature sets are d x n matrices: one column per sample.
namespace mola::eval {

enum class Distance { euclidean, squared };

namespace detail {

template <typename A, typename B>
double column_distance(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b, Distance mode) {
  const double sq = (a - b).squaredNorm();
  return mode == Distance::squared ? sq : std::sqrt(sq);
}

}  // namespace detail

/// Top-1/2/3 retrieval accuracy of the matching caption among `pool` - 1
/// randomly drawn mismatched captions (Euclidean distances).
template <typename DG, typename DT>
std::array<double, 3> r_precision(const Eigen::MatrixBase<DG>& gen, const Eigen::MatrixBase<DT>& text,
                                  std::uint64_t seed, int pool = 32) {
  const auto n = gen.cols();
  require(text.cols() == n && text.rows() == gen.rows(), ErrorKind::shape_mismatch,
          "r_precision: motion and text features must pair up");
  require(pool >= 2 && n >= pool, ErrorKind::invalid_input,
          "r_precision: need at least " + std::to_string(pool) + " samples");
  Rng rng(seed);
  std::array<double, 3> hits{0, 0, 0};
  for (Eigen::Index i = 0; i < n; ++i) {
    const double own = (gen.col(i) - text.col(i)).norm();
    // Mismatched indices: a draw without replacement from [0, n) \ {i}.
    auto others = rng.sample_without_replacement(static_cast<int>(n) - 1, pool - 1);
    int rank = 1;
    for (int o : others) {
      const Eigen::Index j = o < i ? o : o + 1;
      if ((gen.col(i) - text.col(j)).norm() < own) ++rank;
    }
    for (int k = 0; k < 3; ++k)
      if (rank <= k + 1) hits[static_cast<std::size_t>(k)] += 1.0;
  }
  for (auto& h : hits) h /= static_cast<double>(n);
  return hits;
}

/// Mean and unbiased covariance of the columns.
template <typename D>
std::pair<Eigen::VectorXd, Eigen::MatrixXd> mean_and_covariance(const Eigen::MatrixBase<D>& x) {
  const auto n = x.cols();
  require(n >= 2, ErrorKind::invalid_input, "covariance needs at least two samples");
  Eigen::VectorXd mu = x.rowwise().mean();
  const Eigen::MatrixXd centered = x.colwise() - mu;
  Eigen::MatrixXd cov = centered * centered.transpose() / static_cast<double>(n - 1);
  return {std::move(mu), std::move(cov)};
}

/// Frechet distance between Gaussians (mu1, s1) and (mu2, s2).
/// tr((s1 s2)^1/2) uses the eigenvalues of s1^1/2 s2 s1^1/2.
double frechet_distance(const Eigen::VectorXd& mu1, const Eigen::MatrixXd& s1, const Eigen::VectorXd& mu2,
                        const Eigen::MatrixXd& s2);

/// FID between two feature sets (each needs at least d + 1 samples).
template <typename DA, typename DB>
double fid(const Eigen::MatrixBase<DA>& real, const Eigen::MatrixBase<DB>& gen) {
  require(real.rows() == gen.rows(), ErrorKind::shape_mismatch, "fid: feature dimensions differ");
  require(real.cols() > real.rows() && gen.cols() > gen.rows(), ErrorKind::invalid_input,
          "fid: need at least d + 1 samples per set (d=" + std::to_string(real.rows()) + ")");
  const auto [m1, s1] = mean_and_covariance(real);
  const auto [m2, s2] = mean_and_covariance(gen);
  return frechet_distance(m1, s1, m2, s2);
}

/// Mean distance between paired motion and text features.
template <typename DG, typename DT>
double mm_dist(const Eigen::MatrixBase<DG>& gen, const Eigen::MatrixBase<DT>& text,
               Distance mode = Distance::euclidean) {
  require(gen.rows() == text.rows() && gen.cols() == text.cols() && gen.cols() >= 1, ErrorKind::shape_mismatch,
          "mm_dist: features must pair up");
  double total = 0.0;
  for (Eigen::Index i = 0; i < gen.cols(); ++i) total += detail::column_distance(gen.col(i), text.col(i), mode);
  return total / static_cast<double>(gen.cols());
}

struct SubsetDistance {
  double value = 0.0;
  int subset_size = 0;
  bool shrunk = false;  // requested size exceeded what the data allows
};

/// Mean distance between two disjoint random subsets of size s_d.
template <typename D>
SubsetDistance diversity(const Eigen::MatrixBase<D>& features, int s_d, std::uint64_t seed,
                         Distance mode = Distance::euclidean) {
  const int n = static_cast<int>(features.cols());
  require(n >= 2 && s_d >= 1, ErrorKind::invalid_input, "diversity: need at least two samples");
  SubsetDistance out;
  out.subset_size = std::min(s_d, n / 2);
  out.shrunk = out.subset_size < s_d;
  Rng rng(seed);
  const auto idx = rng.sample_without_replacement(n, 2 * out.subset_size);
  for (int i = 0; i < out.subset_size; ++i)
    out.value += detail::column_distance(features.col(idx[static_cast<std::size_t>(i)]),
                                         features.col(idx[static_cast<std::size_t>(out.subset_size + i)]), mode);
  out.value /= out.subset_size;
  return out;
}

/// Average over captions of the mean distance between two disjoint subsets
/// (size s_l) of that caption's generations.
double mmodality(const std::vector<Eigen::MatrixXd>& per_caption, int s_l, std::uint64_t seed,
                 Distance mode = Distance::euclidean);

struct LengthReport {
  double jsd = 0.0;         // base-2, in [0, 1]
  double emd_frames = 0.0;  // 1D Wasserstein distance
  Eigen::VectorXd generated_hist;
  Eigen::VectorXd real_hist;
};

/// Normalized histogram over [lo, hi] in bins of `width`; values outside the
/// range fall into the edge bins.
Eigen::VectorXd length_histogram(const std::vector<int>& lengths, int lo = 24, int hi = 196, int width = 4);

/// Jensen-Shannon divergence (base 2) of two histograms.
double jensen_shannon(const Eigen::VectorXd& p, const Eigen::VectorXd& q);

/// Earth mover's distance between two empirical distributions of integers.
double emd_1d(std::vector<int> a, std::vector<int> b);

LengthReport length_distribution_report(const std::vector<int>& generated, const std::vector<int>& real, int lo = 24,
                                        int hi = 196, int width = 4);

struct ControlErrors {
  double traj_err = 0.0;  // fraction of motions whose worst masked entry exceeds thresh
  double loc_err = 0.0;   // fraction of masked entries exceeding thresh
  double avg_err = 0.0;   // mean L2 over masked entries
};

/// Errors of global joints (3J x F' each, F' >= spec frames) against their specs.
ControlErrors control_errors(const std::vector<Eigen::MatrixXd>& joints, const std::vector<editing::EditSpec>& specs,
                             double thresh = 0.5);

/// Mean per-joint position error in millimetres over the first `frames`
/// frames (all frames when negative).
template <typename DA, typename DB>
double mpjpe(const Eigen::MatrixBase<DA>& recon, const Eigen::MatrixBase<DB>& gt, int frames = -1) {
  require(recon.rows() == gt.rows() && recon.rows() % 3 == 0, ErrorKind::shape_mismatch,
          "mpjpe: joint layouts differ");
  const int f = frames < 0 ? static_cast<int>(std::min(recon.cols(), gt.cols())) : frames;
  require(f >= 1 && f <= recon.cols() && f <= gt.cols(), ErrorKind::shape_mismatch, "mpjpe: frame count");
  const auto joints = recon.rows() / 3;
  double total = 0.0;
  for (int c = 0; c < f; ++c)
    for (Eigen::Index j = 0; j < joints; ++j)
      total += (recon.template block<3, 1>(3 * j, c) - gt.template block<3, 1>(3 * j, c)).norm();
  return 1000.0 * total / (static_cast<double>(f) * static_cast<double>(joints));
}

/// Mean wall-clock seconds per prompt after one untimed warm-up call.
double aits(const std::function<void(const std::string&)>& sampler, const std::vector<std::string>& prompts, int n);

/// CPU model and thread count, for report metadata.
std::string hardware_string();

}  // namespace mola::eval

#endif  // MOLA_EVAL_METRICS_HPP
