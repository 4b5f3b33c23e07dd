// Copyright 2026 The mola Authors
// SPDX-License-Identifier: Apache-2.0

#include "mola/nn/optim.hpp"

#include "mola/error.hpp"
#include "mola/io.hpp"
#include "mola/nn/serialize.hpp"

#include <cmath>
#include <map>

namespace mola::nn {

Real gradient_norm(const NamedParameters& params) {
  Real sq = 0.0;
  for (const auto& [name, t] : params)
    if (t.has_grad()) sq += t.grad().squaredNorm();
  return std::sqrt(sq);
}

AdamW::AdamW(NamedParameters params, AdamWOptions options) : params_(std::move(params)), options_(options) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const auto& [name, t] : params_) {
    m_.push_back(Matrix::Zero(t.rows(), t.cols()));
    v_.push_back(Matrix::Zero(t.rows(), t.cols()));
  }
}

void AdamW::zero_grad() {
  for (auto& [name, t] : params_) t.zero_grad();
}

Real AdamW::step(Real lr) {
  const Real norm = gradient_norm(params_);
  if (!std::isfinite(norm)) throw Error(ErrorKind::divergence, "non-finite gradient norm");
  const Real clip = (options_.max_grad_norm > 0 && norm > options_.max_grad_norm) ? options_.max_grad_norm / norm : 1.0;
  ++steps_;
  const Real bc1 = 1.0 - std::pow(options_.beta1, static_cast<Real>(steps_));
  const Real bc2 = 1.0 - std::pow(options_.beta2, static_cast<Real>(steps_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Tensor& p = params_[i].second;
    if (!p.has_grad()) continue;
    const Matrix g = p.grad() * clip;
    m_[i] = options_.beta1 * m_[i] + (1.0 - options_.beta1) * g;
    v_[i] = options_.beta2 * v_[i] + (1.0 - options_.beta2) * g.cwiseAbs2();
    Matrix& w = p.mutable_value();
    if (options_.weight_decay > 0 && w.cols() > 1) w *= (1.0 - lr * options_.weight_decay);
    w.array() -= lr * (m_[i].array() / bc1) / ((v_[i].array() / bc2).sqrt() + options_.eps);
  }
  return norm;
}

void AdamW::save(const std::filesystem::path& path) const {
  std::map<std::string, Matrix> blob;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    blob.emplace("m/" + params_[i].first, m_[i]);
    blob.emplace("v/" + params_[i].first, v_[i]);
  }
  Matrix steps(1, 1);
  steps(0, 0) = static_cast<Real>(steps_);
  blob.emplace("steps", steps);
  atomic_write(path, encode_matrices(blob));
}

void AdamW::load(const std::filesystem::path& path) {
  const auto blob = decode_matrices(read_file(path));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto m = blob.find("m/" + params_[i].first);
    const auto v = blob.find("v/" + params_[i].first);
    require(m != blob.end() && v != blob.end(), ErrorKind::shape_mismatch,
            "optimizer state lacks " + params_[i].first);
    require(m->second.rows() == m_[i].rows() && m->second.cols() == m_[i].cols(), ErrorKind::shape_mismatch,
            "optimizer state shape mismatch for " + params_[i].first);
    m_[i] = m->second;
    v_[i] = v->second;
  }
  steps_ = static_cast<long>(blob.at("steps")(0, 0));
}

}  // namespace mola::nn
