// Copyright 2026 The mola Authors
// SPDX-License-Identifier: Apache-2.0

#include "mola/error.hpp"
#include "mola/nn/layers.hpp"
#include "mola/nn/ops.hpp"
#include "mola/nn/optim.hpp"
#include "mola/nn/serialize.hpp"

#include <doctest.h>

#include <filesystem>
#include <functional>

using namespace mola;
using namespace mola::nn;

namespace {

using Fn = std::function<Tensor(const std::vector<Tensor>&)>;

/// Max relative error between backward() and central differences.
double gradcheck(const Fn& f, std::vector<Matrix> values, double h = 1e-6) {
  std::vector<Tensor> inputs;
  for (auto& v : values) inputs.emplace_back(v, true);
  // Contract the output with a fixed random weighting to get a scalar.
  Rng rng(1234);
  const Tensor probe = f(inputs);
  const Matrix w = rng.normal_matrix(probe.rows(), probe.cols());
  auto scalar = [&](const std::vector<Tensor>& in) { return sum(mul(f(in), constant(w))); };
  scalar(inputs).backward();
  double worst = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    for (Eigen::Index k = 0; k < values[i].size(); ++k) {
      auto plus = values, minus = values;
      plus[i].data()[k] += h;
      minus[i].data()[k] -= h;
      std::vector<Tensor> tp, tm;
      for (auto& v : plus) tp.emplace_back(v);
      for (auto& v : minus) tm.emplace_back(v);
      const double fd = (scalar(tp).item() - scalar(tm).item()) / (2 * h);
      const double an = inputs[i].has_grad() ? inputs[i].grad().data()[k] : 0.0;
      worst = std::max(worst, std::abs(fd - an) / std::max(1.0, std::abs(fd)));
    }
  }
  return worst;
}

Matrix rnd(Eigen::Index r, Eigen::Index c, std::uint64_t seed) { return Rng(seed).normal_matrix(r, c); }

}  // namespace

TEST_CASE("elementwise and matrix op gradients") {
  CHECK(gradcheck([](auto& in) { return matmul(in[0], in[1]); }, {rnd(3, 4, 1), rnd(4, 2, 2)}) < 1e-6);
  CHECK(gradcheck([](auto& in) { return mul(in[0], in[1]) - in[0]; }, {rnd(3, 4, 1), rnd(3, 4, 2)}) < 1e-6);
  CHECK(gradcheck([](auto& in) { return add_col(in[0], in[1]); }, {rnd(3, 4, 1), rnd(3, 1, 2)}) < 1e-6);
  CHECK(gradcheck([](auto& in) { return add_tiled(in[0], in[1]); }, {rnd(3, 6, 1), rnd(3, 2, 2)}) < 1e-6);
  CHECK(gradcheck([](auto& in) { return add_per_sequence(in[0], in[1], {2, 3}); }, {rnd(3, 6, 1), rnd(3, 2, 2)}) < 1e-6);
  CHECK(gradcheck([](auto& in) { return leaky_relu(in[0], 0.2); }, {rnd(3, 4, 3)}) < 1e-6);
  CHECK(gradcheck([](auto& in) { return sigmoid(in[0]); }, {rnd(3, 4, 3)}) < 1e-6);
  CHECK(gradcheck([](auto& in) { return silu(in[0]); }, {rnd(3, 4, 3)}) < 1e-6);
  CHECK(gradcheck([](auto& in) { return exp(in[0]); }, {rnd(3, 4, 3)}) < 1e-6);
  CHECK(gradcheck([](auto& in) { return mean(in[0]); }, {rnd(3, 4, 3)}) < 1e-6);
  CHECK(gradcheck([](auto& in) { return column_dot(in[0], in[1]); }, {rnd(3, 4, 1), rnd(3, 4, 2)}) < 1e-6);
  CHECK(gradcheck([](auto& in) { return sequence_mean(in[0], {2, 3}); }, {rnd(4, 6, 3)}) < 1e-6);
}

TEST_CASE("reshaping op gradients") {
  CHECK(gradcheck([](auto& in) { return slice_rows(in[0], 1, 2); }, {rnd(4, 3, 1)}) < 1e-6);
  CHECK(gradcheck([](auto& in) { return slice_cols(in[0], 1, 2); }, {rnd(4, 3, 1)}) < 1e-6);
  CHECK(gradcheck([](auto& in) { return concat_rows({in[0], in[1]}); }, {rnd(2, 3, 1), rnd(4, 3, 2)}) < 1e-6);
  CHECK(gradcheck([](auto& in) { return concat_cols({in[0], in[1]}); }, {rnd(2, 3, 1), rnd(2, 1, 2)}) < 1e-6);
  CHECK(gradcheck([](auto& in) { return gather_cols(in[0], {2, 0, 2, 1}); }, {rnd(3, 3, 1)}) < 1e-6);
  CHECK(gradcheck([](auto& in) { return concat_sequences(in[0], {2, 1}, in[1], {2, 3}); }, {rnd(3, 2, 1), rnd(3, 6, 2)}) <
        1e-6);
  CHECK(gradcheck([](auto& in) { return slice_sequences(in[0], {2, 4}, 1, 2); }, {rnd(3, 8, 1)}) < 1e-6);
  CHECK(gradcheck([](auto& in) { return upsample2(in[0], {2, 3}); }, {rnd(3, 6, 1)}) < 1e-6);
}

TEST_CASE("sequence layer gradients") {
  CHECK(gradcheck([](auto& in) { return conv1d(in[0], in[1], in[2], {2, 8}, 3, 1, 1); },
                  {rnd(3, 16, 1), rnd(4, 9, 2), rnd(4, 1, 3)}) < 1e-6);
  CHECK(gradcheck([](auto& in) { return conv1d(in[0], in[1], in[2], {2, 8}, 4, 2, 1); },
                  {rnd(3, 16, 1), rnd(4, 12, 2), rnd(4, 1, 3)}) < 1e-6);
  CHECK(gradcheck([](auto& in) { return layer_norm(in[0], in[1], in[2]); }, {rnd(5, 4, 1), rnd(5, 1, 2), rnd(5, 1, 3)}) <
        1e-5);
  CHECK(gradcheck([](auto& in) { return attention(in[0], in[1], in[2], {2, 5}, 2); },
                  {rnd(4, 10, 1), rnd(4, 10, 2), rnd(4, 10, 3)}) < 1e-6);
  CHECK(gradcheck([](auto& in) { return attention(in[0], in[1], in[2], {2, 5}, 2, {3, 5}); },
                  {rnd(4, 10, 1), rnd(4, 10, 2), rnd(4, 10, 3)}) < 1e-6);
}

TEST_CASE("loss gradients") {
  const Matrix target = rnd(3, 5, 9);
  CHECK(gradcheck([&](auto& in) { return mse_loss(in[0], target); }, {rnd(3, 5, 1)}) < 1e-6);
  CHECK(gradcheck([&](auto& in) { return smooth_l1_loss(in[0], target); }, {rnd(3, 5, 1) * 2.0}) < 1e-6);
  const Matrix labels = (rnd(1, 6, 4).array() > 0).cast<double>();
  CHECK(gradcheck([&](auto& in) { return bce_with_logits(in[0], labels); }, {rnd(1, 6, 1)}) < 1e-6);
  CHECK(gradcheck([](auto& in) { return gaussian_kl(in[0], in[1], 3); }, {rnd(2, 6, 1), rnd(2, 6, 2)}) < 1e-6);
  Matrix mask = Matrix::Zero(2, 4);
  mask(0, 1) = 1;
  mask(1, 3) = 1;
  CHECK(gradcheck([&](auto& in) { return masked_norm_sum(in[0], mask); }, {rnd(6, 4, 1)}) < 1e-6);
  CHECK(gradcheck([](auto& in) { return recover_joints(in[0], {2, 4}, 3); }, {rnd(14, 8, 1) * 0.3}) < 1e-6);
  CHECK(gradcheck([](auto& in) { return transpose(in[0]); }, {rnd(3, 5, 1)}) < 1e-6);
  CHECK(gradcheck([](auto& in) { return pairwise_sq_dist(in[0], in[1]); }, {rnd(3, 4, 1), rnd(3, 5, 2)}) < 1e-6);
  CHECK(gradcheck([](auto& in) { return cross_entropy_cols(in[0], {0, 3, 1}); }, {rnd(4, 3, 1) * 2.0}) < 1e-6);
}

TEST_CASE("loss values") {
  Tensor p(Matrix::Constant(1, 2, 3.0));
  CHECK(smooth_l1_loss(p, Matrix::Zero(1, 2)).item() == doctest::Approx(2.5));
  CHECK(smooth_l1_loss(Tensor(Matrix::Constant(1, 1, 0.5)), Matrix::Zero(1, 1)).item() == doctest::Approx(0.125));
  CHECK(gaussian_kl(Tensor(Matrix::Zero(2, 3)), Tensor(Matrix::Zero(2, 3)), 1).item() == 0.0);
  Matrix mu(1, 2);
  mu << 1.0, 2.0;
  CHECK(gaussian_kl(Tensor(mu), Tensor(Matrix::Zero(1, 2)), 1).item() == doctest::Approx(2.5));
  CHECK(bce_with_logits(Tensor(Matrix::Zero(1, 1)), Matrix::Ones(1, 1)).item() == doctest::Approx(std::log(2.0)));
  Matrix x = Matrix::Zero(3, 1);
  Matrix mask = Matrix::Ones(1, 1);
  Tensor xt(x, true);
  masked_norm_sum(xt, mask).backward();
  CHECK(xt.grad().cwiseAbs().maxCoeff() == 0.0);

  Matrix a(2, 2), b(2, 1);
  a << 0, 3, 0, 4;
  b << 1, 1;
  const Matrix d = pairwise_sq_dist(Tensor(a), Tensor(b)).value();
  CHECK(d(0, 0) == doctest::Approx(2.0));
  CHECK(d(1, 0) == doctest::Approx(13.0));
  Matrix logits = Matrix::Zero(4, 2);
  CHECK(cross_entropy_cols(Tensor(logits), {1, 2}).item() == doctest::Approx(std::log(4.0)));
}

TEST_CASE("no-grad and frozen parameters") {
  Tensor w = Tensor::parameter(rnd(2, 2, 1));
  Tensor x(rnd(2, 1, 2), true);
  {
    NoGradGuard guard;
    CHECK_FALSE(matmul(w, x).requires_grad());
  }
  {
    FrozenParametersGuard guard;
    sum(matmul(w, x)).backward();
    CHECK_FALSE(w.has_grad());
    CHECK(x.has_grad());
  }
  sum(matmul(w, x)).backward();
  CHECK(w.has_grad());
}

TEST_CASE("AdamW minimizes a quadratic and its state round-trips") {
  Tensor w = Tensor::parameter(Matrix::Constant(3, 2, 5.0));
  AdamWOptions opt;
  opt.weight_decay = 0.0;
  AdamW adam({{"w", w}}, opt);
  for (int i = 0; i < 500; ++i) {
    adam.zero_grad();
    mse_loss(w, Matrix::Ones(3, 2)).backward();
    adam.step(0.05);
  }
  CHECK((w.value().array() - 1.0).abs().maxCoeff() < 1e-2);

  const auto dir = std::filesystem::temp_directory_path();
  adam.save(dir / "mola_test_opt.bin");
  save_parameters(dir / "mola_test_w.bin", adam.parameters());
  Tensor w2 = Tensor::parameter(Matrix::Zero(3, 2));
  AdamW adam2({{"w", w2}}, opt);
  load_parameters(dir / "mola_test_w.bin", adam2.parameters());
  adam2.load(dir / "mola_test_opt.bin");
  CHECK(adam2.steps() == 500);
  for (auto* a : {&adam, &adam2}) {
    a->zero_grad();
    mse_loss(a->parameters()[0].second, Matrix::Zero(3, 2)).backward();
    a->step(0.05);
  }
  CHECK((w.value() - w2.value()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(parameters_hash({{"w", w}}) == parameters_hash({{"w", w2}}));

  Tensor wrong = Tensor::parameter(Matrix::Zero(2, 2));
  CHECK_THROWS_AS(load_parameters(dir / "mola_test_w.bin", {{"w", wrong}}), Error);
}

TEST_CASE("weights blob is bit exact") {
  std::map<std::string, Matrix> m{{"a", rnd(3, 7, 5)}, {"b", Matrix::Constant(1, 1, 1e-300)}};
  const auto back = decode_matrices(encode_matrices(m));
  CHECK(back.at("a") == m.at("a"));
  CHECK(back.at("b")(0, 0) == 1e-300);
  CHECK_THROWS_AS(decode_matrices("garbage!"), Error);
}

TEST_CASE("affine_rows gradient") {
  const Vector s = rnd(3, 1, 7).col(0), t = rnd(3, 1, 8).col(0);
  CHECK(gradcheck([&](auto& in) { return affine_rows(in[0], s, t); }, {rnd(3, 4, 1)}) < 1e-6);
}
