// Copyright 2026 The mola Authors
// SPDX-License-Identifier: Apache-2.0

#include "mola/nn/ops.hpp"

#include "mola/error.hpp"
#include "mola/motion/features.hpp"

#include <cmath>
#include <limits>

namespace mola::nn {

namespace {

bool wants(const Node& self, std::size_t i) { return self.inputs[i]->wants_grad(); }
Node& input(Node& self, std::size_t i) { return *self.inputs[i]; }

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), ErrorKind::shape_mismatch,
          std::string(op) + ": shapes " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + " and " +
              std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
}

void check_sequence(const Tensor& x, const SeqShape& shape, const char* op) {
  require(x.cols() == shape.columns(), ErrorKind::shape_mismatch,
          std::string(op) + ": column count does not match batch * length");
}

}  // namespace

Tensor constant(Matrix value) { return Tensor(std::move(value), false); }

Tensor matmul(const Tensor& a, const Tensor& b) {
  require(a.cols() == b.rows(), ErrorKind::shape_mismatch, "matmul: inner dimensions differ");
  Matrix out = a.value() * b.value();
  return Tensor::make(std::move(out), {a, b}, [](Node& self) {
    const Matrix& av = input(self, 0).value;
    const Matrix& bv = input(self, 1).value;
    if (wants(self, 0)) input(self, 0).accumulate_expr(self.grad * bv.transpose());
    if (wants(self, 1)) input(self, 1).accumulate_expr(av.transpose() * self.grad);
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "add");
  return Tensor::make(a.value() + b.value(), {a, b}, [](Node& self) {
    if (wants(self, 0)) input(self, 0).accumulate(self.grad);
    if (wants(self, 1)) input(self, 1).accumulate(self.grad);
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "sub");
  return Tensor::make(a.value() - b.value(), {a, b}, [](Node& self) {
    if (wants(self, 0)) input(self, 0).accumulate(self.grad);
    if (wants(self, 1)) input(self, 1).accumulate_expr(-self.grad);
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "mul");
  return Tensor::make(a.value().cwiseProduct(b.value()), {a, b}, [](Node& self) {
    if (wants(self, 0)) input(self, 0).accumulate_expr(self.grad.cwiseProduct(input(self, 1).value));
    if (wants(self, 1)) input(self, 1).accumulate_expr(self.grad.cwiseProduct(input(self, 0).value));
  });
}

Tensor scale(const Tensor& x, Real s) {
  return Tensor::make(x.value() * s, {x}, [s](Node& self) { input(self, 0).accumulate_expr(self.grad * s); });
}

Tensor add_scalar(const Tensor& x, Real s) {
  return Tensor::make(x.value().array() + s, {x}, [](Node& self) { input(self, 0).accumulate(self.grad); });
}

Tensor add_col(const Tensor& x, const Tensor& b) {
  require(b.cols() == 1 && b.rows() == x.rows(), ErrorKind::shape_mismatch, "add_col: bias must be rows x 1");
  return Tensor::make(x.value().colwise() + b.value().col(0), {x, b}, [](Node& self) {
    if (wants(self, 0)) input(self, 0).accumulate(self.grad);
    if (wants(self, 1)) input(self, 1).accumulate_expr(self.grad.rowwise().sum());
  });
}

Tensor add_tiled(const Tensor& x, const Tensor& p) {
  require(p.rows() == x.rows() && p.cols() > 0 && x.cols() % p.cols() == 0, ErrorKind::shape_mismatch,
          "add_tiled: incompatible shapes");
  const Eigen::Index len = p.cols();
  const Eigen::Index batch = x.cols() / len;
  Matrix out = x.value();
  for (Eigen::Index b = 0; b < batch; ++b) out.middleCols(b * len, len) += p.value();
  return Tensor::make(std::move(out), {x, p}, [len, batch](Node& self) {
    if (wants(self, 0)) input(self, 0).accumulate(self.grad);
    if (wants(self, 1)) {
      Matrix g = Matrix::Zero(self.grad.rows(), len);
      for (Eigen::Index b = 0; b < batch; ++b) g += self.grad.middleCols(b * len, len);
      input(self, 1).accumulate(g);
    }
  });
}

Tensor add_per_sequence(const Tensor& x, const Tensor& b, const SeqShape& shape) {
  check_sequence(x, shape, "add_per_sequence");
  require(b.rows() == x.rows() && b.cols() == shape.batch, ErrorKind::shape_mismatch,
          "add_per_sequence: b must be C x batch");
  Matrix out = x.value();
  for (int s = 0; s < shape.batch; ++s) out.middleCols(s * shape.length, shape.length).colwise() += b.value().col(s);
  return Tensor::make(std::move(out), {x, b}, [shape](Node& self) {
    if (wants(self, 0)) input(self, 0).accumulate(self.grad);
    if (wants(self, 1)) {
      Matrix g(self.grad.rows(), shape.batch);
      for (int s = 0; s < shape.batch; ++s) g.col(s) = self.grad.middleCols(s * shape.length, shape.length).rowwise().sum();
      input(self, 1).accumulate(g);
    }
  });
}

Tensor affine_rows(const Tensor& x, const Vector& scale, const Vector& shift) {
  require(scale.size() == x.rows() && shift.size() == x.rows(), ErrorKind::shape_mismatch,
          "affine_rows: scale/shift must match the row count");
  Matrix out = (x.value().array().colwise() * scale.array()).colwise() + shift.array();
  return Tensor::make(std::move(out), {x}, [scale](Node& self) {
    input(self, 0).accumulate_expr((self.grad.array().colwise() * scale.array()).matrix());
  });
}

Tensor leaky_relu(const Tensor& x, Real slope) {
  Matrix out = x.value().unaryExpr([slope](Real v) { return v > 0 ? v : slope * v; });
  return Tensor::make(std::move(out), {x}, [slope](Node& self) {
    const Matrix& xv = input(self, 0).value;
    input(self, 0).accumulate_expr(
        self.grad.binaryExpr(xv, [slope](Real g, Real v) { return v > 0 ? g : slope * g; }));
  });
}

Tensor relu(const Tensor& x) { return leaky_relu(x, 0.0); }

Tensor sigmoid(const Tensor& x) {
  Matrix out = x.value().unaryExpr([](Real v) { return 1.0 / (1.0 + std::exp(-v)); });
  return Tensor::make(std::move(out), {x}, [](Node& self) {
    input(self, 0).accumulate_expr(self.grad.cwiseProduct(self.value.cwiseProduct((1.0 - self.value.array()).matrix())));
  });
}

Tensor silu(const Tensor& x) {
  Matrix out = x.value().unaryExpr([](Real v) { return v / (1.0 + std::exp(-v)); });
  return Tensor::make(std::move(out), {x}, [](Node& self) {
    const Matrix& xv = input(self, 0).value;
    input(self, 0).accumulate_expr(self.grad.binaryExpr(xv, [](Real g, Real v) {
      const Real s = 1.0 / (1.0 + std::exp(-v));
      return g * s * (1.0 + v * (1.0 - s));
    }));
  });
}

Tensor exp(const Tensor& x) {
  Matrix out = x.value().array().exp().matrix();
  return Tensor::make(std::move(out), {x}, [](Node& self) { input(self, 0).accumulate_expr(self.grad.cwiseProduct(self.value)); });
}

Tensor sum(const Tensor& x) {
  Matrix out(1, 1);
  out(0, 0) = x.value().sum();
  return Tensor::make(std::move(out), {x}, [](Node& self) {
    const Node& in = input(self, 0);
    input(self, 0).accumulate_expr(Matrix::Constant(in.value.rows(), in.value.cols(), self.grad(0, 0)));
  });
}

Tensor mean(const Tensor& x) {
  const auto n = static_cast<Real>(x.value().size());
  return scale(sum(x), 1.0 / n);
}

Tensor column_dot(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "column_dot");
  Matrix out = a.value().cwiseProduct(b.value()).colwise().sum();
  return Tensor::make(std::move(out), {a, b}, [](Node& self) {
    const Eigen::RowVectorXd g = self.grad.row(0);
    if (wants(self, 0)) input(self, 0).accumulate_expr((input(self, 1).value.array().rowwise() * g.array()).matrix());
    if (wants(self, 1)) input(self, 1).accumulate_expr((input(self, 0).value.array().rowwise() * g.array()).matrix());
  });
}

Tensor transpose(const Tensor& x) {
  return Tensor::make(x.value().transpose(), {x},
                      [](Node& self) { input(self, 0).accumulate_expr(self.grad.transpose()); });
}

Tensor pairwise_sq_dist(const Tensor& a, const Tensor& b) {
  require(a.rows() == b.rows(), ErrorKind::shape_mismatch, "pairwise_sq_dist: feature dims differ");
  const Eigen::VectorXd na = a.value().colwise().squaredNorm().transpose();
  const Eigen::RowVectorXd nb = b.value().colwise().squaredNorm();
  Matrix out = -2.0 * a.value().transpose() * b.value();
  out.colwise() += na;
  out.rowwise() += nb;
  return Tensor::make(std::move(out), {a, b}, [](Node& self) {
    const Matrix& g = self.grad;
    const Matrix& av = input(self, 0).value;
    const Matrix& bv = input(self, 1).value;
    // d/da_i = 2 sum_j g_ij (a_i - b_j); d/db_j = 2 sum_i g_ij (b_j - a_i).
    if (wants(self, 0))
      input(self, 0).accumulate_expr(2.0 * (av.array().rowwise() * g.rowwise().sum().transpose().array()).matrix() -
                                     2.0 * bv * g.transpose());
    if (wants(self, 1))
      input(self, 1).accumulate_expr(2.0 * (bv.array().rowwise() * g.colwise().sum().array()).matrix() -
                                     2.0 * av * g);
  });
}

Tensor sequence_mean(const Tensor& x, const SeqShape& shape) {
  check_sequence(x, shape, "sequence_mean");
  Matrix out(x.rows(), shape.batch);
  for (int s = 0; s < shape.batch; ++s)
    out.col(s) = x.value().middleCols(s * shape.length, shape.length).rowwise().mean();
  return Tensor::make(std::move(out), {x}, [shape](Node& self) {
    Matrix g(self.grad.rows(), shape.columns());
    for (int s = 0; s < shape.batch; ++s)
      g.middleCols(s * shape.length, shape.length).colwise() = self.grad.col(s) / static_cast<Real>(shape.length);
    input(self, 0).accumulate(g);
  });
}

Tensor slice_rows(const Tensor& x, Eigen::Index start, Eigen::Index count) {
  require(start >= 0 && count >= 0 && start + count <= x.rows(), ErrorKind::shape_mismatch, "slice_rows: out of range");
  return Tensor::make(x.value().middleRows(start, count), {x}, [start, count](Node& self) {
    Node& in = input(self, 0);
    if (in.grad.size() == 0) in.grad = Matrix::Zero(in.value.rows(), in.value.cols());
    in.grad.middleRows(start, count) += self.grad;
  });
}

Tensor slice_cols(const Tensor& x, Eigen::Index start, Eigen::Index count) {
  require(start >= 0 && count >= 0 && start + count <= x.cols(), ErrorKind::shape_mismatch, "slice_cols: out of range");
  return Tensor::make(x.value().middleCols(start, count), {x}, [start, count](Node& self) {
    Node& in = input(self, 0);
    if (in.grad.size() == 0) in.grad = Matrix::Zero(in.value.rows(), in.value.cols());
    in.grad.middleCols(start, count) += self.grad;
  });
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  require(!parts.empty(), ErrorKind::shape_mismatch, "concat_rows: no inputs");
  Eigen::Index rows = 0;
  for (const auto& p : parts) {
    require(p.cols() == parts[0].cols(), ErrorKind::shape_mismatch, "concat_rows: column counts differ");
    rows += p.rows();
  }
  Matrix out(rows, parts[0].cols());
  Eigen::Index r = 0;
  for (const auto& p : parts) {
    out.middleRows(r, p.rows()) = p.value();
    r += p.rows();
  }
  return Tensor::make(std::move(out), parts, [](Node& self) {
    Eigen::Index r = 0;
    for (std::size_t i = 0; i < self.inputs.size(); ++i) {
      const Eigen::Index n = self.inputs[i]->value.rows();
      if (wants(self, i)) self.inputs[i]->accumulate(self.grad.middleRows(r, n));
      r += n;
    }
  });
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  require(!parts.empty(), ErrorKind::shape_mismatch, "concat_cols: no inputs");
  Eigen::Index cols = 0;
  for (const auto& p : parts) {
    require(p.rows() == parts[0].rows(), ErrorKind::shape_mismatch, "concat_cols: row counts differ");
    cols += p.cols();
  }
  Matrix out(parts[0].rows(), cols);
  Eigen::Index c = 0;
  for (const auto& p : parts) {
    out.middleCols(c, p.cols()) = p.value();
    c += p.cols();
  }
  return Tensor::make(std::move(out), parts, [](Node& self) {
    Eigen::Index c = 0;
    for (std::size_t i = 0; i < self.inputs.size(); ++i) {
      const Eigen::Index n = self.inputs[i]->value.cols();
      if (wants(self, i)) self.inputs[i]->accumulate(self.grad.middleCols(c, n));
      c += n;
    }
  });
}

Tensor gather_cols(const Tensor& table, const std::vector<int>& index) {
  Matrix out(table.rows(), static_cast<Eigen::Index>(index.size()));
  for (std::size_t i = 0; i < index.size(); ++i) {
    require(index[i] >= 0 && index[i] < table.cols(), ErrorKind::shape_mismatch, "gather_cols: index out of range");
    out.col(static_cast<Eigen::Index>(i)) = table.value().col(index[i]);
  }
  return Tensor::make(std::move(out), {table}, [index](Node& self) {
    Node& in = input(self, 0);
    if (in.grad.size() == 0) in.grad = Matrix::Zero(in.value.rows(), in.value.cols());
    for (std::size_t i = 0; i < index.size(); ++i) in.grad.col(index[i]) += self.grad.col(static_cast<Eigen::Index>(i));
  });
}

Tensor concat_sequences(const Tensor& a, const SeqShape& sa, const Tensor& b, const SeqShape& sb) {
  check_sequence(a, sa, "concat_sequences");
  check_sequence(b, sb, "concat_sequences");
  require(sa.batch == sb.batch && a.rows() == b.rows(), ErrorKind::shape_mismatch, "concat_sequences: batch or rows differ");
  const int la = sa.length, lb = sb.length, lo = la + lb;
  Matrix out(a.rows(), static_cast<Eigen::Index>(sa.batch) * lo);
  for (int s = 0; s < sa.batch; ++s) {
    out.middleCols(s * lo, la) = a.value().middleCols(s * la, la);
    out.middleCols(s * lo + la, lb) = b.value().middleCols(s * lb, lb);
  }
  const int batch = sa.batch;
  return Tensor::make(std::move(out), {a, b}, [batch, la, lb, lo](Node& self) {
    if (wants(self, 0)) {
      Matrix g(self.grad.rows(), static_cast<Eigen::Index>(batch) * la);
      for (int s = 0; s < batch; ++s) g.middleCols(s * la, la) = self.grad.middleCols(s * lo, la);
      input(self, 0).accumulate(g);
    }
    if (wants(self, 1)) {
      Matrix g(self.grad.rows(), static_cast<Eigen::Index>(batch) * lb);
      for (int s = 0; s < batch; ++s) g.middleCols(s * lb, lb) = self.grad.middleCols(s * lo + la, lb);
      input(self, 1).accumulate(g);
    }
  });
}

Tensor slice_sequences(const Tensor& x, const SeqShape& shape, int start, int count) {
  check_sequence(x, shape, "slice_sequences");
  require(start >= 0 && count >= 0 && start + count <= shape.length, ErrorKind::shape_mismatch,
          "slice_sequences: out of range");
  Matrix out(x.rows(), static_cast<Eigen::Index>(shape.batch) * count);
  for (int s = 0; s < shape.batch; ++s) out.middleCols(s * count, count) = x.value().middleCols(s * shape.length + start, count);
  return Tensor::make(std::move(out), {x}, [shape, start, count](Node& self) {
    Node& in = input(self, 0);
    if (in.grad.size() == 0) in.grad = Matrix::Zero(in.value.rows(), in.value.cols());
    for (int s = 0; s < shape.batch; ++s) in.grad.middleCols(s * shape.length + start, count) += self.grad.middleCols(s * count, count);
  });
}

int conv1d_output_length(int length, int kernel, int stride, int padding) {
  return (length + 2 * padding - kernel) / stride + 1;
}

Tensor conv1d(const Tensor& x, const Tensor& w, const Tensor& b, const SeqShape& shape, int kernel, int stride,
              int padding) {
  check_sequence(x, shape, "conv1d");
  const auto cin = static_cast<int>(x.rows());
  require(w.cols() == static_cast<Eigen::Index>(kernel) * cin, ErrorKind::shape_mismatch,
          "conv1d: weight must be Cout x (kernel * Cin)");
  require(b.rows() == w.rows() && b.cols() == 1, ErrorKind::shape_mismatch, "conv1d: bias must be Cout x 1");
  const int lo = conv1d_output_length(shape.length, kernel, stride, padding);
  require(lo >= 1, ErrorKind::shape_mismatch, "conv1d: sequence too short");

  // im2col, tap-major rows.
  auto col = std::make_shared<Matrix>(Matrix::Zero(static_cast<Eigen::Index>(kernel) * cin,
                                                   static_cast<Eigen::Index>(shape.batch) * lo));
  for (int s = 0; s < shape.batch; ++s)
    for (int o = 0; o < lo; ++o) {
      const Eigen::Index c = static_cast<Eigen::Index>(s) * lo + o;
      for (int k = 0; k < kernel; ++k) {
        const int t = o * stride + k - padding;
        if (t >= 0 && t < shape.length) col->block(k * cin, c, cin, 1) = x.value().col(s * shape.length + t);
      }
    }
  Matrix out = w.value() * *col;
  out.colwise() += b.value().col(0);
  return Tensor::make(std::move(out), {x, w, b}, [col, shape, kernel, stride, padding, cin, lo](Node& self) {
    if (wants(self, 1)) input(self, 1).accumulate_expr(self.grad * col->transpose());
    if (wants(self, 2)) input(self, 2).accumulate_expr(self.grad.rowwise().sum());
    if (wants(self, 0)) {
      const Matrix dcol = input(self, 1).value.transpose() * self.grad;
      Matrix dx = Matrix::Zero(cin, shape.columns());
      for (int s = 0; s < shape.batch; ++s)
        for (int o = 0; o < lo; ++o) {
          const Eigen::Index c = static_cast<Eigen::Index>(s) * lo + o;
          for (int k = 0; k < kernel; ++k) {
            const int t = o * stride + k - padding;
            if (t >= 0 && t < shape.length) dx.col(s * shape.length + t) += dcol.block(k * cin, c, cin, 1);
          }
        }
      input(self, 0).accumulate(dx);
    }
  });
}

Tensor upsample2(const Tensor& x, const SeqShape& shape) {
  check_sequence(x, shape, "upsample2");
  Matrix out(x.rows(), 2 * static_cast<Eigen::Index>(shape.columns()));
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    out.col(2 * c) = x.value().col(c);
    out.col(2 * c + 1) = x.value().col(c);
  }
  return Tensor::make(std::move(out), {x}, [](Node& self) {
    const Eigen::Index n = self.grad.cols() / 2;
    Matrix g(self.grad.rows(), n);
    for (Eigen::Index c = 0; c < n; ++c) g.col(c) = self.grad.col(2 * c) + self.grad.col(2 * c + 1);
    input(self, 0).accumulate(g);
  });
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, Real eps) {
  require(gamma.rows() == x.rows() && gamma.cols() == 1 && beta.rows() == x.rows() && beta.cols() == 1,
          ErrorKind::shape_mismatch, "layer_norm: gamma/beta must be rows x 1");
  const Eigen::Index d = x.rows();
  const Eigen::RowVectorXd mu = x.value().colwise().mean();
  Matrix centered = x.value().rowwise() - mu;
  const Eigen::RowVectorXd inv_std =
      ((centered.array().square().colwise().sum() / static_cast<Real>(d)) + eps).rsqrt().matrix();
  auto xhat = std::make_shared<Matrix>(centered.array().rowwise() * inv_std.array());
  Matrix out = (xhat->array().colwise() * gamma.value().col(0).array()).colwise() + beta.value().col(0).array();
  return Tensor::make(std::move(out), {x, gamma, beta}, [xhat, inv_std, d](Node& self) {
    if (wants(self, 1)) input(self, 1).accumulate_expr(self.grad.cwiseProduct(*xhat).rowwise().sum());
    if (wants(self, 2)) input(self, 2).accumulate_expr(self.grad.rowwise().sum());
    if (wants(self, 0)) {
      const Matrix dxhat = self.grad.array().colwise() * input(self, 1).value.col(0).array();
      const Eigen::RowVectorXd m1 = dxhat.colwise().mean();
      const Eigen::RowVectorXd m2 = dxhat.cwiseProduct(*xhat).colwise().mean();
      Matrix dx = dxhat.rowwise() - m1;
      dx -= (xhat->array().rowwise() * m2.array()).matrix();
      dx = dx.array().rowwise() * inv_std.array();
      input(self, 0).accumulate(dx);
    }
  });
}

Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v, const SeqShape& shape, int heads,
                 const std::vector<int>& key_lengths) {
  check_sequence(q, shape, "attention");
  check_same_shape(q, k, "attention");
  check_same_shape(q, v, "attention");
  require(heads > 0 && q.rows() % heads == 0, ErrorKind::shape_mismatch, "attention: heads must divide the width");
  require(key_lengths.empty() || static_cast<int>(key_lengths.size()) == shape.batch, ErrorKind::shape_mismatch,
          "attention: one key length per sequence");
  const int dh = static_cast<int>(q.rows()) / heads;
  const int len = shape.length;
  const Real inv_sqrt = 1.0 / std::sqrt(static_cast<Real>(dh));

  auto probs = std::make_shared<std::vector<Matrix>>(static_cast<std::size_t>(shape.batch * heads));
  Matrix out(q.rows(), q.cols());
  for (int s = 0; s < shape.batch; ++s) {
    const int valid = key_lengths.empty() ? len : std::clamp(key_lengths[static_cast<std::size_t>(s)], 1, len);
    for (int h = 0; h < heads; ++h) {
      const auto qh = q.value().block(h * dh, s * len, dh, len);
      const auto kh = k.value().block(h * dh, s * len, dh, valid);
      const auto vh = v.value().block(h * dh, s * len, dh, valid);
      Matrix p = (qh.transpose() * kh) * inv_sqrt;  // len x valid
      for (Eigen::Index i = 0; i < p.rows(); ++i) {
        const Real mx = p.row(i).maxCoeff();
        p.row(i) = (p.row(i).array() - mx).exp();
        p.row(i) /= p.row(i).sum();
      }
      out.block(h * dh, s * len, dh, len) = vh * p.transpose();
      (*probs)[static_cast<std::size_t>(s * heads + h)] = std::move(p);
    }
  }
  return Tensor::make(std::move(out), {q, k, v}, [probs, shape, heads, dh, inv_sqrt](Node& self) {
    const int len = shape.length;
    const Matrix& qv = input(self, 0).value;
    const Matrix& kv = input(self, 1).value;
    const Matrix& vv = input(self, 2).value;
    Matrix dq = Matrix::Zero(qv.rows(), qv.cols());
    Matrix dk = Matrix::Zero(qv.rows(), qv.cols());
    Matrix dv = Matrix::Zero(qv.rows(), qv.cols());
    for (int s = 0; s < shape.batch; ++s)
      for (int h = 0; h < heads; ++h) {
        const Matrix& p = (*probs)[static_cast<std::size_t>(s * heads + h)];
        const auto valid = p.cols();
        const auto go = self.grad.block(h * dh, s * len, dh, len);
        const auto qh = qv.block(h * dh, s * len, dh, len);
        const auto kh = kv.block(h * dh, s * len, dh, valid);
        const auto vh = vv.block(h * dh, s * len, dh, valid);
        dv.block(h * dh, s * len, dh, valid) += go * p;
        const Matrix dp = go.transpose() * vh;  // len x valid
        const Eigen::VectorXd row_dot = dp.cwiseProduct(p).rowwise().sum();
        const Matrix ds = (p.array() * (dp.colwise() - row_dot).array()).matrix() * inv_sqrt;
        dq.block(h * dh, s * len, dh, len) += kh * ds.transpose();
        dk.block(h * dh, s * len, dh, valid) += qh * ds;
      }
    if (wants(self, 0)) input(self, 0).accumulate(dq);
    if (wants(self, 1)) input(self, 1).accumulate(dk);
    if (wants(self, 2)) input(self, 2).accumulate(dv);
  });
}

Tensor mse_loss(const Tensor& pred, const Matrix& target) {
  require(pred.rows() == target.rows() && pred.cols() == target.cols(), ErrorKind::shape_mismatch, "mse_loss: shapes differ");
  auto diff = std::make_shared<Matrix>(pred.value() - target);
  const auto n = static_cast<Real>(diff->size());
  Matrix out(1, 1);
  out(0, 0) = diff->squaredNorm() / n;
  return Tensor::make(std::move(out), {pred}, [diff, n](Node& self) {
    input(self, 0).accumulate_expr(*diff * (2.0 * self.grad(0, 0) / n));
  });
}

Tensor smooth_l1_loss(const Tensor& pred, const Matrix& target, Real beta) {
  require(pred.rows() == target.rows() && pred.cols() == target.cols(), ErrorKind::shape_mismatch,
          "smooth_l1_loss: shapes differ");
  auto diff = std::make_shared<Matrix>(pred.value() - target);
  const auto n = static_cast<Real>(diff->size());
  Matrix out(1, 1);
  out(0, 0) = diff->unaryExpr([beta](Real d) {
                     const Real a = std::abs(d);
                     return a < beta ? 0.5 * d * d / beta : a - 0.5 * beta;
                   }).sum() / n;
  return Tensor::make(std::move(out), {pred}, [diff, n, beta](Node& self) {
    const Real g = self.grad(0, 0) / n;
    input(self, 0).accumulate_expr(diff->unaryExpr([beta, g](Real d) {
      if (std::abs(d) < beta) return g * d / beta;
      return d > 0 ? g : -g;
    }));
  });
}

Tensor bce_with_logits(const Tensor& logits, const Matrix& target) {
  require(logits.rows() == target.rows() && logits.cols() == target.cols(), ErrorKind::shape_mismatch,
          "bce_with_logits: shapes differ");
  const auto n = static_cast<Real>(target.size());
  Matrix out(1, 1);
  out(0, 0) = logits.value()
                  .binaryExpr(target, [](Real x, Real y) { return std::max(x, 0.0) - x * y + std::log1p(std::exp(-std::abs(x))); })
                  .sum() / n;
  return Tensor::make(std::move(out), {logits}, [target, n](Node& self) {
    const Real g = self.grad(0, 0) / n;
    input(self, 0).accumulate_expr(input(self, 0).value.binaryExpr(
        target, [g](Real x, Real y) { return g * (1.0 / (1.0 + std::exp(-x)) - y); }));
  });
}

Tensor cross_entropy_cols(const Tensor& logits, const std::vector<int>& labels) {
  const auto cols = logits.cols();
  require(static_cast<Eigen::Index>(labels.size()) == cols, ErrorKind::shape_mismatch,
          "cross_entropy_cols: one label per column");
  Matrix prob(logits.rows(), cols);
  Real total = 0.0;
  for (Eigen::Index c = 0; c < cols; ++c) {
    const int label = labels[static_cast<std::size_t>(c)];
    require(label >= 0 && label < logits.rows(), ErrorKind::invalid_input, "cross_entropy_cols: label out of range");
    const Real m = logits.value().col(c).maxCoeff();
    prob.col(c) = (logits.value().col(c).array() - m).exp();
    const Real z = prob.col(c).sum();
    prob.col(c) /= z;
    total += -(logits.value()(label, c) - m - std::log(z));
  }
  Matrix out(1, 1);
  out(0, 0) = total / static_cast<Real>(cols);
  return Tensor::make(std::move(out), {logits}, [prob, labels](Node& self) {
    Matrix g = prob;
    for (std::size_t c = 0; c < labels.size(); ++c) g(labels[c], static_cast<Eigen::Index>(c)) -= 1.0;
    input(self, 0).accumulate_expr(g * (self.grad(0, 0) / static_cast<Real>(labels.size())));
  });
}

Tensor gaussian_kl(const Tensor& mean, const Tensor& logvar, int batch) {
  check_same_shape(mean, logvar, "gaussian_kl");
  require(batch > 0, ErrorKind::invalid_input, "gaussian_kl: batch must be positive");
  const Matrix var = logvar.value().array().exp().matrix();
  Matrix out(1, 1);
  out(0, 0) = 0.5 * (mean.value().array().square() + var.array() - 1.0 - logvar.value().array()).sum() / batch;
  return Tensor::make(std::move(out), {mean, logvar}, [var, batch](Node& self) {
    const Real g = self.grad(0, 0) / batch;
    if (wants(self, 0)) input(self, 0).accumulate_expr(input(self, 0).value * g);
    if (wants(self, 1)) input(self, 1).accumulate_expr((var.array() - 1.0).matrix() * (0.5 * g));
  });
}

Tensor masked_norm_sum(const Tensor& x, const Matrix& mask) {
  require(x.rows() == 3 * mask.rows() && x.cols() == mask.cols(), ErrorKind::shape_mismatch,
          "masked_norm_sum: x must be 3J x F for a J x F mask");
  Matrix out = Matrix::Zero(1, 1);
  for (Eigen::Index f = 0; f < mask.cols(); ++f)
    for (Eigen::Index j = 0; j < mask.rows(); ++j)
      if (mask(j, f) != 0.0) out(0, 0) += mask(j, f) * x.value().block<3, 1>(3 * j, f).norm();
  return Tensor::make(std::move(out), {x}, [mask](Node& self) {
    const Matrix& xv = input(self, 0).value;
    Matrix g = Matrix::Zero(xv.rows(), xv.cols());
    for (Eigen::Index f = 0; f < mask.cols(); ++f)
      for (Eigen::Index j = 0; j < mask.rows(); ++j) {
        if (mask(j, f) == 0.0) continue;
        const Eigen::Vector3d e = xv.block<3, 1>(3 * j, f);
        const Real norm = e.norm();
        if (norm > 0.0) g.block<3, 1>(3 * j, f) = (mask(j, f) * self.grad(0, 0) / norm) * e;
      }
    input(self, 0).accumulate(g);
  });
}

Tensor recover_joints(const Tensor& features, const SeqShape& shape, int n_joints) {
  check_sequence(features, shape, "recover_joints");
  require(features.rows() >= motion::FeatureLayout::kLocalPos + 3 * n_joints, ErrorKind::shape_mismatch,
          "recover_joints: too few feature channels");
  Matrix out(3 * n_joints, features.cols());
  for (int s = 0; s < shape.batch; ++s)
    out.middleCols(s * shape.length, shape.length) =
        motion::recover_global_joints(features.value().middleCols(s * shape.length, shape.length), n_joints);
  return Tensor::make(std::move(out), {features}, [shape, n_joints](Node& self) {
    const Matrix& fv = input(self, 0).value;
    Matrix g(fv.rows(), fv.cols());
    for (int s = 0; s < shape.batch; ++s)
      g.middleCols(s * shape.length, shape.length) = motion::recover_global_joints_vjp(
          fv.middleCols(s * shape.length, shape.length), n_joints, self.grad.middleCols(s * shape.length, shape.length));
    input(self, 0).accumulate(g);
  });
}

}  // namespace mola::nn
