/*
 * Copyright 2026 The gwsteer Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "gwsteer/errors.hpp"
#include "gwsteer/symmetric_matrix.hpp"

// Minimal conic modeling layer: scalar decision variables grouped into named
// blocks, affine scalar and matrix expressions over them, and a program made
// of a linear objective, affine equalities, and affine PSD constraints.

namespace gwsteer {

/// c + sum_j a_j x_j with terms kept sorted by variable index.
class AffineExpr {
 public:
  AffineExpr() = default;
  explicit AffineExpr(double constant) : constant_(constant) {}

  static AffineExpr variable(int index, double coeff = 1.0) {
    AffineExpr e;
    if (coeff != 0.0) e.terms_.emplace_back(index, coeff);
    return e;
  }

  double constant() const noexcept { return constant_; }
  const std::vector<std::pair<int, double>>& terms() const noexcept { return terms_; }
  bool is_constant() const noexcept { return terms_.empty(); }

  double evaluate(const Eigen::VectorXd& x) const {
    double v = constant_;
    for (const auto& [j, a] : terms_) v += a * x(j);
    return v;
  }

  AffineExpr& operator+=(const AffineExpr& o) {
    constant_ += o.constant_;
    std::vector<std::pair<int, double>> merged;
    merged.reserve(terms_.size() + o.terms_.size());
    auto a = terms_.begin();
    auto b = o.terms_.begin();
    while (a != terms_.end() || b != o.terms_.end()) {
      if (b == o.terms_.end() || (a != terms_.end() && a->first < b->first)) {
        merged.push_back(*a++);
      } else if (a == terms_.end() || b->first < a->first) {
        merged.push_back(*b++);
      } else {
        const double c = a->second + b->second;
        if (c != 0.0) merged.emplace_back(a->first, c);
        ++a;
        ++b;
      }
    }
    terms_ = std::move(merged);
    return *this;
  }
  AffineExpr& operator*=(double s) {
    constant_ *= s;
    if (s == 0.0) {
      terms_.clear();
    } else {
      for (auto& t : terms_) t.second *= s;
    }
    return *this;
  }
  AffineExpr& operator-=(const AffineExpr& o) { return *this += -1.0 * o; }

  friend AffineExpr operator+(AffineExpr a, const AffineExpr& b) { return a += b; }
  friend AffineExpr operator-(AffineExpr a, const AffineExpr& b) { return a -= b; }
  friend AffineExpr operator*(double s, AffineExpr a) { return a *= s; }
  friend AffineExpr operator+(AffineExpr a, double c) { return a += AffineExpr(c); }
  friend AffineExpr operator-(AffineExpr a, double c) { return a += AffineExpr(-c); }

 private:
  double constant_ = 0.0;
  std::vector<std::pair<int, double>> terms_;
};

/// Dense grid of affine expressions.
class AffineMatrix {
 public:
  AffineMatrix() = default;
  AffineMatrix(int rows, int cols) : rows_(rows), cols_(cols), e_(rows * cols) {}

  static AffineMatrix constant(const Eigen::MatrixXd& m) {
    AffineMatrix out(static_cast<int>(m.rows()), static_cast<int>(m.cols()));
    for (int i = 0; i < out.rows_; ++i)
      for (int j = 0; j < out.cols_; ++j) out(i, j) = AffineExpr(m(i, j));
    return out;
  }

  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }
  AffineExpr& operator()(int i, int j) { return e_[i * cols_ + j]; }
  const AffineExpr& operator()(int i, int j) const { return e_[i * cols_ + j]; }

  AffineMatrix transpose() const {
    AffineMatrix t(cols_, rows_);
    for (int i = 0; i < rows_; ++i)
      for (int j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  AffineExpr trace() const {
    AffineExpr t;
    for (int i = 0; i < std::min(rows_, cols_); ++i) t += (*this)(i, i);
    return t;
  }

  Eigen::MatrixXd evaluate(const Eigen::VectorXd& x) const {
    Eigen::MatrixXd m(rows_, cols_);
    for (int i = 0; i < rows_; ++i)
      for (int j = 0; j < cols_; ++j) m(i, j) = (*this)(i, j).evaluate(x);
    return m;
  }

  AffineMatrix& operator+=(const AffineMatrix& o) {
    check_same(o);
    for (std::size_t i = 0; i < e_.size(); ++i) e_[i] += o.e_[i];
    return *this;
  }
  AffineMatrix& operator-=(const AffineMatrix& o) {
    check_same(o);
    for (std::size_t i = 0; i < e_.size(); ++i) e_[i] -= o.e_[i];
    return *this;
  }
  friend AffineMatrix operator+(AffineMatrix a, const AffineMatrix& b) { return a += b; }
  friend AffineMatrix operator-(AffineMatrix a, const AffineMatrix& b) { return a -= b; }
  friend AffineMatrix operator+(AffineMatrix a, const Eigen::MatrixXd& b) {
    return a += constant(b);
  }

  friend AffineMatrix operator*(const Eigen::MatrixXd& m, const AffineMatrix& a) {
    if (m.cols() != a.rows_) throw InvalidInputError("affine product: shape mismatch");
    AffineMatrix out(static_cast<int>(m.rows()), a.cols_);
    for (int i = 0; i < out.rows_; ++i)
      for (int k = 0; k < a.rows_; ++k) {
        if (m(i, k) == 0.0) continue;
        for (int j = 0; j < a.cols_; ++j) out(i, j) += m(i, k) * a(k, j);
      }
    return out;
  }
  friend AffineMatrix operator*(const AffineMatrix& a, const Eigen::MatrixXd& m) {
    return (m.transpose() * a.transpose()).transpose();
  }

  /// [[a, b], [c, d]] assembled from compatible blocks.
  static AffineMatrix block(const AffineMatrix& a, const AffineMatrix& b,
                            const AffineMatrix& c, const AffineMatrix& d) {
    if (a.rows_ != b.rows_ || c.rows_ != d.rows_ || a.cols_ != c.cols_ ||
        b.cols_ != d.cols_)
      throw InvalidInputError("affine block: incompatible block shapes");
    AffineMatrix out(a.rows_ + c.rows_, a.cols_ + b.cols_);
    auto put = [&out](const AffineMatrix& src, int r0, int c0) {
      for (int i = 0; i < src.rows_; ++i)
        for (int j = 0; j < src.cols_; ++j) out(r0 + i, c0 + j) = src(i, j);
    };
    put(a, 0, 0);
    put(b, 0, a.cols_);
    put(c, a.rows_, 0);
    put(d, a.rows_, a.cols_);
    return out;
  }

 private:
  void check_same(const AffineMatrix& o) const {
    if (rows_ != o.rows_ || cols_ != o.cols_)
      throw InvalidInputError("affine sum: shape mismatch");
  }

  int rows_ = 0;
  int cols_ = 0;
  std::vector<AffineExpr> e_;
};

/// <G, X>_F for a constant matrix G.
inline AffineExpr frobenius_inner(const Eigen::MatrixXd& g, const AffineMatrix& x) {
  if (g.rows() != x.rows() || g.cols() != x.cols())
    throw InvalidInputError("frobenius inner product: shape mismatch");
  AffineExpr out;
  for (int i = 0; i < x.rows(); ++i)
    for (int j = 0; j < x.cols(); ++j)
      if (g(i, j) != 0.0) out += g(i, j) * x(i, j);
  return out;
}

/// svec of a symmetric affine matrix as a column (see svec()).
inline AffineMatrix svec(const AffineMatrix& x) {
  const int n = x.rows();
  AffineMatrix v(n * (n + 1) / 2, 1);
  int k = 0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i <= j; ++i)
      v(k++, 0) = (i == j ? 1.0 : std::sqrt(2.0)) * x(i, j);
  return v;
}

enum class VariableKind { kSymmetric, kMatrix };

/// A named block of scalar decision variables. Symmetric blocks store the
/// upper triangle column by column; rectangular blocks are row-major.
struct VariableBlock {
  std::string name;
  VariableKind kind = VariableKind::kMatrix;
  int rows = 0;
  int cols = 0;
  int offset = 0;

  int size() const {
    return kind == VariableKind::kSymmetric ? rows * (rows + 1) / 2 : rows * cols;
  }
  int index(int i, int j) const {
    if (kind == VariableKind::kSymmetric) {
      if (i > j) std::swap(i, j);
      return offset + j * (j + 1) / 2 + i;
    }
    return offset + i * cols + j;
  }
};

/// minimize objective
///   s.t. equalities[i] == 0, psd_constraints[j] PSD.
class ConicProgram {
 public:
  /// Handle to a declared block.
  using Var = int;

  Var add_symmetric(std::string name, int n) {
    return add_block(std::move(name), VariableKind::kSymmetric, n, n);
  }
  Var add_matrix(std::string name, int rows, int cols) {
    return add_block(std::move(name), VariableKind::kMatrix, rows, cols);
  }
  Var add_scalar(std::string name) {
    return add_block(std::move(name), VariableKind::kMatrix, 1, 1);
  }

  const VariableBlock& block(Var v) const { return blocks_.at(v); }
  const std::vector<VariableBlock>& blocks() const noexcept { return blocks_; }
  int num_scalars() const noexcept { return num_scalars_; }

  /// Affine view of a declared block.
  AffineMatrix expr(Var v) const {
    const VariableBlock& b = block(v);
    AffineMatrix m(b.rows, b.cols);
    for (int i = 0; i < b.rows; ++i)
      for (int j = 0; j < b.cols; ++j) m(i, j) = AffineExpr::variable(b.index(i, j));
    return m;
  }
  AffineExpr scalar(Var v) const { return expr(v)(0, 0); }

  void set_objective(AffineExpr objective) {
    check_expr(objective);
    objective_ = std::move(objective);
  }

  void add_equality(AffineExpr e) {
    check_expr(e);
    equalities_.push_back(std::move(e));
  }

  /// lhs == rhs for symmetric matrices: one scalar equation per entry of the
  /// upper triangle of (D + D^T) / 2 with D = lhs - rhs.
  void add_symmetric_equality(const AffineMatrix& lhs, const AffineMatrix& rhs) {
    if (lhs.rows() != lhs.cols() || lhs.rows() != rhs.rows() || lhs.cols() != rhs.cols())
      throw InvalidInputError("symmetric equality: shape mismatch");
    const AffineMatrix d = lhs - rhs;
    for (int j = 0; j < d.rows(); ++j)
      for (int i = 0; i <= j; ++i) add_equality(0.5 * (d(i, j) + d(j, i)));
  }

  /// Requires the square expression m to be PSD. Only the upper triangle is
  /// read; callers build m symmetric.
  void add_psd(const AffineMatrix& m) {
    if (m.rows() != m.cols() || m.rows() == 0)
      throw InvalidInputError("PSD constraint needs a non-empty square matrix");
    for (int i = 0; i < m.rows(); ++i)
      for (int j = i; j < m.cols(); ++j) check_expr(m(i, j));
    psd_.push_back(m);
  }

  const AffineExpr& objective() const noexcept { return objective_; }
  const std::vector<AffineExpr>& equalities() const noexcept { return equalities_; }
  const std::vector<AffineMatrix>& psd_constraints() const noexcept { return psd_; }

  /// Symmetric value of PSD constraint j at x, built from the upper triangle.
  Eigen::MatrixXd psd_value(std::size_t j, const Eigen::VectorXd& x) const {
    const AffineMatrix& m = psd_.at(j);
    Eigen::MatrixXd v(m.rows(), m.cols());
    for (int c = 0; c < m.cols(); ++c)
      for (int r = 0; r <= c; ++r) v(r, c) = v(c, r) = m(r, c).evaluate(x);
    return v;
  }

  /// Largest equality residual and most negative PSD eigenvalue at x, each
  /// relative to (1 + magnitude of the constant terms involved).
  struct Violation {
    double equality = 0.0;
    double psd = 0.0;
  };
  Violation violation(const Eigen::VectorXd& x) const {
    Violation v;
    for (const auto& e : equalities_) v.equality = std::max(v.equality, std::abs(e.evaluate(x)));
    for (std::size_t j = 0; j < psd_.size(); ++j) {
      const Eigen::MatrixXd m = psd_value(j, x);
      const double lmin =
          Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m, Eigen::EigenvaluesOnly)
              .eigenvalues()(0);
      v.psd = std::max(v.psd, -lmin / (1.0 + m.norm()));
    }
    return v;
  }

  /// Sparse text dump, one item per line:
  ///   var NAME sym N OFFSET | var NAME mat ROWS COLS OFFSET
  ///   objective CONST [INDEX COEF]...
  ///   eq CONST [INDEX COEF]...
  ///   psd DIM [VAR ROW COL VALUE]...   (VAR -1 is the constant term; upper
  ///                                      triangle only, ROW <= COL)
  void dump(std::ostream& os) const {
    os << "# gwsteer conic program v1\n";
    os << std::setprecision(17);
    for (const auto& b : blocks_) {
      if (b.kind == VariableKind::kSymmetric) {
        os << "var " << b.name << " sym " << b.rows << ' ' << b.offset << '\n';
      } else {
        os << "var " << b.name << " mat " << b.rows << ' ' << b.cols << ' ' << b.offset
           << '\n';
      }
    }
    auto write_expr = [&os](const AffineExpr& e) {
      os << e.constant();
      for (const auto& [j, a] : e.terms()) os << ' ' << j << ' ' << a;
      os << '\n';
    };
    os << "objective ";
    write_expr(objective_);
    for (const auto& e : equalities_) {
      os << "eq ";
      write_expr(e);
    }
    for (const auto& m : psd_) {
      os << "psd " << m.rows();
      for (int c = 0; c < m.cols(); ++c)
        for (int r = 0; r <= c; ++r) {
          const AffineExpr& e = m(r, c);
          if (e.constant() != 0.0) os << " -1 " << r << ' ' << c << ' ' << e.constant();
          for (const auto& [j, a] : e.terms()) os << ' ' << j << ' ' << r << ' ' << c << ' ' << a;
        }
      os << '\n';
    }
  }

 private:
  Var add_block(std::string name, VariableKind kind, int rows, int cols) {
    if (rows < 1 || cols < 1) throw InvalidInputError("variable block must be non-empty");
    VariableBlock b{std::move(name), kind, rows, cols, num_scalars_};
    num_scalars_ += b.size();
    blocks_.push_back(std::move(b));
    return static_cast<Var>(blocks_.size() - 1);
  }

  void check_expr(const AffineExpr& e) const {
    if (!std::isfinite(e.constant())) throw InvalidInputError("non-finite constant in program");
    for (const auto& [j, a] : e.terms()) {
      if (j < 0 || j >= num_scalars_)
        throw InvalidInputError("expression references an undeclared variable");
      if (!std::isfinite(a)) throw InvalidInputError("non-finite coefficient in program");
    }
  }

  std::vector<VariableBlock> blocks_;
  int num_scalars_ = 0;
  AffineExpr objective_;
  std::vector<AffineExpr> equalities_;
  std::vector<AffineMatrix> psd_;
};

}  // namespace gwsteer
