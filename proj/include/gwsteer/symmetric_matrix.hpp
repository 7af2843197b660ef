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
#include <limits>
#include <string>

#include "gwsteer/errors.hpp"

namespace gwsteer {

/// Real symmetric matrix. Construction symmetrizes the input as (S + S^T) / 2,
/// so every instance is exactly symmetric. Covariances, noise and weight
/// matrices, and the subgradient all travel as this type.
class SymmetricMatrix {
 public:
  SymmetricMatrix() = default;

  explicit SymmetricMatrix(const Eigen::MatrixXd& m) {
    if (m.rows() != m.cols()) {
      throw InvalidInputError("symmetric matrix must be square, got " +
                              std::to_string(m.rows()) + "x" +
                              std::to_string(m.cols()));
    }
    m_ = 0.5 * (m + m.transpose());
  }

  static SymmetricMatrix zero(int n) {
    return SymmetricMatrix(Eigen::MatrixXd::Zero(n, n));
  }
  static SymmetricMatrix identity(int n) {
    return SymmetricMatrix(Eigen::MatrixXd::Identity(n, n));
  }
  static SymmetricMatrix diagonal(const Eigen::VectorXd& d) {
    return SymmetricMatrix(Eigen::MatrixXd(d.asDiagonal()));
  }

  int dim() const noexcept { return static_cast<int>(m_.rows()); }
  const Eigen::MatrixXd& matrix() const noexcept { return m_; }
  double operator()(int i, int j) const { return m_(i, j); }

  double trace() const { return m_.trace(); }
  double frobenius_norm() const { return m_.norm(); }
  bool all_finite() const { return m_.allFinite(); }

  /// Default PSD tolerance, 1e-9 * ||S||_F.
  double psd_tolerance() const { return 1e-9 * frobenius_norm(); }

  double min_eigenvalue() const {
    if (dim() == 0) return 0.0;
    return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(
               m_, Eigen::EigenvaluesOnly)
        .eigenvalues()(0);
  }
  bool is_psd() const { return min_eigenvalue() >= -psd_tolerance(); }
  bool is_pd() const { return min_eigenvalue() > psd_tolerance(); }

  SymmetricMatrix operator+(const SymmetricMatrix& o) const {
    return SymmetricMatrix(m_ + o.m_);
  }
  SymmetricMatrix operator-(const SymmetricMatrix& o) const {
    return SymmetricMatrix(m_ - o.m_);
  }
  friend SymmetricMatrix operator*(double a, const SymmetricMatrix& s) {
    return SymmetricMatrix(a * s.m_);
  }

 private:
  Eigen::MatrixXd m_;
};

/// Frobenius inner product <A, B>_F.
inline double frobenius_inner(const SymmetricMatrix& a,
                              const SymmetricMatrix& b) {
  return a.matrix().cwiseProduct(b.matrix()).sum();
}

/// Eigenvalues sorted descending with eigenvector i in column i.
struct Spectrum {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
};

namespace detail {

// Re-expresses the basis of a repeated eigenvalue as the Gram-Schmidt
// orthonormalization of the eigenspace projections of e_0, e_1, ... so that
// the result does not depend on what the eigensolver happened to return.
inline void canonicalize_cluster(Eigen::MatrixXd& vectors, int first,
                                 int count) {
  const int n = static_cast<int>(vectors.rows());
  const Eigen::MatrixXd basis = vectors.middleCols(first, count);
  const Eigen::MatrixXd projector = basis * basis.transpose();
  Eigen::MatrixXd chosen(n, count);
  int found = 0;
  for (int j = 0; j < n && found < count; ++j) {
    Eigen::VectorXd v = projector.col(j);
    for (int pass = 0; pass < 2; ++pass) {
      for (int c = 0; c < found; ++c) v -= chosen.col(c).dot(v) * chosen.col(c);
    }
    const double norm = v.norm();
    if (norm > 1e-6) chosen.col(found++) = v / norm;
  }
  // found < count cannot happen for an orthonormal basis, kept as a guard.
  if (found == count) vectors.middleCols(first, count) = chosen;
}

inline void fix_sign(Eigen::Ref<Eigen::VectorXd> v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v(i)) > 1e-12) {
      if (v(i) < 0.0) v = -v;
      return;
    }
  }
}

}  // namespace detail

/// Eigendecomposition with eigenvalues in descending order.
///
/// Ordering is deterministic: within a group of equal eigenvalues the basis is
/// built from the standard basis vectors in column order, and every eigenvector
/// has its first nonzero component positive. For the identity this returns
/// V = I.
inline Spectrum sorted_eigendecomposition(const SymmetricMatrix& s) {
  if (!s.all_finite()) {
    throw InvalidInputError("eigendecomposition of a non-finite matrix");
  }
  const int n = s.dim();
  Spectrum out;
  if (n == 0) return out;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(s.matrix());
  if (solver.info() != Eigen::Success) {
    throw InvalidInputError("symmetric eigensolver did not converge");
  }
  out.values = solver.eigenvalues().reverse();
  out.vectors = solver.eigenvectors().rowwise().reverse();

  const double tie_tol =
      1e-12 * std::max(s.frobenius_norm(), std::numeric_limits<double>::min());
  for (int i = 0; i < n;) {
    int j = i + 1;
    while (j < n && out.values(i) - out.values(j) <= tie_tol) ++j;
    if (j - i > 1) {
      const double mean = out.values.segment(i, j - i).mean();
      out.values.segment(i, j - i).setConstant(mean);
      detail::canonicalize_cluster(out.vectors, i, j - i);
    }
    i = j;
  }
  for (int i = 0; i < n; ++i) detail::fix_sign(out.vectors.col(i));
  return out;
}

/// Throws InvalidInputError unless s is PSD within s.psd_tolerance().
inline void require_psd(const SymmetricMatrix& s, const std::string& what) {
  if (!s.all_finite()) throw InvalidInputError(what + " has non-finite entries");
  const double lmin = s.min_eigenvalue();
  if (lmin < -s.psd_tolerance()) {
    throw InvalidInputError(what + " is not positive semidefinite (min eigenvalue " +
                            std::to_string(lmin) + ")");
  }
}

/// Descending eigenvalues of a PSD matrix with values in [-tol_psd, 0)
/// clipped to zero.
inline Eigen::VectorXd psd_spectrum(const SymmetricMatrix& s,
                                    const std::string& what) {
  require_psd(s, what);
  Eigen::VectorXd d = sorted_eigendecomposition(s).values;
  return d.cwiseMax(0.0);
}

/// Spectral square root with negative eigenvalues clipped at zero.
inline SymmetricMatrix psd_sqrt(const SymmetricMatrix& s) {
  const Spectrum sp = sorted_eigendecomposition(s);
  const Eigen::VectorXd root = sp.values.cwiseMax(0.0).cwiseSqrt();
  return SymmetricMatrix(sp.vectors * root.asDiagonal() *
                         sp.vectors.transpose());
}

/// Projects onto the PSD cone by zeroing negative eigenvalues. Eigenvalues
/// below -tol are reported as an error instead.
inline SymmetricMatrix clip_to_psd(const SymmetricMatrix& s, double tol,
                                   const std::string& what) {
  if (s.dim() == 0) return s;
  const Spectrum sp = sorted_eigendecomposition(s);
  if (sp.values(s.dim() - 1) < -tol) {
    throw InvalidInputError(what + " has eigenvalue " +
                            std::to_string(sp.values(s.dim() - 1)) +
                            " below -" + std::to_string(tol));
  }
  if (sp.values(s.dim() - 1) >= 0.0) return s;
  const Eigen::VectorXd d = sp.values.cwiseMax(0.0);
  return SymmetricMatrix(sp.vectors * d.asDiagonal() * sp.vectors.transpose());
}

/// Norm-preserving vectorization: upper triangle in column-major order with
/// off-diagonal entries scaled by sqrt(2), so ||svec(S)||_2 = ||S||_F. This is
/// the only vectorization of symmetric matrices used in the library.
inline Eigen::VectorXd svec(const SymmetricMatrix& s) {
  const int n = s.dim();
  Eigen::VectorXd v(n * (n + 1) / 2);
  int k = 0;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i <= j; ++i) {
      v(k++) = (i == j ? 1.0 : std::sqrt(2.0)) * s(i, j);
    }
  }
  return v;
}

}  // namespace gwsteer
