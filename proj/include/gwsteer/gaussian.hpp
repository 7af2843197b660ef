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

#include <cmath>
#include <numbers>
#include <string>

#include "gwsteer/errors.hpp"
#include "gwsteer/symmetric_matrix.hpp"

// Gaussian geometry: Gromov-Wasserstein and Bures-Wasserstein quantities for
// centered Gaussians, expressed through covariance spectra.

namespace gwsteer {

/// Gaussian law N(mean, cov). Every problem handled here is zero-mean; the
/// mean is carried so that callers can reject anything else explicitly.
struct GaussianState {
  Eigen::VectorXd mean;
  SymmetricMatrix cov;

  static GaussianState centered(SymmetricMatrix cov) {
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(cov.dim());
    return {std::move(mean), std::move(cov)};
  }

  void validate() const {
    if (mean.size() != cov.dim()) {
      throw InvalidInputError("Gaussian mean/covariance dimension mismatch");
    }
    require_psd(cov, "Gaussian covariance");
  }
};

namespace detail {

inline Eigen::VectorXd zero_padded(const Eigen::VectorXd& v, Eigen::Index n) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  out.head(v.size()) = v;
  return out;
}

}  // namespace detail

/// Squared Gaussian Gromov-Wasserstein distance
///   4 (tr Sa - tr Sb)^2 + 8 ||Da - Db||_F^2
/// with Da, Db the descending spectra, the shorter one zero-padded when the
/// dimensions differ.
inline double ggw_squared(const SymmetricMatrix& sa, const SymmetricMatrix& sb) {
  const Eigen::VectorXd da = psd_spectrum(sa, "first covariance");
  const Eigen::VectorXd db = psd_spectrum(sb, "second covariance");
  const Eigen::Index n = std::max(da.size(), db.size());
  const double trace_gap = da.sum() - db.sum();
  const double spectral_gap =
      (detail::zero_padded(da, n) - detail::zero_padded(db, n)).squaredNorm();
  return 4.0 * trace_gap * trace_gap + 8.0 * spectral_gap;
}

/// g(S_N) = tr(D_N D_r): sum of products of the descending spectra, zero
/// padded. Convex in S_N; this is the term the DC algorithm linearizes.
inline double gw_alignment_gain(const SymmetricMatrix& sigma_n,
                                const SymmetricMatrix& sigma_r) {
  const Eigen::VectorXd dn = psd_spectrum(sigma_n, "terminal covariance");
  const Eigen::VectorXd dr = psd_spectrum(sigma_r, "target covariance");
  const Eigen::Index n = std::min(dn.size(), dr.size());
  return dn.head(n).dot(dr.head(n));
}

/// V diag(d) V^T where d is padded with zeros (or truncated) to V's size.
inline SymmetricMatrix linearization_matrix(const Eigen::MatrixXd& vectors,
                                            const Eigen::VectorXd& target_values) {
  const Eigen::Index n = vectors.cols();
  Eigen::VectorXd d = Eigen::VectorXd::Zero(n);
  const Eigen::Index m = std::min(n, target_values.size());
  d.head(m) = target_values.head(m);
  return SymmetricMatrix(vectors * d.asDiagonal() * vectors.transpose());
}

/// Subgradient V_N D_r V_N^T of g at S_N, with D_r padded or truncated to
/// dim(S_N).
inline SymmetricMatrix gw_subgradient(const SymmetricMatrix& sigma_n,
                                      const SymmetricMatrix& sigma_r) {
  require_psd(sigma_n, "terminal covariance");
  const Eigen::VectorXd dr = psd_spectrum(sigma_r, "target covariance");
  return linearization_matrix(sorted_eigendecomposition(sigma_n).vectors, dr);
}

struct OrthogonalTraceMax {
  Eigen::MatrixXd rotation;  // maximizer U* = W V^T
  double value = 0.0;        // tr(Lambda Xi)
};

/// max over orthogonal U of tr(U A U^T B), attained at U* = W V^T where
/// A = V Lambda V^T and B = W Xi W^T with both spectra descending.
inline OrthogonalTraceMax trace_max_orthogonal(const SymmetricMatrix& a,
                                               const SymmetricMatrix& b) {
  if (a.dim() != b.dim()) {
    throw InvalidInputError("trace_max_orthogonal: dimension mismatch");
  }
  const Spectrum sa = sorted_eigendecomposition(a);
  const Spectrum sb = sorted_eigendecomposition(b);
  return {sb.vectors * sa.vectors.transpose(), sa.values.dot(sb.values)};
}

/// tr((Sb^{1/2} Sa Sb^{1/2})^{1/2}), the cross term of the Bures metric.
inline double bures_cross_term(const SymmetricMatrix& sa,
                               const SymmetricMatrix& sb) {
  if (sa.dim() != sb.dim()) {
    throw InvalidInputError("Bures cross term: dimension mismatch");
  }
  // tr((Sb^{1/2} Sa Sb^{1/2})^{1/2}) is the nuclear norm of Sa^{1/2} Sb^{1/2}.
  // Taking singular values directly avoids square roots of roundoff-level
  // eigenvalues when either argument is singular.
  const Eigen::MatrixXd cross = psd_sqrt(sa).matrix() * psd_sqrt(sb).matrix();
  return Eigen::JacobiSVD<Eigen::MatrixXd>(cross).singularValues().sum();
}

/// Squared 2-Wasserstein distance between N(0, Sa) and N(0, Sb).
inline double wasserstein2_squared(const SymmetricMatrix& sa,
                                   const SymmetricMatrix& sb) {
  if (sa.dim() != sb.dim()) {
    throw InvalidInputError("wasserstein2_squared: dimension mismatch");
  }
  require_psd(sa, "first covariance");
  require_psd(sb, "second covariance");
  const double w2 = sa.trace() + sb.trace() - 2.0 * bures_cross_term(sa, sb);
  return std::max(w2, 0.0);
}

/// R(theta) = [[cos, -sin], [sin, cos]].
inline Eigen::Matrix2d rotation_matrix(double theta) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  Eigen::Matrix2d r;
  r << c, -s, s, c;
  return r;
}

/// R(theta)^T S R(theta). Planar only.
inline SymmetricMatrix rotate_covariance(const SymmetricMatrix& sigma,
                                         double theta) {
  if (sigma.dim() != 2) {
    throw UnsupportedDimensionError("rotate_covariance is defined for 2x2 only, got " +
                                    std::to_string(sigma.dim()));
  }
  const Eigen::Matrix2d r = rotation_matrix(theta);
  return SymmetricMatrix(r.transpose() * sigma.matrix() * r);
}

/// Orientation theta in [0, pi) with sigma = R(theta)^T diag(l1, l2) R(theta),
/// i.e. the inverse of rotate_covariance applied to a diagonal matrix. The
/// leading eigenvector is (cos theta, -sin theta).
inline double principal_angle(const SymmetricMatrix& sigma) {
  if (sigma.dim() != 2) {
    throw UnsupportedDimensionError("principal_angle is defined for 2x2 only, got " +
                                    std::to_string(sigma.dim()));
  }
  const Spectrum sp = sorted_eigendecomposition(sigma);
  const double gap = sp.values(0) - sp.values(1);
  if (!(gap > 1e-8 * std::abs(sigma.trace()))) {
    throw DegenerateShapeError("principal angle undefined for an isotropic covariance");
  }
  const Eigen::Vector2d v = sp.vectors.col(0);
  double theta = std::atan2(-v(1), v(0));
  theta = std::fmod(theta, std::numbers::pi);
  if (theta < 0.0) theta += std::numbers::pi;
  if (theta >= std::numbers::pi) theta -= std::numbers::pi;
  return theta;
}

/// Distance between two orientations modulo pi.
inline double angle_distance_mod_pi(double a, double b) {
  double d = std::fmod(std::abs(a - b), std::numbers::pi);
  return std::min(d, std::numbers::pi - d);
}

}  // namespace gwsteer
