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
#include <vector>

#include "gwsteer/conic.hpp"

namespace gwsteer {

enum class SolverStatus { kOptimal, kNearOptimal, kInfeasible, kNumericalFailure };

inline std::string to_string(SolverStatus s) {
  switch (s) {
    case SolverStatus::kOptimal: return "optimal";
    case SolverStatus::kNearOptimal: return "near_optimal";
    case SolverStatus::kInfeasible: return "infeasible";
    case SolverStatus::kNumericalFailure: return "numerical_failure";
  }
  return "unknown";
}

inline bool is_usable(SolverStatus s) {
  return s == SolverStatus::kOptimal || s == SolverStatus::kNearOptimal;
}

struct SolverSettings {
  double feasibility_tol = 1e-8;
  double gap_tol = 1e-8;
  int max_iterations = 100;
};

/// Raw result of a conic solve: values for every scalar variable of the
/// program plus convergence diagnostics.
struct ConicSolution {
  SolverStatus status = SolverStatus::kNumericalFailure;
  Eigen::VectorXd x;
  double objective = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
  double primal_infeasibility = std::numeric_limits<double>::infinity();
  double dual_infeasibility = std::numeric_limits<double>::infinity();
  double relative_gap = std::numeric_limits<double>::infinity();
  std::string message;
};

/// Anything able to solve a ConicProgram. Implementations must be
/// deterministic for fixed settings and must not report an optimal status
/// they have not certified. One instance serves one solve at a time.
class ConicBackend {
 public:
  virtual ~ConicBackend() = default;
  virtual ConicSolution solve(const ConicProgram& program) const = 0;
  virtual const SolverSettings& settings() const = 0;
};

namespace detail {

// min c^T t  s.t.  S(t) = F0 + sum_i t_i F_i  PSD, with F_i^b stored as column
// i of a (n_b^2 x m) matrix per block b (column-major vec).
struct LmiProblem {
  Eigen::VectorXd c;
  std::vector<Eigen::MatrixXd> f0;
  std::vector<Eigen::MatrixXd> coeffs;
  int num_vars() const { return static_cast<int>(c.size()); }
};

inline Eigen::MatrixXd unvec(const Eigen::VectorXd& v, Eigen::Index n) {
  return Eigen::Map<const Eigen::MatrixXd>(v.data(), n, n);
}

inline Eigen::VectorXd vec(const Eigen::MatrixXd& m) {
  return Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
}

inline Eigen::MatrixXd sym(const Eigen::MatrixXd& m) { return 0.5 * (m + m.transpose()); }

// Largest alpha with X + alpha dX PSD (infinity if every alpha works), from
// the eigenvalues of L^{-1} dX L^{-T}. Requires X PD.
inline double max_step(const Eigen::MatrixXd& x, const Eigen::MatrixXd& dx) {
  const Eigen::LLT<Eigen::MatrixXd> llt(x);
  if (llt.info() != Eigen::Success) return 0.0;
  Eigen::MatrixXd t = llt.matrixL().solve(dx);
  t = llt.matrixL().solve(t.transpose()).transpose();
  const double lmin =
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(sym(t), Eigen::EigenvaluesOnly)
          .eigenvalues()(0);
  return lmin >= 0.0 ? std::numeric_limits<double>::infinity() : -1.0 / lmin;
}

struct LmiResult {
  SolverStatus status = SolverStatus::kNumericalFailure;
  Eigen::VectorXd t;
  int iterations = 0;
  double pinf = std::numeric_limits<double>::infinity();
  double dinf = std::numeric_limits<double>::infinity();
  double gap = std::numeric_limits<double>::infinity();
  std::string message;
};

// Primal-dual path following with the HKM direction and a Mehrotra
// predictor-corrector. S is the slack of the LMI and X its multiplier; the
// multiplier problem is max -<F0, X> s.t. <F_i, X> = c_i, X PSD.
inline LmiResult solve_lmi(const LmiProblem& p, const SolverSettings& settings) {
  const int m = p.num_vars();
  const std::size_t nblocks = p.f0.size();
  std::vector<Eigen::Index> dims(nblocks);
  Eigen::Index total_dim = 0;
  for (std::size_t b = 0; b < nblocks; ++b) {
    dims[b] = p.f0[b].rows();
    total_dim += dims[b];
  }

  const double norm_c = p.c.norm();
  double norm_f0 = 0.0;
  for (const auto& f : p.f0) norm_f0 += f.squaredNorm();
  norm_f0 = std::sqrt(norm_f0);

  // Starting point scaled as in SDPT3.
  std::vector<Eigen::MatrixXd> x(nblocks), s(nblocks);
  for (std::size_t b = 0; b < nblocks; ++b) {
    const double n = static_cast<double>(dims[b]);
    double ratio = 0.0;
    double max_col = 0.0;
    for (int i = 0; i < m; ++i) {
      const double a = p.coeffs[b].col(i).norm();
      ratio = std::max(ratio, (1.0 + std::abs(p.c(i))) / (1.0 + a));
      max_col = std::max(max_col, a);
    }
    const double xi = std::max({10.0, std::sqrt(n), n * ratio});
    const double eta =
        std::max({10.0, std::sqrt(n), (1.0 + std::max(max_col, p.f0[b].norm())) / std::sqrt(n)});
    x[b] = xi * Eigen::MatrixXd::Identity(dims[b], dims[b]);
    s[b] = eta * Eigen::MatrixXd::Identity(dims[b], dims[b]);
  }
  Eigen::VectorXd t = Eigen::VectorXd::Zero(m);

  LmiResult result;
  std::vector<Eigen::MatrixXd> s_inv(nblocks), rd(nblocks), dx(nblocks), ds(nblocks),
      dx_aff(nblocks), ds_aff(nblocks);

  auto slack_at = [&](std::size_t b, const Eigen::VectorXd& tv) {
    return Eigen::MatrixXd(p.f0[b] + unvec(p.coeffs[b] * tv, dims[b]));
  };

  for (int iter = 0; iter <= settings.max_iterations; ++iter) {
    // Residuals and convergence measures.
    Eigen::VectorXd rp = p.c;
    double xs = 0.0;
    double f0x = 0.0;
    double rd_norm = 0.0;
    for (std::size_t b = 0; b < nblocks; ++b) {
      rp.noalias() -= p.coeffs[b].transpose() * vec(x[b]);
      rd[b] = slack_at(b, t) - s[b];
      rd_norm += rd[b].squaredNorm();
      xs += x[b].cwiseProduct(s[b]).sum();
      f0x += x[b].cwiseProduct(p.f0[b]).sum();
    }
    const double obj = p.c.dot(t);
    result.pinf = rp.norm() / (1.0 + norm_c);
    result.dinf = std::sqrt(rd_norm) / (1.0 + norm_f0);
    result.gap = std::max(xs, std::abs(obj + f0x)) / (1.0 + std::abs(obj) + std::abs(f0x));
    result.t = t;
    result.iterations = iter;

    if (result.pinf <= settings.feasibility_tol && result.dinf <= settings.feasibility_tol &&
        result.gap <= settings.gap_tol) {
      result.status = SolverStatus::kOptimal;
      return result;
    }
    // Farkas-type certificate: X PSD with <F_i, X> ~ 0 and <F0, X> < 0
    // proves that no t makes S(t) PSD.
    if (f0x < 0.0) {
      Eigen::VectorXd ax = Eigen::VectorXd::Zero(m);
      for (std::size_t b = 0; b < nblocks; ++b) ax.noalias() += p.coeffs[b].transpose() * vec(x[b]);
      if (ax.norm() / -f0x < 1e-8 && -f0x > 1e8 * (1.0 + norm_c)) {
        result.status = SolverStatus::kInfeasible;
        result.message = "LMI infeasibility certificate found";
        return result;
      }
    }
    if (iter == settings.max_iterations) break;

    const double mu = xs / static_cast<double>(total_dim);

    // Schur complement M_ij = tr(F_i X F_j S^{-1}).
    Eigen::MatrixXd schur = Eigen::MatrixXd::Zero(m, m);
    std::vector<Eigen::MatrixXd> xs_maps(nblocks);
    bool factored = true;
    for (std::size_t b = 0; b < nblocks && factored; ++b) {
      const Eigen::LLT<Eigen::MatrixXd> llt(s[b]);
      if (llt.info() != Eigen::Success) {
        factored = false;
        break;
      }
      s_inv[b] = llt.solve(Eigen::MatrixXd::Identity(dims[b], dims[b]));
      s_inv[b] = sym(s_inv[b]);
      Eigen::MatrixXd g(dims[b] * dims[b], m);
      for (int i = 0; i < m; ++i) {
        g.col(i) = vec(x[b] * unvec(p.coeffs[b].col(i), dims[b]) * s_inv[b]);
      }
      schur.noalias() += p.coeffs[b].transpose() * g;
    }
    if (!factored) {
      result.message = "slack lost positive definiteness";
      break;
    }
    schur = sym(schur);
    Eigen::LLT<Eigen::MatrixXd> schur_llt(schur);
    if (schur_llt.info() != Eigen::Success) {
      const double shift = 1e-14 * std::max(1.0, schur.diagonal().cwiseAbs().maxCoeff());
      schur.diagonal().array() += shift;
      schur_llt.compute(schur);
      if (schur_llt.info() != Eigen::Success) {
        result.message = "Schur complement is not positive definite";
        break;
      }
    }

    // Direction for complementarity target T (dX = T - sym(X dS S^{-1})).
    auto direction = [&](const std::vector<Eigen::MatrixXd>& target, Eigen::VectorXd& dt,
                         std::vector<Eigen::MatrixXd>& dxv, std::vector<Eigen::MatrixXd>& dsv) {
      Eigen::VectorXd rhs = -rp;
      for (std::size_t b = 0; b < nblocks; ++b) {
        rhs.noalias() += p.coeffs[b].transpose() * vec(target[b] - x[b] * rd[b] * s_inv[b]);
      }
      dt = schur_llt.solve(rhs);
      for (std::size_t b = 0; b < nblocks; ++b) {
        dsv[b] = sym(rd[b] + unvec(p.coeffs[b] * dt, dims[b]));
        dxv[b] = sym(target[b] - sym(x[b] * dsv[b] * s_inv[b]));
      }
    };
    auto step_lengths = [&](const std::vector<Eigen::MatrixXd>& dxv,
                            const std::vector<Eigen::MatrixXd>& dsv) {
      double ap = std::numeric_limits<double>::infinity();
      double ad = std::numeric_limits<double>::infinity();
      for (std::size_t b = 0; b < nblocks; ++b) {
        ap = std::min(ap, max_step(x[b], dxv[b]));
        ad = std::min(ad, max_step(s[b], dsv[b]));
      }
      return std::pair{ap, ad};
    };

    // Predictor.
    std::vector<Eigen::MatrixXd> target(nblocks);
    for (std::size_t b = 0; b < nblocks; ++b) target[b] = -x[b];
    Eigen::VectorXd dt_aff;
    direction(target, dt_aff, dx_aff, ds_aff);
    auto [ap_aff, ad_aff] = step_lengths(dx_aff, ds_aff);
    ap_aff = std::min(1.0, ap_aff);
    ad_aff = std::min(1.0, ad_aff);
    double xs_aff = 0.0;
    for (std::size_t b = 0; b < nblocks; ++b) {
      xs_aff += (x[b] + ap_aff * dx_aff[b]).cwiseProduct(s[b] + ad_aff * ds_aff[b]).sum();
    }
    const double expon = std::max(1.0, 3.0 * std::pow(std::min(ap_aff, ad_aff), 2));
    const double sigma = std::clamp(std::pow(std::max(xs_aff, 0.0) / xs, expon), 0.0, 1.0);

    // Corrector.
    for (std::size_t b = 0; b < nblocks; ++b) {
      target[b] = sigma * mu * s_inv[b] - x[b] - sym(dx_aff[b] * ds_aff[b] * s_inv[b]);
    }
    Eigen::VectorXd dt;
    direction(target, dt, dx, ds);
    auto [ap, ad] = step_lengths(dx, ds);
    const double gamma = 0.9 + 0.09 * std::min(ap_aff, ad_aff);
    ap = std::min(1.0, gamma * ap);
    ad = std::min(1.0, gamma * ad);
    if (!(ap > 0.0) || !(ad > 0.0) || !dt.allFinite()) {
      result.message = "zero step length";
      break;
    }
    for (std::size_t b = 0; b < nblocks; ++b) {
      x[b] = sym(x[b] + ap * dx[b]);
      s[b] = sym(s[b] + ad * ds[b]);
    }
    t += ad * dt;
  }

  const double loose = 10.0;
  if (result.pinf <= loose * settings.feasibility_tol &&
      result.dinf <= loose * settings.feasibility_tol && result.gap <= loose * settings.gap_tol) {
    result.status = SolverStatus::kNearOptimal;
  } else {
    result.status = SolverStatus::kNumericalFailure;
    if (result.message.empty()) result.message = "iteration limit reached";
  }
  return result;
}

}  // namespace detail

/// Primal-dual interior-point solver for programs with a linear objective,
/// affine equalities, and PSD constraints.
///
/// Equalities are eliminated first (x = x0 + N t with N an orthonormal basis
/// of their null space); the remaining LMI problem in t is solved with an
/// infeasible-start HKM predictor-corrector method.
class InteriorPointBackend : public ConicBackend {
 public:
  explicit InteriorPointBackend(SolverSettings settings = {}) : settings_(settings) {}

  const SolverSettings& settings() const override { return settings_; }

  ConicSolution solve(const ConicProgram& program) const override {
    const int n = program.num_scalars();
    const auto& eqs = program.equalities();
    const int p = static_cast<int>(eqs.size());
    ConicSolution out;

    // Affine parametrization of the equality-feasible set.
    Eigen::VectorXd x0 = Eigen::VectorXd::Zero(n);
    Eigen::MatrixXd basis = Eigen::MatrixXd::Identity(n, n);
    if (p > 0) {
      Eigen::MatrixXd e = Eigen::MatrixXd::Zero(p, n);
      Eigen::VectorXd rhs(p);
      for (int i = 0; i < p; ++i) {
        for (const auto& [j, a] : eqs[i].terms()) e(i, j) += a;
        rhs(i) = -eqs[i].constant();
      }
      Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(e);
      cod.setThreshold(1e-12);
      x0 = cod.solve(rhs);
      if ((e * x0 - rhs).norm() > 1e-9 * (1.0 + rhs.norm())) {
        out.status = SolverStatus::kInfeasible;
        out.message = "inconsistent equality constraints";
        return out;
      }
      Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(e.transpose());
      qr.setThreshold(1e-12);
      const Eigen::Index rank = qr.rank();
      const Eigen::MatrixXd q = qr.householderQ();
      basis = q.rightCols(n - rank);
    }

    // Objective and blocks in the reduced coordinates.
    Eigen::VectorXd c_full = Eigen::VectorXd::Zero(n);
    for (const auto& [j, a] : program.objective().terms()) c_full(j) += a;

    detail::LmiProblem lmi;
    const auto& psd = program.psd_constraints();
    Eigen::MatrixXd stacked(0, basis.cols());
    for (std::size_t b = 0; b < psd.size(); ++b) {
      const int nb = psd[b].rows();
      lmi.f0.push_back(program.psd_value(b, x0));
      Eigen::MatrixXd raw = Eigen::MatrixXd::Zero(nb * nb, n);
      for (int c = 0; c < nb; ++c)
        for (int r = 0; r <= c; ++r)
          for (const auto& [j, a] : psd[b](r, c).terms()) {
            raw(r + c * nb, j) += a;
            if (r != c) raw(c + r * nb, j) += a;
          }
      lmi.coeffs.push_back(raw * basis);
    }

    // Directions that leave every block unchanged must not move the
    // objective either; drop them.
    const Eigen::Index m_full = basis.cols();
    Eigen::MatrixXd reduce = Eigen::MatrixXd::Identity(m_full, m_full);
    if (m_full > 0) {
      Eigen::Index rows = 0;
      for (const auto& a : lmi.coeffs) rows += a.rows();
      Eigen::MatrixXd all(rows, m_full);
      Eigen::Index r0 = 0;
      for (const auto& a : lmi.coeffs) {
        all.middleRows(r0, a.rows()) = a;
        r0 += a.rows();
      }
      Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(all.transpose());
      qr.setThreshold(1e-12);
      const Eigen::Index rank = qr.rank();
      if (rank < m_full) {
        const Eigen::MatrixXd q = qr.householderQ();
        const Eigen::VectorXd c_reduced = basis.transpose() * c_full;
        const Eigen::VectorXd free_part = q.rightCols(m_full - rank).transpose() * c_reduced;
        if (free_part.norm() > 1e-9 * (1.0 + c_reduced.norm())) {
          out.status = SolverStatus::kNumericalFailure;
          out.message = "objective is unbounded along a direction free of PSD constraints";
          return out;
        }
        reduce = q.leftCols(rank);
        for (auto& a : lmi.coeffs) a = a * reduce;
      }
    }
    const Eigen::MatrixXd full_basis = basis * reduce;
    lmi.c = full_basis.transpose() * c_full;

    Eigen::VectorXd t;
    if (lmi.num_vars() == 0 || lmi.f0.empty()) {
      t = Eigen::VectorXd::Zero(lmi.num_vars());
      out.iterations = 0;
      out.primal_infeasibility = out.dual_infeasibility = out.relative_gap = 0.0;
      out.x = x0;
      const auto v = program.violation(out.x);
      if (lmi.num_vars() > 0 && lmi.c.norm() > 0.0) {
        out.status = SolverStatus::kNumericalFailure;
        out.message = "unconstrained linear objective is unbounded";
      } else if (v.psd > settings_.feasibility_tol) {
        out.status = SolverStatus::kInfeasible;
        out.message = "fixed point violates a PSD constraint";
      } else {
        out.status = SolverStatus::kOptimal;
      }
      out.objective = program.objective().evaluate(out.x);
      return out;
    }

    const detail::LmiResult r = detail::solve_lmi(lmi, settings_);
    out.status = r.status;
    out.iterations = r.iterations;
    out.primal_infeasibility = r.dinf;  // feasibility of the original program
    out.dual_infeasibility = r.pinf;
    out.relative_gap = r.gap;
    out.message = r.message;
    out.x = x0 + full_basis * r.t;
    out.objective = program.objective().evaluate(out.x);
    return out;
  }

 private:
  SolverSettings settings_;
};

}  // namespace gwsteer
