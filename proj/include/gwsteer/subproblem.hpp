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
#include <string>
#include <vector>

#include "gwsteer/conic.hpp"
#include "gwsteer/errors.hpp"
#include "gwsteer/gaussian.hpp"
#include "gwsteer/sdp_solver.hpp"
#include "gwsteer/symmetric_matrix.hpp"
#include "gwsteer/system.hpp"

namespace gwsteer {

/// Desired terminal shape. Only the spectrum matters for the GW cost, so the
/// target may live in a different dimension than the state.
class TargetShape {
 public:
  explicit TargetShape(SymmetricMatrix sigma)
      : sigma_(std::move(sigma)), spectrum_(psd_spectrum(sigma_, "target covariance")) {
    if (sigma_.dim() < 1) throw InvalidInputError("target covariance must be non-empty");
  }

  const SymmetricMatrix& covariance() const noexcept { return sigma_; }
  int dim() const noexcept { return sigma_.dim(); }
  /// Descending, clipped at zero.
  const Eigen::VectorXd& spectrum() const noexcept { return spectrum_; }
  double trace() const { return sigma_.trace(); }
  /// ||D_r||_F^2, the constant separating the DC objective from GGW^2.
  double spectrum_norm_squared() const { return spectrum_.squaredNorm(); }

 private:
  SymmetricMatrix sigma_;
  Eigen::VectorXd spectrum_;
};

/// Where each part of a TransformedPlan lives in an assembled program.
/// Sigma_0 is data, so sigma holds the handles of Sigma_1..Sigma_N.
struct PlanLayout {
  std::vector<ConicProgram::Var> sigma;
  std::vector<ConicProgram::Var> M;
  std::vector<ConicProgram::Var> P;
  ConicProgram::Var s = -1;  // s >= (tr Sigma_N - tr Sigma_r)^2
  ConicProgram::Var u = -1;  // u >= ||Sigma_N||_F^2
  ConicProgram::Var y = -1;  // cross-term block of the Wasserstein problem
};

enum class ProblemKind { kGromovWasserstein, kWasserstein };

struct AssembledProblem {
  ProblemKind kind = ProblemKind::kGromovWasserstein;
  ConicProgram program;
  PlanLayout layout;
  SymmetricMatrix sigma0;
  double target_trace = 0.0;
  /// Added to the solver objective when reporting terminal costs.
  double objective_offset = 0.0;
};

struct SubproblemSolution {
  TransformedPlan plan;
  double objective_value = std::numeric_limits<double>::quiet_NaN();
  SolverStatus status = SolverStatus::kNumericalFailure;
  double s = std::numeric_limits<double>::quiet_NaN();
  double u = std::numeric_limits<double>::quiet_NaN();
  ConicSolution raw;
};

namespace detail {

inline void check_lambda(double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda))
    throw InvalidInputError("lambda must be a positive finite number");
}

// Sigma_{k+1} = A S A^T + A P^T B^T + B P A^T + B M B^T + W as equalities and
// [[M_k, P_k], [P_k^T, Sigma_k]] PSD per step. Returns the energy term.
inline AffineExpr add_covariance_dynamics(ConicProgram& prog, const SystemParams& params,
                                          PlanLayout& layout) {
  params.validate();
  const int n = params.horizon();
  const int nx = params.state_dim();
  const int nu = params.input_dim();
  for (int k = 1; k <= n; ++k)
    layout.sigma.push_back(prog.add_symmetric("Sigma_" + std::to_string(k), nx));
  for (int k = 0; k < n; ++k) {
    layout.M.push_back(prog.add_symmetric("M_" + std::to_string(k), nu));
    layout.P.push_back(prog.add_matrix("P_" + std::to_string(k), nu, nx));
  }

  AffineExpr energy;
  AffineMatrix sigma = AffineMatrix::constant(params.sigma0.matrix());
  for (int k = 0; k < n; ++k) {
    const Eigen::MatrixXd& a = params.A[k];
    const Eigen::MatrixXd& b = params.B[k];
    const AffineMatrix m = prog.expr(layout.M[k]);
    const AffineMatrix p = prog.expr(layout.P[k]);
    prog.add_psd(AffineMatrix::block(m, p, p.transpose(), sigma));
    const AffineMatrix ap_b = a * p.transpose() * b.transpose();
    const AffineMatrix next = a * sigma * a.transpose() + ap_b + ap_b.transpose() +
                              b * m * b.transpose() + params.W[k].matrix();
    const AffineMatrix sigma_next = prog.expr(layout.sigma[k]);
    prog.add_symmetric_equality(sigma_next, next);
    energy += frobenius_inner(params.R[k].matrix(), m);
    sigma = sigma_next;
  }
  return energy;
}

inline AffineMatrix scalar_matrix(const AffineExpr& e) {
  AffineMatrix m(1, 1);
  m(0, 0) = e;
  return m;
}

}  // namespace detail

/// Convex majorant of the GW steering objective around the linearization G:
///   lambda sum tr(R_k M_k) + 4 s + 8 u - 16 <G, Sigma_N>
/// with s, u epigraph variables for the trace mismatch and ||Sigma_N||_F^2.
inline AssembledProblem build_gw_subproblem(const SystemParams& params,
                                            const TargetShape& target, double lambda,
                                            const SymmetricMatrix& g) {
  detail::check_lambda(lambda);
  if (g.dim() != params.state_dim())
    throw InvalidInputError("linearization matrix must be n_x x n_x");
  require_psd(g, "linearization matrix");

  AssembledProblem out;
  out.kind = ProblemKind::kGromovWasserstein;
  out.sigma0 = params.sigma0;
  out.target_trace = target.trace();
  ConicProgram& prog = out.program;
  const AffineExpr energy = detail::add_covariance_dynamics(prog, params, out.layout);
  out.layout.s = prog.add_scalar("s");
  out.layout.u = prog.add_scalar("u");

  const AffineMatrix sigma_n = prog.expr(out.layout.sigma.back());
  const AffineExpr mismatch = sigma_n.trace() - target.trace();
  AffineMatrix epi_s(2, 2);
  epi_s(0, 0) = prog.scalar(out.layout.s);
  epi_s(0, 1) = epi_s(1, 0) = mismatch;
  epi_s(1, 1) = AffineExpr(1.0);
  prog.add_psd(epi_s);

  const AffineMatrix v = svec(sigma_n);
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(v.rows(), v.rows());
  prog.add_psd(AffineMatrix::block(detail::scalar_matrix(prog.scalar(out.layout.u)),
                                   v.transpose(), v, AffineMatrix::constant(eye)));

  prog.set_objective(lambda * energy + 4.0 * prog.scalar(out.layout.s) +
                     8.0 * prog.scalar(out.layout.u) -
                     16.0 * frobenius_inner(g.matrix(), sigma_n));
  return out;
}

/// lambda sum tr(R_k M_k) + W^2(N(0, Sigma_N), N(0, target)), with the Bures
/// cross term written as max tr Y over [[Sigma_N, Y], [Y^T, target]] PSD. The
/// constant tr(target) is carried in objective_offset.
inline AssembledProblem build_wasserstein_problem(const SystemParams& params,
                                                  const SymmetricMatrix& target,
                                                  double lambda) {
  detail::check_lambda(lambda);
  if (target.dim() != params.state_dim())
    throw InvalidInputError("Wasserstein target must be n_x x n_x");
  if (!target.all_finite() || !(target.min_eigenvalue() > target.psd_tolerance()))
    throw InvalidInputError("Wasserstein target must be positive definite");

  AssembledProblem out;
  out.kind = ProblemKind::kWasserstein;
  out.sigma0 = params.sigma0;
  out.target_trace = target.trace();
  out.objective_offset = target.trace();
  ConicProgram& prog = out.program;
  const AffineExpr energy = detail::add_covariance_dynamics(prog, params, out.layout);
  const int nx = params.state_dim();
  out.layout.y = prog.add_matrix("Y", nx, nx);

  const AffineMatrix sigma_n = prog.expr(out.layout.sigma.back());
  const AffineMatrix y = prog.expr(out.layout.y);
  prog.add_psd(AffineMatrix::block(sigma_n, y, y.transpose(),
                                   AffineMatrix::constant(target.matrix())));
  prog.set_objective(lambda * energy + sigma_n.trace() - 2.0 * y.trace());
  return out;
}

/// Reads the plan out of a solution vector.
inline TransformedPlan extract_plan(const AssembledProblem& problem, const Eigen::VectorXd& x) {
  const PlanLayout& l = problem.layout;
  TransformedPlan plan;
  plan.sigma.push_back(problem.sigma0);
  for (auto v : l.sigma) plan.sigma.emplace_back(problem.program.expr(v).evaluate(x));
  for (auto v : l.M) plan.M.emplace_back(problem.program.expr(v).evaluate(x));
  for (auto v : l.P) plan.P.push_back(problem.program.expr(v).evaluate(x));
  return plan;
}

/// Solution vector for a given plan with tight epigraphs (s, u) and Y = 0.
/// Feasible whenever the plan is.
inline Eigen::VectorXd assign_plan(const AssembledProblem& problem, const TransformedPlan& plan) {
  const ConicProgram& prog = problem.program;
  const PlanLayout& l = problem.layout;
  if (plan.horizon() != static_cast<int>(l.M.size()) ||
      plan.sigma.size() != l.sigma.size() + 1 || plan.P.size() != l.P.size())
    throw InvalidInputError("plan does not match the program horizon");
  Eigen::VectorXd x = Eigen::VectorXd::Zero(prog.num_scalars());
  auto put = [&](ConicProgram::Var v, const Eigen::MatrixXd& value) {
    const VariableBlock& b = prog.block(v);
    if (value.rows() != b.rows || value.cols() != b.cols)
      throw InvalidInputError("plan entry " + b.name + " has the wrong shape");
    for (int i = 0; i < b.rows; ++i)
      for (int j = 0; j < b.cols; ++j) x(b.index(i, j)) = value(i, j);
  };
  for (std::size_t k = 0; k < l.sigma.size(); ++k) put(l.sigma[k], plan.sigma[k + 1].matrix());
  for (std::size_t k = 0; k < l.M.size(); ++k) {
    put(l.M[k], plan.M[k].matrix());
    put(l.P[k], plan.P[k]);
  }
  const SymmetricMatrix& terminal = plan.terminal();
  if (l.s >= 0) {
    const double c = terminal.trace() - problem.target_trace;
    x(prog.block(l.s).offset) = c * c;
  }
  if (l.u >= 0) x(prog.block(l.u).offset) = terminal.frobenius_norm() * terminal.frobenius_norm();
  return x;
}

/// Runs the backend and unpacks the plan and epigraph values.
inline SubproblemSolution solve_conic(const AssembledProblem& problem,
                                      const ConicBackend& backend) {
  SubproblemSolution out;
  out.raw = backend.solve(problem.program);
  out.status = out.raw.status;
  out.objective_value = out.raw.objective;
  if (out.raw.x.size() != problem.program.num_scalars()) return out;
  if (!is_usable(out.status) && out.status != SolverStatus::kNumericalFailure) return out;
  out.plan = extract_plan(problem, out.raw.x);
  if (problem.layout.s >= 0) out.s = out.raw.x(problem.program.block(problem.layout.s).offset);
  if (problem.layout.u >= 0) out.u = out.raw.x(problem.program.block(problem.layout.u).offset);
  return out;
}

/// Largest relative slack of the GW epigraphs, |s - c^2| / (1 + c^2) and
/// |u - ||Sigma_N||^2| / (1 + ||Sigma_N||^2). Zero when both are tight.
inline double epigraph_slack(const AssembledProblem& problem, const SubproblemSolution& sol) {
  if (problem.layout.s < 0 || sol.plan.sigma.empty()) return 0.0;
  const SymmetricMatrix& terminal = sol.plan.terminal();
  const double c = terminal.trace() - problem.target_trace;
  const double f = terminal.frobenius_norm() * terminal.frobenius_norm();
  return std::max(std::abs(sol.s - c * c) / (1.0 + c * c), std::abs(sol.u - f) / (1.0 + f));
}

}  // namespace gwsteer
