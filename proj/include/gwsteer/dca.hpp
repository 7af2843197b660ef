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
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gwsteer/errors.hpp"
#include "gwsteer/gaussian.hpp"
#include "gwsteer/sdp_solver.hpp"
#include "gwsteer/subproblem.hpp"
#include "gwsteer/system.hpp"

namespace gwsteer {

enum class InitStrategy { kUncontrolledSpectrum, kIdentity, kGiven };

/// Progress report handed to DCAConfig::on_iteration after every subproblem.
struct DCAIterate {
  int iteration = 0;  // 1-based
  double objective = 0.0;
  double energy = 0.0;
  double ggw_squared = 0.0;
  double subproblem_objective = 0.0;
  SolverStatus status = SolverStatus::kNumericalFailure;
  int solver_iterations = 0;
};

struct DCAConfig {
  int max_iters = 50;
  double tol_abs = 1e-7;
  double tol_rel = 1e-6;
  InitStrategy init = InitStrategy::kUncontrolledSpectrum;
  /// Eigenvector matrix for InitStrategy::kGiven (n_x x n_x, orthogonal).
  Eigen::MatrixXd given_vectors;
  SolverSettings solver;
  std::function<void(const DCAIterate&)> on_iteration;

  void validate(int state_dim) const {
    if (max_iters < 1) throw InvalidInputError("max_iters must be at least 1");
    if (!(tol_abs > 0.0) || !(tol_rel > 0.0))
      throw InvalidInputError("DCA tolerances must be positive");
    if (init == InitStrategy::kGiven) {
      if (given_vectors.rows() != state_dim || given_vectors.cols() != state_dim)
        throw InvalidInputError("initial eigenvectors must be n_x x n_x");
      const Eigen::MatrixXd gram = given_vectors.transpose() * given_vectors;
      if (!given_vectors.allFinite() ||
          (gram - Eigen::MatrixXd::Identity(state_dim, state_dim)).norm() > 1e-8)
        throw InvalidInputError("initial eigenvectors must be orthonormal");
    }
  }
};

struct ObjectiveBreakdown {
  double objective = 0.0;    // J = lambda * energy + ggw_squared - 8 ||D_r||^2
  double energy = 0.0;       // sum_k tr(R_k M_k)
  double ggw_squared = 0.0;  // full GGW^2 of the terminal covariance
};

struct DCAResult {
  TransformedPlan plan;
  Policy policy;
  std::vector<double> objective_history;  // J after each subproblem
  double energy = 0.0;
  double ggw_squared = 0.0;
  int iterations = 0;
  bool converged = false;
  std::optional<double> theta_gw;
  std::vector<std::string> warnings;
};

/// Exact DC objective of a plan, with the concave part evaluated from the
/// terminal spectrum rather than its linearization.
inline ObjectiveBreakdown evaluate_objective(const TransformedPlan& plan,
                                             const SystemParams& params,
                                             const TargetShape& target, double lambda) {
  if (plan.sigma.size() != static_cast<std::size_t>(params.horizon()) + 1)
    throw InvalidInputError("plan must hold Sigma_0..Sigma_N");
  ObjectiveBreakdown out;
  out.energy = control_energy(params, plan.M);
  out.ggw_squared = ggw_squared(plan.terminal(), target.covariance());
  out.objective = lambda * out.energy + out.ggw_squared - 8.0 * target.spectrum_norm_squared();
  return out;
}

/// Orientation of a planar terminal covariance, or nothing when the state is
/// not planar or the shape is isotropic.
inline std::optional<double> terminal_angle(const SymmetricMatrix& terminal) {
  if (terminal.dim() != 2) return std::nullopt;
  try {
    return principal_angle(terminal);
  } catch (const DegenerateShapeError&) {
    return std::nullopt;
  }
}

/// Difference-of-convex iteration for the GW steering problem: linearize the
/// concave part -16 tr(D_N D_r) at the current terminal eigenvectors, solve
/// the convex subproblem, repeat until J stalls.
inline DCAResult solve_gw_steering(const SystemParams& params, const TargetShape& target,
                                   double lambda, const DCAConfig& config = {}) {
  params.validate();
  config.validate(params.state_dim());
  const int nx = params.state_dim();
  const InteriorPointBackend backend(config.solver);

  Eigen::MatrixXd vectors;
  switch (config.init) {
    case InitStrategy::kUncontrolledSpectrum:
      vectors = sorted_eigendecomposition(
                    propagate_policy(params, Policy::zero(params)).back())
                    .vectors;
      break;
    case InitStrategy::kIdentity:
      vectors = Eigen::MatrixXd::Identity(nx, nx);
      break;
    case InitStrategy::kGiven:
      vectors = config.given_vectors;
      break;
  }

  DCAResult result;
  for (int iter = 1; iter <= config.max_iters; ++iter) {
    const SymmetricMatrix g = linearization_matrix(vectors, target.spectrum());
    const AssembledProblem problem = build_gw_subproblem(params, target, lambda, g);
    const SubproblemSolution sol = solve_conic(problem, backend);
    if (!is_usable(sol.status)) {
      throw AbortedRunError("subproblem " + std::to_string(iter) + " failed (" +
                                to_string(sol.status) + "): " + sol.raw.message,
                            result.objective_history);
    }
    if (sol.status == SolverStatus::kNearOptimal) {
      result.warnings.push_back("subproblem " + std::to_string(iter) +
                                " solved to near-optimal accuracy only");
    }
    const ObjectiveBreakdown j = evaluate_objective(sol.plan, params, target, lambda);
    if (!result.objective_history.empty()) {
      const double prev = result.objective_history.back();
      if (j.objective > prev + 1e-6 * (1.0 + std::abs(prev))) {
        result.warnings.push_back("objective increased at iteration " + std::to_string(iter));
      }
    }
    result.objective_history.push_back(j.objective);
    result.plan = sol.plan;
    result.energy = j.energy;
    result.ggw_squared = j.ggw_squared;
    result.iterations = iter;
    if (config.on_iteration) {
      config.on_iteration({iter, j.objective, j.energy, j.ggw_squared, sol.objective_value,
                           sol.status, sol.raw.iterations});
    }
    vectors = sorted_eigendecomposition(sol.plan.terminal()).vectors;
    if (result.objective_history.size() >= 2) {
      const double prev = result.objective_history[result.objective_history.size() - 2];
      if (std::abs(j.objective - prev) <= config.tol_abs + config.tol_rel * std::abs(prev)) {
        result.converged = true;
        break;
      }
    }
  }

  result.policy = recover_policy(result.plan);
  result.theta_gw = terminal_angle(result.plan.terminal());
  return result;
}

}  // namespace gwsteer
