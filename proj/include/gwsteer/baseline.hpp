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
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "gwsteer/dca.hpp"
#include "gwsteer/errors.hpp"
#include "gwsteer/gaussian.hpp"
#include "gwsteer/hash.hpp"
#include "gwsteer/sdp_solver.hpp"
#include "gwsteer/subproblem.hpp"
#include "gwsteer/system.hpp"

namespace gwsteer {

struct WassersteinResult {
  TransformedPlan plan;
  Policy policy;
  double energy = 0.0;
  double w2 = 0.0;  // closed form at the returned terminal covariance
  double objective = 0.0;
  SolverStatus status = SolverStatus::kNumericalFailure;
  int solver_iterations = 0;
};

/// Steering with a Wasserstein terminal cost. Convex, so a single conic
/// solve; throws SolverFailureError when the backend does not certify it.
inline WassersteinResult solve_wasserstein_steering(const SystemParams& params,
                                                    const SymmetricMatrix& target,
                                                    double lambda,
                                                    const SolverSettings& settings = {}) {
  const AssembledProblem problem = build_wasserstein_problem(params, target, lambda);
  const SubproblemSolution sol = solve_conic(problem, InteriorPointBackend(settings));
  if (!is_usable(sol.status)) {
    throw SolverFailureError("Wasserstein problem failed (" + to_string(sol.status) +
                             "): " + sol.raw.message);
  }
  WassersteinResult out;
  out.plan = sol.plan;
  out.policy = recover_policy(sol.plan);
  out.energy = control_energy(params, sol.plan.M);
  out.w2 = wasserstein2_squared(sol.plan.terminal(), target);
  out.objective = sol.objective_value + problem.objective_offset;
  out.status = sol.status;
  out.solver_iterations = sol.raw.iterations;
  return out;
}

struct SweepRow {
  double parameter = 0.0;
  double energy = std::numeric_limits<double>::quiet_NaN();
  double terminal_cost = std::numeric_limits<double>::quiet_NaN();
  std::string status = "numerical_failure";
  double lambda = 0.0;  // weight actually used for this row
  double wall_time = 0.0;
  int solves = 0;
  std::string message;

  bool ok() const { return status == "optimal" || status == "near_optimal"; }
};

struct SweepTable {
  std::string parameter_name;
  std::string parameter_unit;
  std::string terminal_cost_name;
  std::string problem_hash;
  std::vector<std::pair<std::string, std::string>> config;
  std::vector<SweepRow> rows;
  std::vector<std::string> warnings;

  bool all_ok() const {
    return std::all_of(rows.begin(), rows.end(), [](const SweepRow& r) { return r.ok(); });
  }
  bool any_ok() const {
    return std::any_of(rows.begin(), rows.end(), [](const SweepRow& r) { return r.ok(); });
  }
  int total_solves() const {
    int n = 0;
    for (const auto& r : rows) n += r.solves;
    return n;
  }

  /// CSV with '#' comment lines carrying units and the problem hash.
  void write_csv(std::ostream& os) const {
    os << "# gwsteer sweep table, schema_version 1\n";
    os << "# problem_hash: " << problem_hash << '\n';
    os << "# parameter: " << parameter_name << " [" << parameter_unit << "]\n";
    os << "# energy: sum_k E[u_k^T R_k u_k] (unweighted)\n";
    os << "# terminal_cost: " << terminal_cost_name << '\n';
    os << "# wall_time: seconds\n";
    for (const auto& [k, v] : config) os << "# " << k << ": " << v << '\n';
    os << "parameter,energy,terminal_cost,status,lambda,solves,wall_time\n";
    const auto old = os.precision(17);
    for (const auto& r : rows) {
      os << r.parameter << ',' << r.energy << ',' << r.terminal_cost << ',' << r.status << ','
         << r.lambda << ',' << r.solves << ',' << r.wall_time << '\n';
    }
    os.precision(old);
  }
};

/// Worker count for sweeps: GWSTEER_THREADS if set, else the hardware count.
inline int sweep_threads() {
  if (const char* env = std::getenv("GWSTEER_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace detail {

/// Shortest text that reads back to the same double.
inline std::string number_text(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

// Runs body(i) for i in [0, n) on up to `threads` workers. Each index is
// handled by exactly one worker, so results do not depend on scheduling.
inline void parallel_for(int n, int threads, const std::function<void(int)>& body) {
  threads = std::clamp(threads, 1, std::max(1, n));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) body(i);
    });
  }
  for (auto& th : pool) th.join();
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace detail

struct ThetaSweepConfig {
  double lambda = 1e-3;
  /// Accept a row once W^2 <= reach_fraction * tr(target); otherwise halve
  /// lambda, at most max_halvings times.
  double reach_fraction = 1e-3;
  int max_halvings = 10;
  double refine_tol = 1e-3;  // golden-section bracket width [rad]
  SolverSettings solver;
  int threads = 0;  // 0: sweep_threads()
};

/// n equally spaced angles i * pi / n.
inline std::vector<double> theta_grid(int n = 64) {
  if (n < 1) throw InvalidInputError("theta grid needs at least one point");
  std::vector<double> g(n);
  for (int i = 0; i < n; ++i) g[i] = std::numbers::pi * i / n;
  return g;
}

/// W_opt at one angle, with the lambda-halving rule applied.
inline SweepRow theta_row(const SystemParams& params, const SymmetricMatrix& sigma_r,
                          double theta, const ThetaSweepConfig& config) {
  const auto t0 = std::chrono::steady_clock::now();
  SweepRow row;
  row.parameter = theta;
  const SymmetricMatrix target = rotate_covariance(sigma_r, theta);
  const double reach = config.reach_fraction * target.trace();
  double lambda = config.lambda;
  for (int attempt = 0; attempt <= config.max_halvings; ++attempt, lambda *= 0.5) {
    row.lambda = lambda;
    ++row.solves;
    try {
      const WassersteinResult r = solve_wasserstein_steering(params, target, lambda, config.solver);
      row.energy = r.energy;
      row.terminal_cost = r.w2;
      row.status = to_string(r.status);
      row.message.clear();
    } catch (const Error& e) {
      row.status = "numerical_failure";
      row.message = e.what();
      break;
    }
    if (row.terminal_cost <= reach) break;
    row.message = "terminal W^2 above reach threshold";
  }
  row.wall_time = detail::seconds_since(t0);
  return row;
}

/// W_opt(theta) for the targets rotate_covariance(sigma_r, theta).
inline SweepTable sweep_theta(const SystemParams& params, const SymmetricMatrix& sigma_r,
                              const std::vector<double>& grid,
                              const ThetaSweepConfig& config = {}) {
  if (params.state_dim() != 2 || sigma_r.dim() != 2)
    throw UnsupportedDimensionError("theta sweeps need a planar state and target");
  if (grid.empty()) throw InvalidInputError("theta grid is empty");
  if (!(config.lambda > 0.0)) throw InvalidInputError("lambda must be positive");
  params.validate();

  SweepTable table;
  table.parameter_name = "theta";
  table.parameter_unit = "rad";
  table.terminal_cost_name = "W^2(N(0, Sigma_N), N(0, Sigma_r(theta)))";
  table.problem_hash = problem_hash(params, sigma_r);
  table.config = {{"lambda", detail::number_text(config.lambda)},
                  {"reach_fraction", detail::number_text(config.reach_fraction)},
                  {"max_halvings", std::to_string(config.max_halvings)}};

  std::vector<double> sorted = grid;
  std::sort(sorted.begin(), sorted.end());
  table.rows.resize(sorted.size());
  detail::parallel_for(static_cast<int>(sorted.size()),
                       config.threads > 0 ? config.threads : sweep_threads(),
                       [&](int i) { table.rows[i] = theta_row(params, sigma_r, sorted[i], config); });
  for (const auto& r : table.rows) {
    if (!r.ok()) table.warnings.push_back("row theta=" + detail::number_text(r.parameter) + " failed: " + r.message);
    else if (!r.message.empty())
      table.warnings.push_back("row theta=" + detail::number_text(r.parameter) + ": " + r.message);
  }
  return table;
}

struct ThetaArgmin {
  double theta = std::numeric_limits<double>::quiet_NaN();
  double energy = std::numeric_limits<double>::quiet_NaN();
  int grid_index = -1;
  int refinement_solves = 0;
};

/// Grid argmin of W_opt, refined by golden-section search on the bracket
/// formed by its grid neighbours (wrapping modulo pi).
inline ThetaArgmin refine_theta_star(const SystemParams& params, const SymmetricMatrix& sigma_r,
                                     const SweepTable& table,
                                     const ThetaSweepConfig& config = {}) {
  ThetaArgmin best;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const SweepRow& r = table.rows[i];
    if (r.ok() && (best.grid_index < 0 || r.energy < best.energy)) {
      best.grid_index = static_cast<int>(i);
      best.energy = r.energy;
      best.theta = r.parameter;
    }
  }
  if (best.grid_index < 0) throw SolverFailureError("no usable rows in the theta sweep");
  if (table.rows.size() < 3) return best;

  const std::size_t n = table.rows.size();
  const std::size_t i = static_cast<std::size_t>(best.grid_index);
  const double pi = std::numbers::pi;
  double lo = table.rows[(i + n - 1) % n].parameter;
  double hi = table.rows[(i + 1) % n].parameter;
  if (lo > best.theta) lo -= pi;
  if (hi < best.theta) hi += pi;

  auto energy_at = [&](double th) {
    const double wrapped = std::fmod(std::fmod(th, pi) + pi, pi);
    const SweepRow r = theta_row(params, sigma_r, wrapped, config);
    best.refinement_solves += r.solves;
    return r.ok() ? r.energy : std::numeric_limits<double>::infinity();
  };
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = energy_at(c), fd = energy_at(d);
  while (b - a > config.refine_tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = energy_at(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = energy_at(d);
    }
  }
  const double th = fc < fd ? c : d;
  const double f = std::min(fc, fd);
  if (f < best.energy) {
    best.energy = f;
    best.theta = std::fmod(std::fmod(th, pi) + pi, pi);
  }
  return best;
}

/// True when the sampled curve has an interior local maximum lying between
/// two local minima. The grid is read as a function on [0, pi) (no
/// wrap-around); an endpoint counts as a local minimum when it is below its
/// only neighbour.
inline bool has_interior_local_max(const std::vector<double>& v) {
  const std::size_t n = v.size();
  if (n < 3) return false;
  auto is_min = [&](std::size_t i) {
    if (i == 0) return v[0] < v[1];
    if (i == n - 1) return v[n - 1] < v[n - 2];
    return v[i] <= v[i - 1] && v[i] <= v[i + 1] && (v[i] < v[i - 1] || v[i] < v[i + 1]);
  };
  auto is_max = [&](std::size_t i) {
    return v[i] >= v[i - 1] && v[i] >= v[i + 1] && (v[i] > v[i - 1] || v[i] > v[i + 1]);
  };
  std::optional<std::size_t> last_min;
  bool max_since_min = false;
  for (std::size_t i = 0; i < n; ++i) {
    if (is_min(i)) {
      if (last_min && max_since_min) return true;
      last_min = i;
      max_since_min = false;
    } else if (i > 0 && i + 1 < n && last_min && is_max(i)) {
      max_since_min = true;
    }
  }
  return false;
}

/// GW steering for each lambda (rows sorted ascending). Soft monotonicity
/// checks are reported in the table warnings.
inline SweepTable sweep_lambda(const SystemParams& params, const TargetShape& target,
                               std::vector<double> lambdas, const DCAConfig& config = {},
                               int threads = 0) {
  if (lambdas.empty()) throw InvalidInputError("lambda list is empty");
  std::sort(lambdas.begin(), lambdas.end());
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    if (!(lambdas[i] > 0.0) || !std::isfinite(lambdas[i]))
      throw InvalidInputError("lambda values must be positive and finite");
    if (i > 0 && lambdas[i] == lambdas[i - 1])
      throw InvalidInputError("lambda values must be distinct");
  }
  params.validate();

  SweepTable table;
  table.parameter_name = "lambda";
  table.parameter_unit = "1";
  table.terminal_cost_name = "GGW^2(N(0, Sigma_N), N(0, Sigma_r))";
  table.problem_hash = problem_hash(params, target.covariance());
  table.config = {{"max_iters", std::to_string(config.max_iters)},
                  {"tol_abs", detail::number_text(config.tol_abs)},
                  {"tol_rel", detail::number_text(config.tol_rel)}};
  table.rows.resize(lambdas.size());
  DCAConfig quiet = config;
  quiet.on_iteration = nullptr;  // observers are not thread-safe in general
  detail::parallel_for(static_cast<int>(lambdas.size()), threads > 0 ? threads : sweep_threads(),
                       [&](int i) {
                         const auto t0 = std::chrono::steady_clock::now();
                         SweepRow& row = table.rows[i];
                         row.parameter = row.lambda = lambdas[i];
                         try {
                           const DCAResult r = solve_gw_steering(params, target, lambdas[i], quiet);
                           row.energy = r.energy;
                           row.terminal_cost = r.ggw_squared;
                           row.solves = r.iterations;
                           row.status = r.warnings.empty() ? "optimal" : "near_optimal";
                           if (!r.converged) row.message = "max_iters reached";
                         } catch (const Error& e) {
                           row.status = "numerical_failure";
                           row.message = e.what();
                         }
                         row.wall_time = detail::seconds_since(t0);
                       });
  for (std::size_t i = 1; i < table.rows.size(); ++i) {
    const SweepRow& a = table.rows[i - 1];
    const SweepRow& b = table.rows[i];
    if (!a.ok() || !b.ok()) continue;
    if (a.energy < b.energy - 1e-4 * (1.0 + std::abs(b.energy)))
      table.warnings.push_back("energy increased between lambda=" + detail::number_text(a.parameter) +
                               " and " + detail::number_text(b.parameter));
    if (a.terminal_cost > b.terminal_cost + 1e-4 * (1.0 + std::abs(b.terminal_cost)))
      table.warnings.push_back("ggw_squared decreased between lambda=" +
                               detail::number_text(a.parameter) + " and " +
                               detail::number_text(b.parameter));
  }
  for (const auto& r : table.rows)
    if (!r.ok()) table.warnings.push_back("row lambda=" + detail::number_text(r.parameter) + " failed: " + r.message);
  return table;
}

struct ComparisonReport {
  bool comparable = false;
  std::string message;
  std::optional<double> theta_gw;
  std::optional<double> theta_star;
  std::optional<double> angle_gap;  // |theta_gw - theta_star| modulo pi
  double w_opt_star = std::numeric_limits<double>::quiet_NaN();
  double gw_energy = std::numeric_limits<double>::quiet_NaN();
  double gw_ggw_squared = std::numeric_limits<double>::quiet_NaN();
  bool gw_converged = false;
  int gw_problems = 1;
  int gw_subproblem_solves = 0;
  int wasserstein_problems = 0;  // grid size
  int wasserstein_solves = 0;    // including lambda retries and refinement
  SweepTable sweep;
  bool sweep_nonconvex = false;
};

/// One GW steering run against the full Wasserstein angle sweep.
inline ComparisonReport compare_gw_vs_wasserstein(const SystemParams& params,
                                                  const SymmetricMatrix& sigma_r, double lambda,
                                                  const std::vector<double>& grid,
                                                  const DCAConfig& dca = {},
                                                  const ThetaSweepConfig& sweep = {}) {
  if (params.state_dim() != 2 || sigma_r.dim() != 2)
    throw UnsupportedDimensionError("the angle comparison needs a planar state and target");
  ComparisonReport report;
  try {
    principal_angle(sigma_r);
  } catch (const DegenerateShapeError&) {
    report.message = "target shape is isotropic; orientation is undefined";
    return report;
  }

  const DCAResult gw = solve_gw_steering(params, TargetShape(sigma_r), lambda, dca);
  report.gw_energy = gw.energy;
  report.gw_ggw_squared = gw.ggw_squared;
  report.gw_converged = gw.converged;
  report.gw_subproblem_solves = gw.iterations;
  report.theta_gw = gw.theta_gw;

  report.sweep = sweep_theta(params, sigma_r, grid, sweep);
  report.wasserstein_problems = static_cast<int>(report.sweep.rows.size());
  const ThetaArgmin star = refine_theta_star(params, sigma_r, report.sweep, sweep);
  report.wasserstein_solves = report.sweep.total_solves() + star.refinement_solves;
  report.theta_star = star.theta;
  report.w_opt_star = star.energy;
  std::vector<double> energies;
  for (const auto& r : report.sweep.rows) energies.push_back(r.energy);
  report.sweep_nonconvex = has_interior_local_max(energies);

  if (!report.theta_gw) {
    report.message = "GW terminal covariance is isotropic; orientation is undefined";
    return report;
  }
  report.comparable = true;
  report.angle_gap = angle_distance_mod_pi(*report.theta_gw, star.theta);
  return report;
}

}  // namespace gwsteer
