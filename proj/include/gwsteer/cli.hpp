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

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "gwsteer/baseline.hpp"
#include "gwsteer/dca.hpp"
#include "gwsteer/io.hpp"
#include "gwsteer/system.hpp"

// Command implementations behind the gwsteer executable. Each returns the
// process exit code: 0 success, 2 bad input, 3 solver failure.

namespace gwsteer::cli {

enum ExitCode : int { kSuccess = 0, kInputError = 2, kSolverError = 3 };

struct CommonOptions {
  std::string problem;
  std::string out_dir = ".";
  bool timings = true;  // off for byte-reproducible output
};

struct SolveOptions : CommonOptions {
  std::optional<double> lambda;
};

struct RolloutOptions : CommonOptions {
  int samples = 100;
  std::optional<std::uint64_t> seed;
  std::string policy_file;
  bool uncontrolled = false;
  bool write_paths = true;
};

struct SweepOptions : CommonOptions {
  std::string mode = "lambda";  // or "theta"
  std::vector<double> values;   // lambda list override
  std::optional<int> grid;      // theta points override
  std::optional<double> lambda; // theta-sweep weight override
};

struct CompareOptions : CommonOptions {
  std::optional<double> lambda;
  std::optional<int> grid;
};

namespace detail {

inline std::filesystem::path prepare_out(const std::string& dir) {
  std::filesystem::path p(dir);
  std::filesystem::create_directories(p);
  return p;
}

inline void write_text(const std::filesystem::path& path, const std::function<void(std::ostream&)>& f) {
  std::ofstream os(path);
  if (!os) throw InvalidInputError("cannot write " + path.string());
  f(os);
}

inline void write_json(const std::filesystem::path& path, const Json& j) {
  write_text(path, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
}

inline Json header(const std::string& kind, const ProblemFile& pf) {
  return {{"schema_version", kSchemaVersion}, {"kind", kind}, {"problem_hash", pf.hash()}};
}

inline void add_timing(Json& j, bool enabled, std::chrono::steady_clock::time_point t0) {
  if (enabled) j["timings"] = {{"total_seconds", gwsteer::detail::seconds_since(t0)}};
}

// Maps library exceptions onto the exit-code contract.
inline int guarded(std::ostream& log, const std::function<int()>& body) {
  try {
    return body();
  } catch (const AbortedRunError& e) {
    log << "error: " << e.what() << " (after " << e.history().size() << " accepted iterations)\n";
    return kSolverError;
  } catch (const SolverFailureError& e) {
    log << "error: " << e.what() << '\n';
    return kSolverError;
  } catch (const SingularCovarianceError& e) {
    log << "error: " << e.what() << '\n';
    return kSolverError;
  } catch (const Error& e) {
    log << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const std::filesystem::filesystem_error& e) {
    log << "error: " << e.what() << '\n';
    return kInputError;
  }
}

}  // namespace detail

/// Result document for a GW steering run.
inline Json solve_result_json(const ProblemFile& pf, double lambda, const DCAResult& r) {
  Json j = detail::header("solve", pf);
  j["lambda"] = lambda;
  j["converged"] = r.converged;
  j["iterations"] = r.iterations;
  j["energy"] = r.energy;
  j["ggw_squared"] = r.ggw_squared;
  j["theta_gw"] = optional_number(r.theta_gw);
  j["objective_history"] = r.objective_history;
  Json warnings = r.warnings;
  if (!r.converged) warnings.push_back("max_iters reached before the stopping rule was met");
  j["warnings"] = warnings;
  j["policy"] = policy_to_json(r.policy);
  j["trajectory"] = {{"sigma", to_json(r.plan.sigma)},
                     {"M", to_json(r.plan.M)},
                     {"P", to_json(r.plan.P)}};
  return j;
}

inline int cmd_solve(const SolveOptions& opt, std::ostream& log) {
  return detail::guarded(log, [&] {
    const auto t0 = std::chrono::steady_clock::now();
    const ProblemFile pf = load_problem(opt.problem);
    const double lambda = opt.lambda.value_or(pf.lambda);
    if (!(lambda > 0.0)) throw InvalidInputError("--lambda must be positive");
    const DCAResult r = solve_gw_steering(pf.params, TargetShape(pf.sigma_r), lambda, pf.dca);
    Json j = solve_result_json(pf, lambda, r);
    detail::add_timing(j, opt.timings, t0);
    const auto out = detail::prepare_out(opt.out_dir);
    detail::write_json(out / "result.json", j);
    detail::write_text(out / "trajectory.csv",
                       [&](std::ostream& os) { write_trajectory_csv(os, r.plan.sigma); });
    log << "energy " << r.energy << ", ggw_squared " << r.ggw_squared << ", iterations "
        << r.iterations << (r.converged ? "" : " (not converged)") << '\n';
    return static_cast<int>(kSuccess);
  });
}

inline int cmd_uncontrolled(const CommonOptions& opt, std::ostream& log) {
  return detail::guarded(log, [&] {
    const auto t0 = std::chrono::steady_clock::now();
    const ProblemFile pf = load_problem(opt.problem);
    const Policy zero = Policy::zero(pf.params);
    const TransformedPlan plan = lift_policy(pf.params, zero);
    Json j = detail::header("uncontrolled", pf);
    j["energy"] = 0.0;
    j["ggw_squared"] = ggw_squared(plan.terminal(), pf.sigma_r);
    j["theta"] = optional_number(terminal_angle(plan.terminal()));
    j["policy"] = policy_to_json(zero);
    j["trajectory"] = {{"sigma", to_json(plan.sigma)}};
    detail::add_timing(j, opt.timings, t0);
    const auto out = detail::prepare_out(opt.out_dir);
    detail::write_json(out / "result.json", j);
    detail::write_text(out / "trajectory.csv",
                       [&](std::ostream& os) { write_trajectory_csv(os, plan.sigma); });
    log << "uncontrolled ggw_squared " << j["ggw_squared"].get<double>() << '\n';
    return static_cast<int>(kSuccess);
  });
}

inline int cmd_rollout(const RolloutOptions& opt, std::ostream& log) {
  return detail::guarded(log, [&] {
    const auto t0 = std::chrono::steady_clock::now();
    const ProblemFile pf = load_problem(opt.problem);
    if (opt.samples < 2) throw InvalidInputError("--samples must be at least 2");
    Policy policy;
    if (opt.uncontrolled) {
      policy = Policy::zero(pf.params);
    } else if (!opt.policy_file.empty()) {
      policy = policy_from_json(read_json_file(opt.policy_file), pf.params);
    } else {
      throw InvalidInputError("a policy is required: pass --policy FILE or --uncontrolled");
    }
    const std::uint64_t seed = opt.seed.value_or(pf.seed);
    const RolloutBatch batch = rollout(pf.params, policy, opt.samples, seed);
    const int n = pf.params.horizon();
    const SymmetricMatrix predicted = propagate_policy(pf.params, policy).back();
    const SymmetricMatrix empirical = empirical_covariance(batch, n);

    // Entry-wise standard error of a Gaussian sample covariance.
    const int nx = pf.params.state_dim();
    double worst_ratio = 0.0;
    double max_abs = 0.0;
    for (int i = 0; i < nx; ++i)
      for (int c = 0; c < nx; ++c) {
        const double se = std::sqrt((predicted(i, i) * predicted(c, c) +
                                     predicted(i, c) * predicted(i, c)) /
                                    (opt.samples - 1));
        const double d = std::abs(empirical(i, c) - predicted(i, c));
        max_abs = std::max(max_abs, d);
        worst_ratio = std::max(worst_ratio, se > 0.0 ? d / se : (d > 0.0 ? INFINITY : 0.0));
      }

    Json j = detail::header("rollout", pf);
    j["seed"] = seed;
    j["samples"] = opt.samples;
    j["deterministic_policy"] = batch.deterministic_policy;
    j["predicted_sigma_N"] = to_json(predicted);
    j["empirical_sigma_N"] = to_json(empirical);
    j["max_abs_discrepancy"] = max_abs;
    j["max_standard_errors"] = worst_ratio;
    j["within_5_standard_errors"] = worst_ratio <= 5.0;
    detail::add_timing(j, opt.timings, t0);
    const auto out = detail::prepare_out(opt.out_dir);
    detail::write_json(out / "rollout_summary.json", j);
    if (opt.write_paths) {
      detail::write_text(out / "paths.csv", [&](std::ostream& os) {
        os << "sample,k";
        for (int i = 0; i < nx; ++i) os << ",x_" << i;
        os << '\n';
        os.precision(17);
        for (int s = 0; s < batch.n_samples; ++s)
          for (int k = 0; k <= n; ++k) {
            os << s << ',' << k;
            const auto x = batch.state(s, k);
            for (int i = 0; i < nx; ++i) os << ',' << x(i);
            os << '\n';
          }
      });
    }
    log << "terminal covariance discrepancy " << max_abs << " (" << worst_ratio
        << " standard errors)\n";
    return static_cast<int>(kSuccess);
  });
}

inline int cmd_sweep(const SweepOptions& opt, std::ostream& log) {
  return detail::guarded(log, [&] {
    const auto t0 = std::chrono::steady_clock::now();
    const ProblemFile pf = load_problem(opt.problem);
    const auto out = detail::prepare_out(opt.out_dir);
    Json j = detail::header("sweep_" + opt.mode, pf);
    SweepTable table;
    if (opt.mode == "lambda") {
      table = sweep_lambda(pf.params, TargetShape(pf.sigma_r),
                           opt.values.empty() ? pf.sweep.lambdas : opt.values, pf.dca);
    } else if (opt.mode == "theta") {
      ThetaSweepConfig cfg;
      cfg.lambda = opt.lambda.value_or(pf.sweep.theta_lambda);
      cfg.solver = pf.dca.solver;
      const auto grid = theta_grid(opt.grid.value_or(pf.sweep.theta_points));
      table = sweep_theta(pf.params, pf.sigma_r, grid, cfg);
      if (table.any_ok()) {
        const ThetaArgmin star = refine_theta_star(pf.params, pf.sigma_r, table, cfg);
        std::vector<double> energies;
        for (const auto& r : table.rows) energies.push_back(r.energy);
        j["theta_star"] = star.theta;
        j["w_opt_star"] = star.energy;
        j["refinement_solves"] = star.refinement_solves;
        j["nonconvex"] = has_interior_local_max(energies);
      }
    } else {
      throw InvalidInputError("--mode must be lambda or theta");
    }
    j["rows"] = table_rows_to_json(table);
    j["warnings"] = table.warnings;
    j["total_solves"] = table.total_solves();
    detail::add_timing(j, opt.timings, t0);
    detail::write_json(out / ("sweep_" + opt.mode + ".json"), j);
    detail::write_text(out / ("sweep_" + opt.mode + ".csv"),
                       [&](std::ostream& os) { table.write_csv(os); });
    for (const auto& w : table.warnings) log << "warning: " << w << '\n';
    if (!table.any_ok()) {
      log << "error: every sweep row failed\n";
      return static_cast<int>(kSolverError);
    }
    return static_cast<int>(kSuccess);
  });
}

inline int cmd_compare(const CompareOptions& opt, std::ostream& log) {
  return detail::guarded(log, [&] {
    const auto t0 = std::chrono::steady_clock::now();
    const ProblemFile pf = load_problem(opt.problem);
    ThetaSweepConfig cfg;
    cfg.lambda = pf.sweep.theta_lambda;
    cfg.solver = pf.dca.solver;
    const double lambda = opt.lambda.value_or(pf.lambda);
    const ComparisonReport rep = compare_gw_vs_wasserstein(
        pf.params, pf.sigma_r, lambda, theta_grid(opt.grid.value_or(pf.sweep.theta_points)),
        pf.dca, cfg);
    Json j = detail::header("compare", pf);
    j["lambda"] = lambda;
    j["comparable"] = rep.comparable;
    j["message"] = rep.message;
    j["theta_gw"] = optional_number(rep.theta_gw);
    j["theta_star"] = optional_number(rep.theta_star);
    j["angle_gap"] = optional_number(rep.angle_gap);
    j["w_opt_star"] = std::isfinite(rep.w_opt_star) ? Json(rep.w_opt_star) : Json(nullptr);
    j["gw_energy"] = std::isfinite(rep.gw_energy) ? Json(rep.gw_energy) : Json(nullptr);
    j["gw_ggw_squared"] =
        std::isfinite(rep.gw_ggw_squared) ? Json(rep.gw_ggw_squared) : Json(nullptr);
    j["gw_converged"] = rep.gw_converged;
    j["sweep_nonconvex"] = rep.sweep_nonconvex;
    j["solve_counts"] = {{"gw_problems", rep.gw_problems},
                         {"gw_subproblem_solves", rep.gw_subproblem_solves},
                         {"wasserstein_problems", rep.wasserstein_problems},
                         {"wasserstein_solves", rep.wasserstein_solves}};
    j["sweep_rows"] = table_rows_to_json(rep.sweep);
    detail::add_timing(j, opt.timings, t0);
    const auto out = detail::prepare_out(opt.out_dir);
    detail::write_json(out / "compare.json", j);
    if (!rep.sweep.rows.empty()) {
      detail::write_text(out / "sweep_theta.csv",
                         [&](std::ostream& os) { rep.sweep.write_csv(os); });
    }
    if (rep.comparable) {
      log << "theta_gw " << *rep.theta_gw << ", theta* " << *rep.theta_star << ", gap "
          << *rep.angle_gap << '\n';
    } else {
      log << "incomparable: " << rep.message << '\n';
    }
    return static_cast<int>(kSuccess);
  });
}

}  // namespace gwsteer::cli
