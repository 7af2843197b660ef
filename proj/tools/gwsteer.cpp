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

#include <CLI11.hpp>

#include <iostream>

#include "gwsteer/cli.hpp"

namespace {

void add_common(CLI::App* cmd, gwsteer::cli::CommonOptions& opt) {
  cmd->add_option("problem", opt.problem, "Problem file (JSON)")->required();
  cmd->add_option("-o,--out", opt.out_dir, "Output directory")->capture_default_str();
  cmd->add_flag("--no-timings{false}", opt.timings, "Omit wall-clock timings from JSON output");
}

}  // namespace

int main(int argc, char** argv) {
  using namespace gwsteer::cli;
  CLI::App app{"Gaussian covariance steering with a Gromov-Wasserstein terminal cost"};
  app.require_subcommand(1);

  SolveOptions solve;
  auto* solve_cmd = app.add_subcommand("solve", "Run the DC algorithm and write the policy");
  add_common(solve_cmd, solve);
  solve_cmd->add_option("--lambda", solve.lambda, "Override the control-energy weight");

  CommonOptions uncontrolled;
  auto* unc_cmd = app.add_subcommand("uncontrolled", "Propagate the uncontrolled system");
  add_common(unc_cmd, uncontrolled);

  RolloutOptions roll;
  auto* roll_cmd = app.add_subcommand("rollout", "Sample paths under a policy");
  add_common(roll_cmd, roll);
  roll_cmd->add_option("-n,--samples", roll.samples, "Number of sample paths")->capture_default_str();
  roll_cmd->add_option("--seed", roll.seed, "RNG seed (default: the problem file seed)");
  roll_cmd->add_option("--policy", roll.policy_file, "Result JSON written by `solve`");
  roll_cmd->add_flag("--uncontrolled", roll.uncontrolled, "Use K = 0, Q = 0");
  roll_cmd->add_flag("--no-paths{false}", roll.write_paths, "Only write the summary JSON");

  SweepOptions sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "Lambda trade-off or Wasserstein angle sweep");
  add_common(sweep_cmd, sweep);
  sweep_cmd->add_option("--mode", sweep.mode, "lambda or theta")
      ->check(CLI::IsMember({"lambda", "theta"}))
      ->capture_default_str();
  sweep_cmd->add_option("--values", sweep.values, "Lambda values (mode lambda)")->delimiter(',');
  sweep_cmd->add_option("--grid", sweep.grid, "Number of angles in [0, pi) (mode theta)");
  sweep_cmd->add_option("--lambda", sweep.lambda, "Energy weight for the angle sweep");

  CompareOptions compare;
  auto* cmp_cmd = app.add_subcommand("compare", "GW steering against the Wasserstein angle sweep");
  add_common(cmp_cmd, compare);
  cmp_cmd->add_option("--lambda", compare.lambda, "Energy weight for the GW run");
  cmp_cmd->add_option("--grid", compare.grid, "Number of angles in [0, pi)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInputError;
  }

  if (*solve_cmd) return cmd_solve(solve, std::cerr);
  if (*unc_cmd) return cmd_uncontrolled(uncontrolled, std::cerr);
  if (*roll_cmd) return cmd_rollout(roll, std::cerr);
  if (*sweep_cmd) return cmd_sweep(sweep, std::cerr);
  if (*cmp_cmd) return cmd_compare(compare, std::cerr);
  return kInputError;
}
