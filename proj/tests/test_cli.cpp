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

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "gwsteer/cli.hpp"

namespace fs = std::filesystem;
using namespace gwsteer;
using namespace gwsteer::cli;

namespace {

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    std::random_device rd;
    dir_ = fs::temp_directory_path() /
           ("gwsteer_cli_" + std::to_string(rd()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  static Json benchmark() {
    std::ifstream in(std::string(GWSTEER_DATA_DIR) + "/benchmark.json");
    return Json::parse(in);
  }

  std::string write_problem(const Json& j, const std::string& name = "problem.json") const {
    const fs::path p = dir_ / name;
    std::ofstream(p) << j.dump(2);
    return p.string();
  }

  std::string out(const std::string& sub) const { return (dir_ / sub).string(); }

  static Json read(const fs::path& p) {
    std::ifstream in(p);
    return Json::parse(in);
  }

  static std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  fs::path dir_;
  std::ostringstream log_;
};

}  // namespace

TEST_F(CliTest, UncontrolledBenchmark) {
  CommonOptions opt;
  opt.problem = write_problem(benchmark());
  opt.out_dir = out("u");
  ASSERT_EQ(cmd_uncontrolled(opt, log_), kSuccess) << log_.str();
  const Json j = read(dir_ / "u" / "result.json");
  EXPECT_NEAR(j["ggw_squared"].get<double>(), 6711.44, 0.01 * 6711.44);
  EXPECT_EQ(j["energy"].get<double>(), 0.0);

  std::ifstream csv(dir_ / "u" / "trajectory.csv");
  std::string header, row0, row1, line;
  std::getline(csv, header);
  EXPECT_EQ(header, "k,sigma_0_0,sigma_0_1,sigma_1_0,sigma_1_1");
  std::getline(csv, row0);
  std::getline(csv, row1);
  int rows = 2;
  while (std::getline(csv, line)) ++rows;
  EXPECT_EQ(rows, 11);
  // Sigma_1 = 3 A A^T + 0.5 I.
  std::vector<double> v;
  std::stringstream ss(row1);
  while (std::getline(ss, line, ',')) v.push_back(std::stod(line));
  ASSERT_EQ(v.size(), 5u);
  EXPECT_EQ(v[0], 1.0);
  EXPECT_NEAR(v[1], 3.53, 1e-12);
  EXPECT_NEAR(v[2], -0.6, 1e-12);
  EXPECT_NEAR(v[3], -0.6, 1e-12);
  EXPECT_NEAR(v[4], 3.77, 1e-12);
}

TEST_F(CliTest, SolveIsReproducibleWithoutTimings) {
  SolveOptions opt;
  opt.problem = write_problem(benchmark());
  opt.timings = false;
  opt.out_dir = out("a");
  ASSERT_EQ(cmd_solve(opt, log_), kSuccess) << log_.str();
  opt.out_dir = out("b");
  ASSERT_EQ(cmd_solve(opt, log_), kSuccess) << log_.str();
  const std::string a = slurp(dir_ / "a" / "result.json");
  EXPECT_EQ(a, slurp(dir_ / "b" / "result.json"));
  EXPECT_EQ(slurp(dir_ / "a" / "trajectory.csv"), slurp(dir_ / "b" / "trajectory.csv"));
  const Json j = Json::parse(a);
  EXPECT_NEAR(j["theta_gw"].get<double>(), 1.20, 0.05);
  EXPECT_TRUE(j["converged"].get<bool>());
  EXPECT_FALSE(j.contains("wall_time"));
  EXPECT_EQ(j["policy"]["K"].size(), 10u);
}

TEST_F(CliTest, ReachableTargetNeedsNoEnergy) {
  const auto params = [] {
    Eigen::Matrix2d a;
    a << 1.0, 0.1, -0.3, 1.0;
    return SystemParams::time_invariant(a, Eigen::Vector2d(0.7, 0.4),
                                        0.5 * SymmetricMatrix::identity(2),
                                        SymmetricMatrix::identity(1), 10,
                                        3.0 * SymmetricMatrix::identity(2));
  }();
  const SymmetricMatrix terminal = propagate_policy(params, Policy::zero(params)).back();
  Json doc = benchmark();
  doc["target"]["sigma_r"] = to_json(terminal);
  SolveOptions opt;
  opt.problem = write_problem(doc);
  opt.out_dir = out("r");
  ASSERT_EQ(cmd_solve(opt, log_), kSuccess) << log_.str();
  const Json j = read(dir_ / "r" / "result.json");
  const double scale = 16 * terminal.frobenius_norm() * terminal.frobenius_norm();
  EXPECT_NEAR(j["energy"].get<double>(), 0.0, 1e-8 * scale);
}

TEST_F(CliTest, RaggedMatrixIsInputError) {
  Json doc = benchmark();
  doc["system"]["A"] = Json::parse("[[1.0, 0.1], [-0.3]]");
  SolveOptions opt;
  opt.problem = write_problem(doc);
  opt.out_dir = out("x");
  EXPECT_EQ(cmd_solve(opt, log_), kInputError);
  EXPECT_NE(log_.str().find("$.system.A"), std::string::npos) << log_.str();
  EXPECT_FALSE(fs::exists(dir_ / "x" / "result.json"));
}

TEST_F(CliTest, MissingFileAndMalformedJson) {
  SolveOptions opt;
  opt.problem = (dir_ / "absent.json").string();
  opt.out_dir = out("x");
  EXPECT_EQ(cmd_solve(opt, log_), kInputError);
  const fs::path bad = dir_ / "bad.json";
  std::ofstream(bad) << "{\n  \"system\": [1, 2,\n";
  opt.problem = bad.string();
  EXPECT_EQ(cmd_solve(opt, log_), kInputError);
  EXPECT_NE(log_.str().find("line"), std::string::npos);
}

TEST_F(CliTest, ScalarPromotion) {
  Json doc = benchmark();
  doc["system"]["A"] = 0.9;
  doc["system"]["B"] = 1.0;
  doc["system"]["W"] = 0.1;
  doc["system"]["sigma0"] = 2.0;
  doc["target"]["sigma_r"] = 1.0;
  doc["target"]["dim"] = 1;
  CommonOptions opt;
  opt.problem = write_problem(doc);
  opt.out_dir = out("s");
  ASSERT_EQ(cmd_uncontrolled(opt, log_), kSuccess) << log_.str();
  const Json j = read(dir_ / "s" / "result.json");
  EXPECT_TRUE(j["theta"].is_null());
}

TEST_F(CliTest, FlatVectorIsRejectedWithHint) {
  Json doc = benchmark();
  doc["system"]["B"] = Json::parse("[0.7, 0.4]");
  CommonOptions opt;
  opt.problem = write_problem(doc);
  opt.out_dir = out("x");
  EXPECT_EQ(cmd_uncontrolled(opt, log_), kInputError);
  EXPECT_NE(log_.str().find("[[a], [b]]"), std::string::npos) << log_.str();
}

TEST_F(CliTest, TimeVaryingListMustMatchHorizon) {
  Json doc = benchmark();
  Json list = Json::array();
  for (int k = 0; k < 9; ++k) list.push_back(doc["system"]["A"]);
  doc["system"]["A"] = list;
  CommonOptions opt;
  opt.problem = write_problem(doc);
  opt.out_dir = out("x");
  EXPECT_EQ(cmd_uncontrolled(opt, log_), kInputError);
  list.push_back(doc["system"]["A"][0]);
  doc["system"]["A"] = list;
  opt.problem = write_problem(doc);
  EXPECT_EQ(cmd_uncontrolled(opt, log_), kSuccess) << log_.str();
}

TEST_F(CliTest, NonzeroMeanIsRejected) {
  Json doc = benchmark();
  doc["system"]["mean0"] = Json::parse("[[1.0], [0.0]]");
  CommonOptions opt;
  opt.problem = write_problem(doc);
  opt.out_dir = out("x");
  EXPECT_EQ(cmd_uncontrolled(opt, log_), kInputError);
  doc["system"]["mean0"] = Json::parse("[[0.0], [0.0]]");
  opt.problem = write_problem(doc);
  EXPECT_EQ(cmd_uncontrolled(opt, log_), kSuccess) << log_.str();
}

TEST_F(CliTest, SolverIterationCapIsSolverError) {
  Json doc = benchmark();
  doc["solver"]["backend"]["max_iterations"] = 1;
  SolveOptions opt;
  opt.problem = write_problem(doc);
  opt.out_dir = out("x");
  EXPECT_EQ(cmd_solve(opt, log_), kSolverError) << log_.str();
}

TEST_F(CliTest, RolloutNeedsPolicy) {
  RolloutOptions opt;
  opt.problem = write_problem(benchmark());
  opt.out_dir = out("x");
  EXPECT_EQ(cmd_rollout(opt, log_), kInputError);
  opt.policy_file = (dir_ / "nope.json").string();
  EXPECT_EQ(cmd_rollout(opt, log_), kInputError);
}

TEST_F(CliTest, RolloutWithSolvedPolicy) {
  SolveOptions s;
  s.problem = write_problem(benchmark());
  s.out_dir = out("solve");
  ASSERT_EQ(cmd_solve(s, log_), kSuccess) << log_.str();

  RolloutOptions opt;
  opt.problem = s.problem;
  opt.policy_file = (dir_ / "solve" / "result.json").string();
  opt.samples = 2000;
  opt.seed = 7;
  opt.timings = false;
  opt.out_dir = out("r1");
  ASSERT_EQ(cmd_rollout(opt, log_), kSuccess) << log_.str();
  opt.out_dir = out("r2");
  ASSERT_EQ(cmd_rollout(opt, log_), kSuccess) << log_.str();
  EXPECT_EQ(slurp(dir_ / "r1" / "rollout_summary.json"),
            slurp(dir_ / "r2" / "rollout_summary.json"));
  EXPECT_EQ(slurp(dir_ / "r1" / "paths.csv"), slurp(dir_ / "r2" / "paths.csv"));

  const Json j = read(dir_ / "r1" / "rollout_summary.json");
  EXPECT_EQ(j["seed"].get<std::uint64_t>(), 7u);
  EXPECT_LE(j["max_standard_errors"].get<double>(), 5.0);
  const Json solved = read(dir_ / "solve" / "result.json");
  const auto predicted = j["predicted_sigma_N"];
  const auto expected = solved["trajectory"]["sigma"].back();
  for (int i = 0; i < 2; ++i)
    for (int c = 0; c < 2; ++c)
      EXPECT_NEAR(predicted[i][c].get<double>(), expected[i][c].get<double>(),
                  1e-6 * (1 + std::abs(expected[i][c].get<double>())));

  opt.seed = 8;
  opt.out_dir = out("r3");
  opt.write_paths = false;
  ASSERT_EQ(cmd_rollout(opt, log_), kSuccess) << log_.str();
  EXPECT_FALSE(fs::exists(dir_ / "r3" / "paths.csv"));
  EXPECT_NE(slurp(dir_ / "r1" / "rollout_summary.json"),
            slurp(dir_ / "r3" / "rollout_summary.json"));
}

TEST_F(CliTest, SweepLambda) {
  SweepOptions opt;
  opt.problem = write_problem(benchmark());
  opt.out_dir = out("sw");
  opt.values = {1.0, 100.0};
  ASSERT_EQ(cmd_sweep(opt, log_), kSuccess) << log_.str();
  const Json j = read(dir_ / "sw" / "sweep_lambda.json");
  ASSERT_EQ(j["rows"].size(), 2u);
  EXPECT_GE(j["rows"][0]["energy"].get<double>(), j["rows"][1]["energy"].get<double>());
  const std::string csv = slurp(dir_ / "sw" / "sweep_lambda.csv");
  EXPECT_NE(csv.find("parameter,energy,terminal_cost,status,lambda,solves,wall_time"),
            std::string::npos);
  opt.mode = "bogus";
  EXPECT_EQ(cmd_sweep(opt, log_), kInputError);
}

TEST_F(CliTest, SweepThetaCoarseGrid) {
  SweepOptions opt;
  opt.problem = write_problem(benchmark());
  opt.out_dir = out("th");
  opt.mode = "theta";
  opt.grid = 8;
  ASSERT_EQ(cmd_sweep(opt, log_), kSuccess) << log_.str();
  const Json j = read(dir_ / "th" / "sweep_theta.json");
  EXPECT_EQ(j["rows"].size(), 8u);
  EXPECT_TRUE(j.contains("theta_star"));
  EXPECT_GE(j["theta_star"].get<double>(), 0.0);
  EXPECT_LT(j["theta_star"].get<double>(), 3.1416);
}

TEST_F(CliTest, CompareIsotropicTarget) {
  Json doc = benchmark();
  doc["target"]["sigma_r"] = Json::parse("[[1.0, 0.0], [0.0, 1.0]]");
  CompareOptions opt;
  opt.problem = write_problem(doc);
  opt.out_dir = out("c");
  opt.grid = 4;
  ASSERT_EQ(cmd_compare(opt, log_), kSuccess) << log_.str();
  const Json j = read(dir_ / "c" / "compare.json");
  EXPECT_FALSE(j["comparable"].get<bool>());
  EXPECT_TRUE(j["angle_gap"].is_null());
}

TEST_F(CliTest, CompareBenchmarkCoarse) {
  CompareOptions opt;
  opt.problem = write_problem(benchmark());
  opt.out_dir = out("c");
  opt.grid = 16;
  ASSERT_EQ(cmd_compare(opt, log_), kSuccess) << log_.str();
  const Json j = read(dir_ / "c" / "compare.json");
  EXPECT_TRUE(j["comparable"].get<bool>());
  EXPECT_EQ(j["solve_counts"]["gw_problems"].get<int>(), 1);
  EXPECT_EQ(j["solve_counts"]["wasserstein_problems"].get<int>(), 16);
  EXPECT_TRUE(fs::exists(dir_ / "c" / "sweep_theta.csv"));
}
