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

#include <json.hpp>

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "gwsteer/baseline.hpp"
#include "gwsteer/dca.hpp"
#include "gwsteer/errors.hpp"
#include "gwsteer/hash.hpp"
#include "gwsteer/system.hpp"

// JSON problem and result files.
//
// Problem file:
//   {
//     "schema_version": 1,
//     "system": {"N": 10, "A": M, "B": M, "W": M, "R": M, "sigma0": M},
//     "target": {"sigma_r": M, "dim": 2},
//     "solver": {"lambda": 1.0,
//                "dca": {"max_iters": 50, "tol_abs": 1e-7, "tol_rel": 1e-6,
//                        "init": "uncontrolled_spectrum" | "identity" | [[V]]},
//                "backend": {"feasibility_tol": 1e-8, "gap_tol": 1e-8,
//                            "max_iterations": 100}},
//     "sweep": {"lambdas": [...], "theta_points": 64, "theta_lambda": 1e-3},
//     "seed": 0
//   }
// M is a number (1 x 1), a row-major nested array, or, for A, B, W and R,
// a list of N such matrices.

namespace gwsteer {

using Json = nlohmann::json;

/// Malformed problem or policy file. what() starts with the JSON path.
class ParseError : public InvalidInputError {
 public:
  ParseError(const std::string& path, const std::string& message)
      : InvalidInputError(path + ": " + message), path_(path) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

inline constexpr int kSchemaVersion = 1;

struct SweepSettings {
  std::vector<double> lambdas{1.0, 100.0, 10000.0};
  int theta_points = 64;
  double theta_lambda = 1e-3;
};

struct ProblemFile {
  SystemParams params;
  SymmetricMatrix sigma_r;
  double lambda = 1.0;
  DCAConfig dca;
  SweepSettings sweep;
  std::uint64_t seed = 0;

  std::string hash() const { return problem_hash(params, sigma_r); }
};

namespace detail {

inline int json_depth(const Json& j) {
  if (!j.is_array()) return 0;
  if (j.empty()) return 1;
  return 1 + json_depth(j.front());
}

inline double json_number(const Json& j, const std::string& path) {
  if (!j.is_number()) throw ParseError(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ParseError(path, "non-finite number");
  return v;
}

inline Eigen::MatrixXd json_matrix(const Json& j, const std::string& path) {
  if (j.is_number()) return Eigen::MatrixXd::Constant(1, 1, json_number(j, path));
  if (!j.is_array() || j.empty()) throw ParseError(path, "expected a non-empty nested array");
  const std::size_t rows = j.size();
  std::size_t cols = 0;
  for (std::size_t i = 0; i < rows; ++i) {
    const std::string rp = path + "[" + std::to_string(i) + "]";
    if (!j[i].is_array())
      throw ParseError(rp, "expected a row (array of numbers); write column vectors as [[a], [b]]");
    if (i == 0) {
      cols = j[i].size();
      if (cols == 0) throw ParseError(rp, "empty row");
    } else if (j[i].size() != cols) {
      throw ParseError(rp, "ragged row: expected " + std::to_string(cols) + " entries, got " +
                               std::to_string(j[i].size()));
    }
  }
  Eigen::MatrixXd m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t c = 0; c < cols; ++c)
      m(i, c) = json_number(j[i][c], path + "[" + std::to_string(i) + "][" + std::to_string(c) + "]");
  return m;
}

inline SymmetricMatrix json_symmetric(const Json& j, const std::string& path) {
  const Eigen::MatrixXd m = json_matrix(j, path);
  if (m.rows() != m.cols()) throw ParseError(path, "expected a square matrix");
  if ((m - m.transpose()).norm() > 1e-12 * (1.0 + m.norm()))
    throw ParseError(path, "matrix is not symmetric");
  return SymmetricMatrix(m);
}

// A single matrix broadcast to N steps, or a list of exactly N matrices.
inline std::vector<Eigen::MatrixXd> json_sequence(const Json& j, const std::string& path, int n) {
  if (json_depth(j) == 3) {
    if (static_cast<int>(j.size()) != n)
      throw ParseError(path, "expected " + std::to_string(n) + " matrices, got " +
                                 std::to_string(j.size()));
    std::vector<Eigen::MatrixXd> out;
    for (std::size_t k = 0; k < j.size(); ++k)
      out.push_back(json_matrix(j[k], path + "[" + std::to_string(k) + "]"));
    return out;
  }
  return std::vector<Eigen::MatrixXd>(n, json_matrix(j, path));
}

inline const Json& json_require(const Json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) throw ParseError(path, "expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(path + "." + key, "missing required key");
  return *it;
}

inline std::optional<Json> json_optional(const Json& obj, const std::string& key,
                                         const std::string& path) {
  if (!obj.is_object()) throw ParseError(path, "expected an object");
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  return *it;
}

inline void reject_nonzero_mean(const Json& obj, const std::string& key, const std::string& path) {
  const auto mean = json_optional(obj, key, path);
  if (!mean) return;
  const Eigen::MatrixXd m = json_matrix(*mean, path + "." + key);
  if (m.norm() != 0.0)
    throw ParseError(path + "." + key, "only zero-mean problems are supported");
}

inline int json_positive_int(const Json& j, const std::string& path) {
  if (!j.is_number_integer() || j.get<long long>() < 1)
    throw ParseError(path, "expected a positive integer");
  return static_cast<int>(j.get<long long>());
}

}  // namespace detail

/// Parses and validates a problem document. Throws ParseError.
inline ProblemFile parse_problem(const Json& doc) {
  using namespace detail;
  const std::string root = "$";
  if (!doc.is_object()) throw ParseError(root, "expected an object");
  if (const auto v = json_optional(doc, "schema_version", root)) {
    if (!v->is_number_integer() || v->get<int>() != kSchemaVersion)
      throw ParseError("$.schema_version", "unsupported schema version");
  }

  ProblemFile pf;
  const Json& sys = json_require(doc, "system", root);
  const std::string sp = "$.system";
  const int n = json_positive_int(json_require(sys, "N", sp), sp + ".N");
  const auto as = json_sequence(json_require(sys, "A", sp), sp + ".A", n);
  const auto bs = json_sequence(json_require(sys, "B", sp), sp + ".B", n);
  const auto ws = json_sequence(json_require(sys, "W", sp), sp + ".W", n);
  const auto rs = json_sequence(json_require(sys, "R", sp), sp + ".R", n);
  pf.params.sigma0 = json_symmetric(json_require(sys, "sigma0", sp), sp + ".sigma0");
  reject_nonzero_mean(sys, "mean0", sp);
  for (int k = 0; k < n; ++k) {
    pf.params.A.push_back(as[k]);
    pf.params.B.push_back(bs[k]);
    for (const auto& [name, m] : {std::pair{"W", &ws[k]}, std::pair{"R", &rs[k]}}) {
      const std::string at = sp + "." + name + "[" + std::to_string(k) + "]";
      if (m->rows() != m->cols()) throw ParseError(at, "expected a square matrix");
      if ((*m - m->transpose()).norm() > 1e-12 * (1.0 + m->norm()))
        throw ParseError(at, "matrix is not symmetric");
    }
    pf.params.W.emplace_back(ws[k]);
    pf.params.R.emplace_back(rs[k]);
  }
  try {
    pf.params.validate();
  } catch (const ParseError&) {
    throw;
  } catch (const InvalidInputError& e) {
    throw ParseError(sp, e.what());
  }

  const Json& tgt = json_require(doc, "target", root);
  pf.sigma_r = json_symmetric(json_require(tgt, "sigma_r", "$.target"), "$.target.sigma_r");
  reject_nonzero_mean(tgt, "mean", "$.target");
  if (const auto d = json_optional(tgt, "dim", "$.target")) {
    if (json_positive_int(*d, "$.target.dim") != pf.sigma_r.dim())
      throw ParseError("$.target.dim", "does not match the size of sigma_r");
  }
  try {
    require_psd(pf.sigma_r, "target covariance");
  } catch (const InvalidInputError& e) {
    throw ParseError("$.target.sigma_r", e.what());
  }

  if (const auto solver = json_optional(doc, "solver", root)) {
    const std::string sv = "$.solver";
    if (const auto l = json_optional(*solver, "lambda", sv)) {
      pf.lambda = json_number(*l, sv + ".lambda");
      if (!(pf.lambda > 0.0)) throw ParseError(sv + ".lambda", "must be positive");
    }
    if (const auto dca = json_optional(*solver, "dca", sv)) {
      const std::string dp = sv + ".dca";
      if (const auto v = json_optional(*dca, "max_iters", dp))
        pf.dca.max_iters = json_positive_int(*v, dp + ".max_iters");
      if (const auto v = json_optional(*dca, "tol_abs", dp))
        pf.dca.tol_abs = json_number(*v, dp + ".tol_abs");
      if (const auto v = json_optional(*dca, "tol_rel", dp))
        pf.dca.tol_rel = json_number(*v, dp + ".tol_rel");
      if (const auto v = json_optional(*dca, "init", dp)) {
        if (v->is_string() && *v == "uncontrolled_spectrum") {
          pf.dca.init = InitStrategy::kUncontrolledSpectrum;
        } else if (v->is_string() && *v == "identity") {
          pf.dca.init = InitStrategy::kIdentity;
        } else if (v->is_array()) {
          pf.dca.init = InitStrategy::kGiven;
          pf.dca.given_vectors = json_matrix(*v, dp + ".init");
        } else {
          throw ParseError(dp + ".init",
                           "expected \"uncontrolled_spectrum\", \"identity\" or a matrix");
        }
      }
      try {
        pf.dca.validate(pf.params.state_dim());
      } catch (const InvalidInputError& e) {
        throw ParseError(dp, e.what());
      }
    }
    if (const auto be = json_optional(*solver, "backend", sv)) {
      const std::string bp = sv + ".backend";
      if (const auto v = json_optional(*be, "feasibility_tol", bp))
        pf.dca.solver.feasibility_tol = json_number(*v, bp + ".feasibility_tol");
      if (const auto v = json_optional(*be, "gap_tol", bp))
        pf.dca.solver.gap_tol = json_number(*v, bp + ".gap_tol");
      if (const auto v = json_optional(*be, "max_iterations", bp))
        pf.dca.solver.max_iterations = json_positive_int(*v, bp + ".max_iterations");
      if (!(pf.dca.solver.feasibility_tol > 0.0) || !(pf.dca.solver.gap_tol > 0.0))
        throw ParseError(bp, "tolerances must be positive");
    }
  }

  if (const auto sw = json_optional(doc, "sweep", root)) {
    const std::string wp = "$.sweep";
    if (const auto v = json_optional(*sw, "lambdas", wp)) {
      if (!v->is_array() || v->empty()) throw ParseError(wp + ".lambdas", "expected a non-empty array");
      pf.sweep.lambdas.clear();
      for (std::size_t i = 0; i < v->size(); ++i)
        pf.sweep.lambdas.push_back(json_number((*v)[i], wp + ".lambdas[" + std::to_string(i) + "]"));
    }
    if (const auto v = json_optional(*sw, "theta_points", wp))
      pf.sweep.theta_points = json_positive_int(*v, wp + ".theta_points");
    if (const auto v = json_optional(*sw, "theta_lambda", wp))
      pf.sweep.theta_lambda = json_number(*v, wp + ".theta_lambda");
  }

  if (const auto s = json_optional(doc, "seed", root)) {
    if (!s->is_number_unsigned()) throw ParseError("$.seed", "expected a non-negative integer");
    pf.seed = s->get<std::uint64_t>();
  }
  return pf;
}

/// Reads a JSON file; syntax errors carry the line and column.
inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, "cannot open file");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ParseError(path, e.what());
  }
}

inline ProblemFile load_problem(const std::string& path) {
  return parse_problem(read_json_file(path));
}

// ---- encoding ----

inline Json to_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Json to_json(const SymmetricMatrix& s) { return to_json(s.matrix()); }

template <class T>
Json to_json(const std::vector<T>& seq) {
  Json out = Json::array();
  for (const auto& m : seq) out.push_back(to_json(m));
  return out;
}

inline Json policy_to_json(const Policy& p) {
  return {{"K", to_json(p.K)}, {"Q", to_json(p.Q)}};
}

/// Parses the "policy" member of a result document.
inline Policy policy_from_json(const Json& doc, const SystemParams& params) {
  using namespace detail;
  const Json& pol = json_require(doc, "policy", "$");
  const Json& ks = json_require(pol, "K", "$.policy");
  const Json& qs = json_require(pol, "Q", "$.policy");
  if (!ks.is_array() || static_cast<int>(ks.size()) != params.horizon())
    throw ParseError("$.policy.K", "expected " + std::to_string(params.horizon()) + " gains");
  if (!qs.is_array() || static_cast<int>(qs.size()) != params.horizon())
    throw ParseError("$.policy.Q", "expected " + std::to_string(params.horizon()) + " covariances");
  Policy p;
  for (int k = 0; k < params.horizon(); ++k) {
    const std::string kp = "$.policy.K[" + std::to_string(k) + "]";
    const std::string qp = "$.policy.Q[" + std::to_string(k) + "]";
    p.K.push_back(json_matrix(ks[k], kp));
    if (p.K.back().rows() != params.input_dim() || p.K.back().cols() != params.state_dim())
      throw ParseError(kp, "gain must be n_u x n_x");
    p.Q.push_back(json_symmetric(qs[k], qp));
    if (p.Q.back().dim() != params.input_dim()) throw ParseError(qp, "must be n_u x n_u");
    try {
      require_psd(p.Q.back(), "Q");
    } catch (const InvalidInputError& e) {
      throw ParseError(qp, e.what());
    }
  }
  return p;
}

inline Json optional_number(const std::optional<double>& v) {
  return v ? Json(*v) : Json(nullptr);
}

inline Json table_rows_to_json(const SweepTable& t) {
  Json rows = Json::array();
  for (const auto& r : t.rows) {
    rows.push_back({{"parameter", r.parameter},
                    {"energy", std::isfinite(r.energy) ? Json(r.energy) : Json(nullptr)},
                    {"terminal_cost",
                     std::isfinite(r.terminal_cost) ? Json(r.terminal_cost) : Json(nullptr)},
                    {"status", r.status},
                    {"lambda", r.lambda},
                    {"solves", r.solves},
                    {"message", r.message}});
  }
  return rows;
}

/// Covariance trajectory as CSV: k, then the entries of Sigma_k row-major.
inline void write_trajectory_csv(std::ostream& os, const std::vector<SymmetricMatrix>& sigma) {
  const int n = sigma.empty() ? 0 : sigma.front().dim();
  os << "k";
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) os << ",sigma_" << i << '_' << j;
  os << '\n';
  const auto old = os.precision(17);
  for (std::size_t k = 0; k < sigma.size(); ++k) {
    os << k;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) os << ',' << sigma[k](i, j);
    os << '\n';
  }
  os.precision(old);
}

}  // namespace gwsteer
