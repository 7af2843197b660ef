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

#include <cstdint>
#include <iomanip>
#include <sstream>
#include <string>

#include "gwsteer/symmetric_matrix.hpp"
#include "gwsteer/system.hpp"

namespace gwsteer {

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

namespace detail {

inline void write_matrix(std::ostream& os, const char* tag, const Eigen::MatrixXd& m) {
  os << tag << ' ' << m.rows() << ' ' << m.cols();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) os << ' ' << m(i, j);
  os << '\n';
}

}  // namespace detail

/// Canonical text of the numerical problem data, 17 significant digits.
inline std::string canonical_problem_text(const SystemParams& params,
                                          const SymmetricMatrix& target) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "N " << params.horizon() << '\n';
  detail::write_matrix(os, "sigma0", params.sigma0.matrix());
  for (int k = 0; k < params.horizon(); ++k) {
    detail::write_matrix(os, "A", params.A[k]);
    detail::write_matrix(os, "B", params.B[k]);
    detail::write_matrix(os, "W", params.W[k].matrix());
    detail::write_matrix(os, "R", params.R[k].matrix());
  }
  detail::write_matrix(os, "target", target.matrix());
  return os.str();
}

/// Short identifier of (system, target), stable across runs and platforms
/// that print doubles identically.
inline std::string problem_hash(const SystemParams& params, const SymmetricMatrix& target) {
  return hex64(fnv1a(canonical_problem_text(params, target)));
}

}  // namespace gwsteer
