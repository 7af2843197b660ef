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

#include <stdexcept>
#include <string>
#include <vector>

namespace gwsteer {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed, non-finite, or shape-inconsistent input.
class InvalidInputError : public Error {
 public:
  using Error::Error;
};

/// Operation only defined for a particular state dimension.
class UnsupportedDimensionError : public Error {
 public:
  using Error::Error;
};

/// Orientation requested from a covariance whose leading eigenvalue is not
/// separated from the second one.
class DegenerateShapeError : public Error {
 public:
  using Error::Error;
};

/// A covariance that must be inverted is (numerically) singular.
class SingularCovarianceError : public Error {
 public:
  using Error::Error;
};

/// A convex program could not be solved to the requested accuracy.
class SolverFailureError : public Error {
 public:
  using Error::Error;
};

/// A DCA run stopped because a convex subproblem could not be solved. Carries
/// the objective values accepted before the failure.
class AbortedRunError : public Error {
 public:
  AbortedRunError(const std::string& what, std::vector<double> history)
      : Error(what), history_(std::move(history)) {}

  const std::vector<double>& history() const noexcept { return history_; }

 private:
  std::vector<double> history_;
};

}  // namespace gwsteer
