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

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "gwsteer/errors.hpp"
#include "gwsteer/symmetric_matrix.hpp"

namespace gwsteer {

/// Discrete-time linear Gaussian system
///   x_{k+1} = A_k x_k + B_k u_k + w_k,  x_0 ~ N(0, Sigma0),  w_k ~ N(0, W_k)
/// with control cost weights R_k (n_u x n_u, positive definite).
struct SystemParams {
  std::vector<Eigen::MatrixXd> A;
  std::vector<Eigen::MatrixXd> B;
  std::vector<SymmetricMatrix> W;
  std::vector<SymmetricMatrix> R;
  SymmetricMatrix sigma0;

  static SystemParams time_invariant(const Eigen::MatrixXd& a,
                                     const Eigen::MatrixXd& b,
                                     const SymmetricMatrix& w,
                                     const SymmetricMatrix& r, int horizon,
                                     SymmetricMatrix sigma0) {
    if (horizon < 1) throw InvalidInputError("horizon must be positive");
    SystemParams p;
    p.A.assign(horizon, a);
    p.B.assign(horizon, b);
    p.W.assign(horizon, w);
    p.R.assign(horizon, r);
    p.sigma0 = std::move(sigma0);
    return p;
  }

  int horizon() const noexcept { return static_cast<int>(A.size()); }
  int state_dim() const noexcept { return sigma0.dim(); }
  int input_dim() const noexcept {
    return B.empty() ? 0 : static_cast<int>(B.front().cols());
  }

  /// Throws InvalidInputError on inconsistent sequence lengths or shapes.
  void check_shapes() const {
    const int n = horizon();
    if (n < 1) throw InvalidInputError("horizon must be positive");
    if (static_cast<int>(B.size()) != n || static_cast<int>(W.size()) != n ||
        static_cast<int>(R.size()) != n) {
      throw InvalidInputError("A, B, W, R must all have length N");
    }
    const int nx = state_dim();
    const int nu = input_dim();
    if (nx < 1) throw InvalidInputError("state dimension must be positive");
    if (nu < 1) throw InvalidInputError("input dimension must be positive");
    for (int k = 0; k < n; ++k) {
      const std::string at = " at step " + std::to_string(k);
      if (A[k].rows() != nx || A[k].cols() != nx)
        throw InvalidInputError("A must be n_x x n_x" + at);
      if (B[k].rows() != nx || B[k].cols() != nu)
        throw InvalidInputError("B must be n_x x n_u" + at);
      if (W[k].dim() != nx) throw InvalidInputError("W must be n_x x n_x" + at);
      if (R[k].dim() != nu) throw InvalidInputError("R must be n_u x n_u" + at);
      if (!A[k].allFinite() || !B[k].allFinite() || !W[k].all_finite() ||
          !R[k].all_finite())
        throw InvalidInputError("non-finite system matrix" + at);
    }
  }

  /// Shapes plus definiteness: W_k PSD, R_k PD, Sigma0 PD.
  void validate() const {
    check_shapes();
    for (int k = 0; k < horizon(); ++k) {
      require_psd(W[k], "W_" + std::to_string(k));
      if (!(R[k].min_eigenvalue() > 0.0))
        throw InvalidInputError("R_" + std::to_string(k) + " must be positive definite");
    }
    if (!(sigma0.min_eigenvalue() > sigma0.psd_tolerance()))
      throw InvalidInputError("Sigma0 must be positive definite");
  }
};

/// Stochastic linear feedback u_k ~ N(K_k x_k, Q_k).
struct Policy {
  std::vector<Eigen::MatrixXd> K;
  std::vector<SymmetricMatrix> Q;

  int horizon() const noexcept { return static_cast<int>(K.size()); }

  static Policy zero(const SystemParams& params) {
    Policy p;
    p.K.assign(params.horizon(),
               Eigen::MatrixXd::Zero(params.input_dim(), params.state_dim()));
    p.Q.assign(params.horizon(), SymmetricMatrix::zero(params.input_dim()));
    return p;
  }
};

/// Decision variables of the lifted problem: Sigma_0..Sigma_N, and for
/// k < N the pair M_k = P_k Sigma_k^{-1} P_k^T + Q_k, P_k = K_k Sigma_k.
struct TransformedPlan {
  std::vector<SymmetricMatrix> sigma;
  std::vector<SymmetricMatrix> M;
  std::vector<Eigen::MatrixXd> P;

  int horizon() const noexcept { return static_cast<int>(M.size()); }
  const SymmetricMatrix& terminal() const { return sigma.back(); }
};

namespace detail {

inline void check_policy(const SystemParams& params, const Policy& policy) {
  if (policy.horizon() != params.horizon() ||
      static_cast<int>(policy.Q.size()) != params.horizon()) {
    throw InvalidInputError("policy length must equal the horizon N");
  }
  for (int k = 0; k < params.horizon(); ++k) {
    if (policy.K[k].rows() != params.input_dim() ||
        policy.K[k].cols() != params.state_dim())
      throw InvalidInputError("K_" + std::to_string(k) + " must be n_u x n_x");
    if (policy.Q[k].dim() != params.input_dim())
      throw InvalidInputError("Q_" + std::to_string(k) + " must be n_u x n_u");
  }
}

inline void check_lifted(const SystemParams& params,
                         const std::vector<SymmetricMatrix>& M,
                         const std::vector<Eigen::MatrixXd>& P) {
  if (static_cast<int>(M.size()) != params.horizon() ||
      static_cast<int>(P.size()) != params.horizon()) {
    throw InvalidInputError("M and P must have length N");
  }
  for (int k = 0; k < params.horizon(); ++k) {
    if (M[k].dim() != params.input_dim())
      throw InvalidInputError("M_" + std::to_string(k) + " must be n_u x n_u");
    if (P[k].rows() != params.input_dim() || P[k].cols() != params.state_dim())
      throw InvalidInputError("P_" + std::to_string(k) + " must be n_u x n_x");
  }
}

}  // namespace detail

/// Sigma_0..Sigma_N under u_k ~ N(K_k x, Q_k):
///   Sigma_{k+1} = (A + B K) Sigma_k (A + B K)^T + B Q B^T + W.
inline std::vector<SymmetricMatrix> propagate_policy(const SystemParams& params,
                                                     const Policy& policy) {
  params.check_shapes();
  detail::check_policy(params, policy);
  std::vector<SymmetricMatrix> sigma;
  sigma.reserve(params.horizon() + 1);
  sigma.push_back(params.sigma0);
  for (int k = 0; k < params.horizon(); ++k) {
    const Eigen::MatrixXd closed = params.A[k] + params.B[k] * policy.K[k];
    const Eigen::MatrixXd& s = sigma.back().matrix();
    sigma.emplace_back(closed * s * closed.transpose() +
                       params.B[k] * policy.Q[k].matrix() * params.B[k].transpose() +
                       params.W[k].matrix());
  }
  return sigma;
}

/// Sigma_0..Sigma_N in lifted coordinates:
///   Sigma_{k+1} = A S A^T + A P^T B^T + B P A^T + B M B^T + W.
inline std::vector<SymmetricMatrix> propagate_transformed(
    const SystemParams& params, const std::vector<SymmetricMatrix>& M,
    const std::vector<Eigen::MatrixXd>& P) {
  params.check_shapes();
  detail::check_lifted(params, M, P);
  std::vector<SymmetricMatrix> sigma;
  sigma.reserve(params.horizon() + 1);
  sigma.push_back(params.sigma0);
  for (int k = 0; k < params.horizon(); ++k) {
    const Eigen::MatrixXd& a = params.A[k];
    const Eigen::MatrixXd& b = params.B[k];
    const Eigen::MatrixXd cross = a * P[k].transpose() * b.transpose();
    sigma.emplace_back(a * sigma.back().matrix() * a.transpose() + cross +
                       cross.transpose() + b * M[k].matrix() * b.transpose() +
                       params.W[k].matrix());
  }
  return sigma;
}

/// Lifts a policy: P_k = K_k Sigma_k, M_k = K_k Sigma_k K_k^T + Q_k, with
/// Sigma from propagate_policy.
inline TransformedPlan lift_policy(const SystemParams& params,
                                   const Policy& policy) {
  TransformedPlan plan;
  plan.sigma = propagate_policy(params, policy);
  for (int k = 0; k < params.horizon(); ++k) {
    const Eigen::MatrixXd p = policy.K[k] * plan.sigma[k].matrix();
    plan.P.push_back(p);
    plan.M.emplace_back(p * policy.K[k].transpose() + policy.Q[k].matrix());
  }
  return plan;
}

/// The zero-control plan: M = 0, P = 0, Sigma propagated open loop.
inline TransformedPlan uncontrolled_plan(const SystemParams& params) {
  return lift_policy(params, Policy::zero(params));
}

struct RecoveryTolerances {
  double inverse = 1e-10;  // Sigma_k needs min eigenvalue > inverse * tr(Sigma_k)
  double psd = 1e-7;       // Q_k may dip to -psd * (1 + ||M_k||_F) before it is an error
};

/// Inverts the lifting: K_k = P_k Sigma_k^{-1}, Q_k = M_k - P_k Sigma_k^{-1} P_k^T
/// projected onto the PSD cone. Singular Sigma_k raises
/// SingularCovarianceError; no pseudo-inverse is attempted.
inline Policy recover_policy(const TransformedPlan& plan,
                             const RecoveryTolerances& tol = {}) {
  const int n = plan.horizon();
  if (static_cast<int>(plan.P.size()) != n ||
      static_cast<int>(plan.sigma.size()) < n) {
    throw InvalidInputError("plan sequences have inconsistent lengths");
  }
  Policy policy;
  for (int k = 0; k < n; ++k) {
    const SymmetricMatrix& s = plan.sigma[k];
    const double floor = tol.inverse * std::abs(s.trace());
    if (!(s.min_eigenvalue() > floor)) {
      throw SingularCovarianceError("Sigma_" + std::to_string(k) +
                                    " is singular; cannot recover K_k");
    }
    const Eigen::LLT<Eigen::MatrixXd> llt(s.matrix());
    const Eigen::MatrixXd k_gain =
        llt.solve(plan.P[k].transpose()).transpose();  // P S^{-1}, S symmetric
    const SymmetricMatrix q(plan.M[k].matrix() - k_gain * plan.P[k].transpose());
    policy.K.push_back(k_gain);
    policy.Q.push_back(clip_to_psd(
        q, tol.psd * (1.0 + plan.M[k].frobenius_norm()), "Q_" + std::to_string(k)));
  }
  return policy;
}

/// Unweighted control energy sum_k tr(R_k M_k) = E[sum_k u_k^T R_k u_k].
inline double control_energy(const SystemParams& params,
                             const std::vector<SymmetricMatrix>& M) {
  if (static_cast<int>(M.size()) != params.horizon()) {
    throw InvalidInputError("M must have length N");
  }
  double total = 0.0;
  for (int k = 0; k < params.horizon(); ++k) {
    if (M[k].dim() != params.R[k].dim())
      throw InvalidInputError("M_" + std::to_string(k) + " must be n_u x n_u");
    total += frobenius_inner(params.R[k], M[k]);
  }
  return total;
}

/// Counter-based generator: output i of stream (seed, stream) is a SplitMix64
/// hash of (key, i), so any sample path can be regenerated on its own.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  CounterRng(std::uint64_t seed, std::uint64_t stream)
      : key_(mix(mix(seed) ^ (stream * 0xd1b54a32d192ed03ULL + 1))) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  result_type operator()() {
    return mix(key_ + (++counter_) * 0x9e3779b97f4a7c15ULL);
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Monte Carlo sample paths, states stored as (sample, step, component).
struct RolloutBatch {
  int n_samples = 0;
  int horizon = 0;
  int state_dim = 0;
  int input_dim = 0;
  std::uint64_t seed = 0;
  bool deterministic_policy = false;
  std::vector<double> states;    // n_samples * (horizon + 1) * state_dim
  std::vector<double> controls;  // n_samples * horizon * input_dim

  Eigen::Map<const Eigen::VectorXd> state(int sample, int k) const {
    return {states.data() + (static_cast<std::size_t>(sample) * (horizon + 1) + k) * state_dim,
            state_dim};
  }
  Eigen::Map<const Eigen::VectorXd> control(int sample, int k) const {
    return {controls.data() + (static_cast<std::size_t>(sample) * horizon + k) * input_dim,
            input_dim};
  }
};

namespace detail {

// Factor L with L L^T = S, from the spectrum with negative eigenvalues clipped.
inline Eigen::MatrixXd sampling_factor(const SymmetricMatrix& s) {
  if (s.dim() == 0) return {};
  const Spectrum sp = sorted_eigendecomposition(s);
  return sp.vectors * sp.values.cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

inline Eigen::VectorXd standard_normal(CounterRng& rng, int n) {
  std::normal_distribution<double> normal;
  Eigen::VectorXd z(n);
  for (int i = 0; i < n; ++i) z(i) = normal(rng);
  return z;
}

}  // namespace detail

/// Samples x_0 ~ N(0, Sigma0), u_k ~ N(K_k x_k, Q_k), w_k ~ N(0, W_k). Draws
/// for (sample s, step k) come from stream s * (N + 1) + k, so results do not
/// depend on evaluation order.
inline RolloutBatch rollout(const SystemParams& params, const Policy& policy,
                            int n_samples, std::uint64_t seed) {
  params.check_shapes();
  detail::check_policy(params, policy);
  if (n_samples < 1) throw InvalidInputError("n_samples must be positive");
  const int n = params.horizon();
  const int nx = params.state_dim();
  const int nu = params.input_dim();

  RolloutBatch batch;
  batch.n_samples = n_samples;
  batch.horizon = n;
  batch.state_dim = nx;
  batch.input_dim = nu;
  batch.seed = seed;
  batch.deterministic_policy = true;
  for (const auto& q : policy.Q) {
    if (q.frobenius_norm() > 0.0) batch.deterministic_policy = false;
  }
  batch.states.resize(static_cast<std::size_t>(n_samples) * (n + 1) * nx);
  batch.controls.resize(static_cast<std::size_t>(n_samples) * n * nu);

  const Eigen::MatrixXd l0 = detail::sampling_factor(params.sigma0);
  std::vector<Eigen::MatrixXd> lw, lq;
  for (int k = 0; k < n; ++k) {
    lw.push_back(detail::sampling_factor(params.W[k]));
    lq.push_back(detail::sampling_factor(policy.Q[k]));
  }

  for (int s = 0; s < n_samples; ++s) {
    const std::uint64_t base = static_cast<std::uint64_t>(s) * (n + 1);
    double* xs = batch.states.data() + static_cast<std::size_t>(s) * (n + 1) * nx;
    double* us = batch.controls.data() + static_cast<std::size_t>(s) * n * nu;
    CounterRng rng0(seed, base);
    Eigen::VectorXd x = l0 * detail::standard_normal(rng0, nx);
    Eigen::Map<Eigen::VectorXd>(xs, nx) = x;
    for (int k = 0; k < n; ++k) {
      CounterRng rng(seed, base + k + 1);
      const Eigen::VectorXd u =
          policy.K[k] * x + lq[k] * detail::standard_normal(rng, nu);
      const Eigen::VectorXd w = lw[k] * detail::standard_normal(rng, nx);
      x = params.A[k] * x + params.B[k] * u + w;
      Eigen::Map<Eigen::VectorXd>(us + static_cast<std::size_t>(k) * nu, nu) = u;
      Eigen::Map<Eigen::VectorXd>(xs + static_cast<std::size_t>(k + 1) * nx, nx) = x;
    }
  }
  return batch;
}

/// Unbiased sample covariance of the states at step k.
inline SymmetricMatrix empirical_covariance(const RolloutBatch& batch, int k) {
  if (k < 0 || k > batch.horizon) {
    throw InvalidInputError("time index " + std::to_string(k) + " outside [0, N]");
  }
  if (batch.n_samples < 2) {
    throw InvalidInputError("sample covariance needs at least two samples");
  }
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(batch.state_dim);
  for (int s = 0; s < batch.n_samples; ++s) mean += batch.state(s, k);
  mean /= batch.n_samples;
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(batch.state_dim, batch.state_dim);
  for (int s = 0; s < batch.n_samples; ++s) {
    const Eigen::VectorXd d = batch.state(s, k) - mean;
    cov.noalias() += d * d.transpose();
  }
  return SymmetricMatrix(cov / (batch.n_samples - 1));
}

}  // namespace gwsteer
