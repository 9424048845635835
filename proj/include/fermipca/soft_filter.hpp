// Copyright 2026 The fermipca Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "fermipca/covariance_model.hpp"
#include "fermipca/errors.hpp"
#include "fermipca/numeric.hpp"

namespace fermipca {

/// A filter diagonal in a model's eigenbasis, stored as occupations m_j.
struct SoftFilter {
  RVector occupations;
  /// T; zero for hard projectors.
  double temperature = 0.0;
  /// mu (or mu_eff for fixed-variance filters).
  double chemical_potential = 0.0;
  std::uint64_t model_hash = 0;

  double trace() const { return occupations.sum(); }
};

/// Fermi-Dirac occupations 1 / (1 + exp((mu - lambda_j) / T)).
inline RVector fermi_dirac_occupations(const RVector& eigenvalues, double temperature, double mu) {
  RVector m(eigenvalues.size());
  for (Eigen::Index j = 0; j < eigenvalues.size(); ++j) {
    m(j) = numeric::logistic((eigenvalues(j) - mu) / temperature);
  }
  return m;
}

inline SoftFilter fermi_dirac_filter(const CovarianceModel& model, double temperature, double mu) {
  detail::require(temperature > 0.0, "temperature must be positive");
  return {fermi_dirac_occupations(model.eigenvalues(), temperature, mu), temperature, mu,
          model.fingerprint()};
}

// ---------------------------------------------------------------------------
// Scalar dual of the trace-constrained problem.

/// Phi_T(mu) = mu k + T sum_j log(1 + exp((lambda_j - mu) / T)).
inline double dual_objective(const RVector& eigenvalues, double temperature, double mu, double k) {
  double acc = 0.0;
  for (Eigen::Index j = 0; j < eigenvalues.size(); ++j) {
    acc += numeric::log1p_exp((eigenvalues(j) - mu) / temperature);
  }
  return mu * k + temperature * acc;
}

/// Phi_T'(mu) = k - Tr(M_{T,mu}).
inline double dual_gradient(const RVector& eigenvalues, double temperature, double mu, double k) {
  return k - fermi_dirac_occupations(eigenvalues, temperature, mu).sum();
}

/// Phi_T''(mu) = (1/T) sum_j m_j (1 - m_j).
inline double dual_hessian(const RVector& eigenvalues, double temperature, double mu) {
  double acc = 0.0;
  for (Eigen::Index j = 0; j < eigenvalues.size(); ++j) {
    const double m = numeric::logistic((eigenvalues(j) - mu) / temperature);
    acc += m * (1.0 - m);
  }
  return acc / temperature;
}

inline double dual_objective(const CovarianceModel& model, double temperature, double mu, int k) {
  return dual_objective(model.eigenvalues(), temperature, mu, k);
}
inline double dual_gradient(const CovarianceModel& model, double temperature, double mu, int k) {
  return dual_gradient(model.eigenvalues(), temperature, mu, k);
}
inline double dual_hessian(const CovarianceModel& model, double temperature, double mu) {
  return dual_hessian(model.eigenvalues(), temperature, mu);
}

enum class DualMethod { bisection, gradient_descent, newton };

inline std::string to_string(DualMethod m) {
  switch (m) {
    case DualMethod::bisection: return "bisection";
    case DualMethod::gradient_descent: return "gradient_descent";
    case DualMethod::newton: return "newton";
  }
  return "unknown";
}

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
  bool contains(double x) const { return lower <= x && x <= upper; }
  double width() const { return upper - lower; }
  double project(double x) const { return std::clamp(x, lower, upper); }
};

struct DualSolveReport {
  double mu_star = 0.0;
  int iterations = 0;
  /// |k - Tr(M_{T,mu_star})|.
  double final_gradient = 0.0;
  DualMethod method = DualMethod::bisection;
  Interval bracket;
  bool converged = false;
  /// Iterates mu_0, mu_1, ... (bisection records midpoints).
  std::vector<double> trajectory;
};

/// I_T = [lambda_d + T log((d-k)/k), lambda_1 + T log((d-k)/k)], which
/// contains the root of the trace equation.
inline Interval dual_bracket(const RVector& eigenvalues, double temperature, int k) {
  const auto d = static_cast<double>(eigenvalues.size());
  const double shift = temperature * std::log((d - k) / k);
  return {eigenvalues(eigenvalues.size() - 1) + shift, eigenvalues(0) + shift};
}

/// Iteration cap for projected gradient descent: ten times the sufficient
/// count N >= d (lambda_1 - lambda_d)^2 / (8 T eps), with the objective
/// accuracy eps = tol^2 / (2 L_T) that guarantees |gradient| <= tol.
inline long gradient_descent_cap(const RVector& eigenvalues, double temperature, double tol) {
  const auto d = static_cast<double>(eigenvalues.size());
  const double spread = eigenvalues(0) - eigenvalues(eigenvalues.size() - 1);
  const double lipschitz = d / (4.0 * temperature);
  const double eps = tol * tol / (2.0 * lipschitz);
  const double n = d * spread * spread / (8.0 * temperature * eps);
  const double cap = 10.0 * std::ceil(n);
  return static_cast<long>(std::clamp(cap, 1000.0, 5.0e6));
}

inline constexpr int kNewtonCap = 200;
inline constexpr int kBisectionCap = 400;

namespace detail {

inline DualSolveReport solve_bisection(const RVector& ev, double t, int k, double tol,
                                       Interval bracket) {
  DualSolveReport r;
  r.method = DualMethod::bisection;
  r.bracket = bracket;
  double lo = bracket.lower;
  double hi = bracket.upper;
  // g(mu) = k - Tr M is increasing in mu: g(lo) <= 0 <= g(hi).
  double mid = 0.5 * (lo + hi);
  double g = dual_gradient(ev, t, mid, k);
  r.trajectory.push_back(mid);
  while (std::abs(g) > tol && r.iterations < kBisectionCap) {
    if (g > 0.0) {
      hi = mid;
    } else {
      lo = mid;
    }
    const double next = 0.5 * (lo + hi);
    ++r.iterations;
    if (next == mid || next <= lo || next >= hi) break;  // interval exhausted
    mid = next;
    g = dual_gradient(ev, t, mid, k);
    r.trajectory.push_back(mid);
  }
  r.mu_star = mid;
  r.final_gradient = std::abs(g);
  r.converged = r.final_gradient <= tol;
  return r;
}

inline DualSolveReport solve_gradient_descent(const RVector& ev, double t, int k, double tol,
                                              Interval bracket, double mu0) {
  DualSolveReport r;
  r.method = DualMethod::gradient_descent;
  r.bracket = bracket;
  const double step = 4.0 * t / static_cast<double>(ev.size());
  const long cap = gradient_descent_cap(ev, t, tol);
  double mu = bracket.project(mu0);
  double g = dual_gradient(ev, t, mu, k);
  r.trajectory.push_back(mu);
  while (std::abs(g) > tol && r.iterations < cap) {
    mu = bracket.project(mu - step * g);
    g = dual_gradient(ev, t, mu, k);
    ++r.iterations;
    if (r.trajectory.size() < 10000) r.trajectory.push_back(mu);
  }
  r.mu_star = mu;
  r.final_gradient = std::abs(g);
  r.converged = r.final_gradient <= tol;
  return r;
}

/// Projected Newton on I_T. A sign bracket [a, b] around the root is kept
/// from the gradient signs seen so far; a step landing outside it is
/// replaced by the bracket midpoint.
inline DualSolveReport solve_newton(const RVector& ev, double t, int k, double tol,
                                    Interval bracket, double mu0) {
  DualSolveReport r;
  r.method = DualMethod::newton;
  r.bracket = bracket;
  double a = bracket.lower;
  double b = bracket.upper;
  double mu = bracket.project(mu0);
  double g = dual_gradient(ev, t, mu, k);
  r.trajectory.push_back(mu);
  while (std::abs(g) > tol && r.iterations < kNewtonCap) {
    if (g > 0.0) {
      b = std::min(b, mu);
    } else {
      a = std::max(a, mu);
    }
    const double h = dual_hessian(ev, t, mu);
    double next = (h > 0.0 && std::isfinite(h)) ? bracket.project(mu - g / h)
                                                : (g > 0.0 ? bracket.lower : bracket.upper);
    if (!(next > a && next < b)) next = 0.5 * (a + b);
    ++r.iterations;
    if (next == mu) break;
    mu = next;
    g = dual_gradient(ev, t, mu, k);
    r.trajectory.push_back(mu);
  }
  r.mu_star = mu;
  r.final_gradient = std::abs(g);
  r.converged = r.final_gradient <= tol;
  return r;
}

}  // namespace detail

/// Solves Tr(M_{T,mu}) = k for mu on the bracket I_T.
///
/// Bisection always terminates with the best representable midpoint; gradient
/// descent and Newton report `converged = false` when their cap is reached.
/// `mu0` overrides the starting point of the iterative methods (default: the
/// bracket midpoint).
inline DualSolveReport solve_mu(const RVector& eigenvalues, double temperature, int k,
                                DualMethod method = DualMethod::bisection, double tol = 1e-12,
                                std::optional<double> mu0 = std::nullopt) {
  const auto d = static_cast<int>(eigenvalues.size());
  if (k < 1 || k > d - 1) {
    throw ValidationError("trace budget k must lie in 1..d-1 (got " + std::to_string(k) + ")");
  }
  detail::require(temperature > 0.0, "temperature must be positive");
  detail::require(tol > 0.0, "solver tolerance must be positive");
  const Interval bracket = dual_bracket(eigenvalues, temperature, k);
  const double start = mu0.value_or(0.5 * (bracket.lower + bracket.upper));
  switch (method) {
    case DualMethod::bisection: return detail::solve_bisection(eigenvalues, temperature, k, tol, bracket);
    case DualMethod::gradient_descent:
      return detail::solve_gradient_descent(eigenvalues, temperature, k, tol, bracket, start);
    case DualMethod::newton:
      return detail::solve_newton(eigenvalues, temperature, k, tol, bracket, start);
  }
  throw ValidationError("unknown dual method");
}

inline DualSolveReport solve_mu(const CovarianceModel& model, double temperature, int k,
                                DualMethod method = DualMethod::bisection, double tol = 1e-12,
                                std::optional<double> mu0 = std::nullopt) {
  return solve_mu(model.eigenvalues(), temperature, k, method, tol, mu0);
}

/// Optimal soft filter M*_{T,k} for trace budget k.
inline SoftFilter optimal_soft_filter(const CovarianceModel& model, double temperature, int k,
                                      double tol = 1e-12) {
  const DualSolveReport r = solve_mu(model, temperature, k, DualMethod::bisection, tol);
  return fermi_dirac_filter(model, temperature, r.mu_star);
}

// ---------------------------------------------------------------------------
// Hard PCA reference.

inline void require_rank(const CovarianceModel& model, int k) {
  if (k < 1 || k > model.dimension() - 1) {
    throw ValidationError("rank k must lie in 1..d-1 (got " + std::to_string(k) + ")");
  }
}

/// Rank-k projector onto the top eigenspace, by sorted (stable) order.
inline SoftFilter hard_projector(const CovarianceModel& model, int k) {
  require_rank(model, k);
  SoftFilter f;
  f.occupations = RVector::Zero(model.dimension());
  f.occupations.head(k).setOnes();
  f.temperature = 0.0;
  f.chemical_potential = 0.5 * (model.eigenvalue(k - 1) + model.eigenvalue(k));
  f.model_hash = model.fingerprint();
  return f;
}

/// v_hard = sum of the k largest eigenvalues.
inline double hard_value(const CovarianceModel& model, int k) {
  require_rank(model, k);
  return model.eigenvalues().head(k).sum();
}

// ---------------------------------------------------------------------------
// Entropy and approximation diagnostics.

/// Fermi-Dirac entropy sum_j h(m_j).
inline double fd_entropy(const RVector& occupations) {
  double s = 0.0;
  for (Eigen::Index j = 0; j < occupations.size(); ++j) s += numeric::binary_entropy(occupations(j));
  return s;
}

inline double fd_entropy(const SoftFilter& filter) { return fd_entropy(filter.occupations); }

/// Retained variance Tr(C M) = sum_j lambda_j m_j.
inline double filter_value(const CovarianceModel& model, const RVector& occupations) {
  return model.eigenvalues().dot(occupations);
}

struct SoftHardGap {
  double gap = 0.0;    ///< v_hard - Tr(C M*)
  double bound = 0.0;  ///< T d h(k/d)
  bool holds() const { return gap >= -1e-10 && gap <= bound + 1e-12; }
};

inline SoftHardGap soft_hard_gap_check(const CovarianceModel& model, double temperature, int k) {
  const SoftFilter m = optimal_soft_filter(model, temperature, k);
  const auto d = static_cast<double>(model.dimension());
  return {hard_value(model, k) - filter_value(model, m.occupations),
          temperature * d * numeric::binary_entropy(k / d)};
}

struct OperatorGap {
  double epsilon = 0.0;  ///< max_j |m_j - [j <= k]|
  double bound = 0.0;    ///< exp(-g / T)
  double local_gap = 0.0;
  bool holds() const { return epsilon <= bound * (1.0 + 1e-12); }
};

/// Operator-norm distance from M*_{T,k} to P_k, with its low-temperature
/// bound. Empty when lambda_k > mu* > lambda_{k+1} fails.
inline std::optional<OperatorGap> operator_gap_to_hard(const CovarianceModel& model,
                                                       double temperature, int k) {
  require_rank(model, k);
  const DualSolveReport r = solve_mu(model, temperature, k);
  const double upper = model.eigenvalue(k - 1);
  const double lower = model.eigenvalue(k);
  if (!(upper > r.mu_star && r.mu_star > lower)) return std::nullopt;
  OperatorGap out;
  // 1 - m_j is evaluated as the complementary logistic so that deviations
  // below the spacing of doubles near 1 are not rounded away.
  for (Eigen::Index j = 0; j < model.dimension(); ++j) {
    const double x = (model.eigenvalue(j) - r.mu_star) / temperature;
    out.epsilon = std::max(out.epsilon, numeric::logistic(j < k ? -x : x));
  }
  out.local_gap = std::min(upper - r.mu_star, r.mu_star - lower);
  out.bound = std::exp(-out.local_gap / temperature);
  return out;
}

// ---------------------------------------------------------------------------
// Soft spectral resolution.

/// D_k = M_k - M_{k-1} for a nested ladder M_1 <= ... <= M_{d-1}, with
/// M_0 = 0 and M_d = 1. Returns d occupation-difference vectors.
inline std::vector<RVector> resolution_from_ladder(const std::vector<RVector>& ladder,
                                                   Eigen::Index d) {
  detail::require(static_cast<Eigen::Index>(ladder.size()) == d - 1,
                  "a full ladder of d-1 nested filters is required");
  std::vector<RVector> out;
  out.reserve(static_cast<std::size_t>(d));
  RVector prev = RVector::Zero(d);
  for (const auto& m : ladder) {
    detail::require(m.size() == d, "ladder filter dimension mismatch");
    out.push_back(m - prev);
    prev = m;
  }
  out.push_back(RVector::Ones(d) - prev);
  return out;
}

/// D_{T,k} from chemical potentials mu_1 > mu_2 > ... > mu_{d-1}.
inline std::vector<RVector> soft_components(const CovarianceModel& model,
                                            const std::vector<double>& mu_ladder,
                                            double temperature) {
  detail::require(temperature > 0.0, "temperature must be positive");
  for (std::size_t i = 1; i < mu_ladder.size(); ++i) {
    if (!(mu_ladder[i] < mu_ladder[i - 1])) {
      throw ValidationError("threshold ladder must be strictly decreasing in k");
    }
  }
  std::vector<RVector> ladder;
  ladder.reserve(mu_ladder.size());
  for (double mu : mu_ladder) ladder.push_back(fermi_dirac_occupations(model.eigenvalues(), temperature, mu));
  return resolution_from_ladder(ladder, model.dimension());
}

/// Exact chemical-potential ladder mu*_1 > ... > mu*_{d-1}.
inline std::vector<double> exact_mu_ladder(const CovarianceModel& model, double temperature,
                                           double tol = 1e-12) {
  std::vector<double> out;
  for (int k = 1; k < model.dimension(); ++k) out.push_back(solve_mu(model, temperature, k, DualMethod::bisection, tol).mu_star);
  return out;
}

// ---------------------------------------------------------------------------
// Reconstruction error.

/// E(M) = Tr(C) - 2 Tr(CM) + Tr(CM^2) = sum_j lambda_j (1 - m_j)^2.
inline double reconstruction_error(const CovarianceModel& model, const RVector& occupations) {
  detail::require(occupations.size() == model.dimension(), "filter dimension mismatch");
  double e = 0.0;
  for (Eigen::Index j = 0; j < occupations.size(); ++j) {
    const double r = 1.0 - occupations(j);
    e += model.eigenvalue(j) * r * r;
  }
  return e;
}

inline double reconstruction_error(const CovarianceModel& model, const SoftFilter& filter) {
  return reconstruction_error(model, filter.occupations);
}

// ---------------------------------------------------------------------------
// Fixed-variance family.

struct FixedVarianceFilter {
  RVector occupations;
  double lambda_multiplier = 0.0;
  double entropy_scale = 0.0;
  /// 1 / lambda and T' / lambda, populated when lambda > 0.
  std::optional<double> effective_mu;
  std::optional<double> effective_temperature;
};

/// m_j = 1 / (1 + exp((1 - lambda lambda_j) / T')).
inline RVector fixed_variance_occupations(const RVector& eigenvalues, double t_prime,
                                          double lambda) {
  RVector m(eigenvalues.size());
  for (Eigen::Index j = 0; j < eigenvalues.size(); ++j) {
    m(j) = numeric::logistic((lambda * eigenvalues(j) - 1.0) / t_prime);
  }
  return m;
}

inline FixedVarianceFilter fixed_variance_filter(const CovarianceModel& model, double t_prime,
                                                 double lambda) {
  detail::require(t_prime > 0.0, "entropy scale T' must be positive");
  FixedVarianceFilter f;
  f.occupations = fixed_variance_occupations(model.eigenvalues(), t_prime, lambda);
  f.lambda_multiplier = lambda;
  f.entropy_scale = t_prime;
  if (lambda > 0.0) {
    f.effective_mu = 1.0 / lambda;
    f.effective_temperature = t_prime / lambda;
  }
  return f;
}

struct RetainedVariance {
  double absolute = 0.0;    ///< Tr(C M)
  double normalized = 0.0;  ///< Tr(rho_C M)
};

inline RetainedVariance retained_variance(const CovarianceModel& model, const RVector& occupations) {
  detail::require(occupations.size() == model.dimension(), "filter dimension mismatch");
  const double abs = filter_value(model, occupations);
  const double v = model.total_variance();
  return {abs, v > 0.0 ? abs / v : std::numeric_limits<double>::quiet_NaN()};
}

}  // namespace fermipca
