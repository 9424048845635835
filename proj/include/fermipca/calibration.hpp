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
#include <atomic>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "fermipca/covariance_model.hpp"
#include "fermipca/errors.hpp"
#include "fermipca/numeric.hpp"
#include "fermipca/rng.hpp"
#include "fermipca/soft_filter.hpp"
#include "fermipca/thermal_measurement.hpp"

namespace fermipca {

/// Sorted position samples. F(beta) counts samples <= beta, G(beta) counts
/// samples > beta; both are right-continuous step functions.
class EmpiricalCDF {
 public:
  explicit EmpiricalCDF(std::vector<double> samples) : sorted_(std::move(samples)) {
    detail::require(!sorted_.empty(), "empirical CDF needs at least one sample");
    for (double q : sorted_) detail::require(std::isfinite(q), "position samples must be finite");
    std::sort(sorted_.begin(), sorted_.end());
  }

  std::size_t count() const { return sorted_.size(); }
  const std::vector<double>& sorted_samples() const { return sorted_; }

  double cdf(double beta) const {
    const auto it = std::upper_bound(sorted_.begin(), sorted_.end(), beta);
    return static_cast<double>(it - sorted_.begin()) / static_cast<double>(count());
  }

  double tail(double beta) const { return 1.0 - cdf(beta); }

  /// r-th order statistic, 1-based.
  double order_statistic(std::size_t r) const { return sorted_.at(r - 1); }

  /// Largest sample strictly below x, if any.
  std::optional<double> value_below(double x) const {
    const auto it = std::lower_bound(sorted_.begin(), sorted_.end(), x);
    if (it == sorted_.begin()) return std::nullopt;
    return *std::prev(it);
  }

 private:
  std::vector<double> sorted_;
};

struct ThresholdSource {
  enum class Type { empirical, exact };
  Type type = Type::exact;
  std::size_t samples = 0;
  std::uint64_t seed = 0;

  static ThresholdSource exact() { return {}; }
  static ThresholdSource empirical(std::size_t s, std::uint64_t seed) { return {Type::empirical, s, seed}; }
};

/// Rank-indexed thresholds beta_k, strictly decreasing in k.
struct RankThresholds {
  std::map<int, double> thresholds;
  ThresholdSource source;
  MeasurementConfig config;
  std::vector<std::string> warnings;

  /// Ladder beta_1 > ... > beta_{d-1}; requires every k to be present.
  std::vector<double> ladder(Eigen::Index d) const {
    std::vector<double> out;
    for (int k = 1; k < d; ++k) {
      const auto it = thresholds.find(k);
      if (it == thresholds.end()) {
        throw ValidationError("threshold for k=" + std::to_string(k) + " is missing from the ladder");
      }
      out.push_back(it->second);
    }
    return out;
  }
};

/// Variance-indexed thresholds beta_theta, strictly decreasing in theta.
struct VarianceThresholds {
  std::map<double, double> thresholds;
  ThresholdSource source;
  MeasurementConfig config;
  std::vector<std::string> warnings;
};

namespace detail {

/// Smallest r with r / S >= fraction, for fraction in (0, 1].
inline std::size_t quantile_rank(std::size_t s, double fraction) {
  const double x = static_cast<double>(s) * fraction;
  const double nearest = std::round(x);
  const double r = std::abs(x - nearest) <= 1e-9 * std::max(1.0, x) ? nearest : std::ceil(x);
  return std::clamp<std::size_t>(static_cast<std::size_t>(r), 1, s);
}

/// Enforces a strictly decreasing ladder (in key order) by moving a tied
/// threshold to the next distinct sample below its predecessor.
template <class Key>
void repair_monotone(std::map<Key, double>& ladder, const EmpiricalCDF& cdf,
                     std::vector<std::string>& warnings, const std::string& label) {
  std::optional<double> prev;
  for (auto& [key, beta] : ladder) {
    if (prev && !(beta < *prev)) {
      if (const auto below = cdf.value_below(*prev)) {
        warnings.push_back("non-decreasing empirical threshold at " + label + "=" + std::to_string(key) +
                           " nudged to the next lower sample");
        beta = *below;
      } else {
        warnings.push_back("empirical threshold at " + label + "=" + std::to_string(key) +
                           " ties its predecessor and no lower sample exists");
      }
    }
    prev = beta;
  }
}

}  // namespace detail

/// Rank calibration from empirical quantiles:
/// beta_k = inf{beta : F(beta) >= 1 - k/d}, the ceil(S (1 - k/d))-th order
/// statistic.
inline RankThresholds calibrate_ranks(const EmpiricalCDF& samples, Eigen::Index d,
                                      const std::vector<int>& requested_ks,
                                      const MeasurementConfig& config = {},
                                      ThresholdSource source = ThresholdSource::empirical(0, 0)) {
  detail::require(d >= 2, "dimension must be at least 2");
  RankThresholds out;
  out.config = config;
  out.source = source;
  out.source.type = ThresholdSource::Type::empirical;
  out.source.samples = samples.count();
  const std::size_t s = samples.count();
  if (s < static_cast<std::size_t>(d)) {
    out.warnings.push_back("only " + std::to_string(s) + " samples for d=" + std::to_string(d) +
                           "; quantiles cannot resolve 1/d steps");
  }
  for (int k : requested_ks) {
    if (k < 1 || k > d - 1) throw ValidationError("requested rank k=" + std::to_string(k) + " outside 1..d-1");
    // integer form of ceil(S (d - k) / d)
    const std::size_t num = s * static_cast<std::size_t>(d - k);
    const std::size_t r = std::max<std::size_t>(1, (num + static_cast<std::size_t>(d) - 1) / static_cast<std::size_t>(d));
    out.thresholds[k] = samples.order_statistic(r);
  }
  detail::repair_monotone(out.thresholds, samples, out.warnings, "k");
  return out;
}

/// Population thresholds beta*_k = mu*_k / T2 + delta.
inline RankThresholds calibrate_exact_ranks(const CovarianceModel& model, const MeasurementConfig& config,
                                            const std::vector<int>& requested_ks, double tol = 1e-12) {
  config.validate();
  RankThresholds out;
  out.config = config;
  out.source = ThresholdSource::exact();
  for (int k : requested_ks) {
    const DualSolveReport r = solve_mu(model, config.effective_temperature(), k, DualMethod::bisection, tol);
    out.thresholds[k] = config.threshold_for_mu(r.mu_star);
  }
  std::optional<double> prev;
  for (const auto& [k, beta] : out.thresholds) {
    if (prev && !(beta < *prev)) {
      throw NumericError("exact rank thresholds are not strictly decreasing at k=" + std::to_string(k));
    }
    prev = beta;
  }
  return out;
}

/// Retained-variance calibration from the covariance-probe tail:
/// beta_theta = inf{beta : G(beta) <= theta}, the ceil(S (1 - theta))-th
/// order statistic.
inline VarianceThresholds calibrate_variance(const EmpiricalCDF& samples, const std::vector<double>& thetas,
                                             const MeasurementConfig& config = {},
                                             ThresholdSource source = ThresholdSource::empirical(0, 0)) {
  VarianceThresholds out;
  out.config = config;
  out.source = source;
  out.source.type = ThresholdSource::Type::empirical;
  out.source.samples = samples.count();
  for (double theta : thetas) {
    detail::require(theta > 0.0 && theta < 1.0, "retained-variance level must lie in (0, 1)");
    out.thresholds[theta] = samples.order_statistic(detail::quantile_rank(samples.count(), 1.0 - theta));
  }
  detail::repair_monotone(out.thresholds, samples, out.warnings, "theta");
  return out;
}

/// Chemical potential mu with Tr(rho_C M_{T,mu}) = theta.
inline double solve_variance_mu(const CovarianceModel& model, double temperature, double theta,
                                double tol = 1e-13) {
  detail::require(theta > 0.0 && theta < 1.0, "retained-variance level must lie in (0, 1)");
  detail::require(temperature > 0.0, "temperature must be positive");
  const RVector w = covariance_probe_weights(model);
  const RVector& ev = model.eigenvalues();
  auto excess = [&](double mu) {  // decreasing in mu
    return w.dot(fermi_dirac_occupations(ev, temperature, mu)) - theta;
  };
  const double span = std::max(ev(0) - ev(ev.size() - 1), temperature);
  double lo = ev(ev.size() - 1) - span;
  double hi = ev(0) + span;
  for (int i = 0; excess(lo) < 0.0; ++i) {
    if (i > 200) throw NumericError("could not bracket the retained-variance root from below");
    lo -= (hi - lo);
  }
  for (int i = 0; excess(hi) > 0.0; ++i) {
    if (i > 200) throw NumericError("could not bracket the retained-variance root from above");
    hi += (hi - lo);
  }
  double mid = 0.5 * (lo + hi);
  for (int i = 0; i < 400; ++i) {
    const double e = excess(mid);
    if (std::abs(e) <= tol) break;
    if (e > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
    const double next = 0.5 * (lo + hi);
    if (next == mid) break;
    mid = next;
  }
  return mid;
}

/// Population variance thresholds: G_C(beta_theta) = theta.
inline VarianceThresholds calibrate_exact_variance(const CovarianceModel& model, const MeasurementConfig& config,
                                                   const std::vector<double>& thetas, double tol = 1e-13) {
  config.validate();
  VarianceThresholds out;
  out.config = config;
  out.source = ThresholdSource::exact();
  for (double theta : thetas) {
    out.thresholds[theta] = config.threshold_for_mu(solve_variance_mu(model, config.effective_temperature(), theta, tol));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sample-size planning.

struct AllRankTask {};
struct FixedRankTask {
  int rank = 1;
};
struct FractionalTask {};
struct VarianceProfileTask {};
struct FixedVarianceTask {
  double theta = 0.5;
  double t_prime = 1.0;
  /// Width of the lambda bisection bracket.
  double bracket_width = 1.0;
};

using PlanTask = std::variant<AllRankTask, FixedRankTask, FractionalTask, VarianceProfileTask, FixedVarianceTask>;

struct SampleBudget {
  double eta = 0.1;
  double delta_fail = 0.05;
  Eigen::Index d = 2;
  PlanTask task = AllRankTask{};

  void validate() const {
    detail::require(eta > 0.0, "target accuracy eta must be positive");
    detail::require(delta_fail > 0.0 && delta_fail < 1.0, "failure probability must lie in (0, 1)");
    detail::require(d >= 2, "dimension must be at least 2");
  }
};

struct SamplePlan {
  /// Samples (per bisection step for the fixed-variance task).
  std::uint64_t samples = 0;
  /// Bisection steps; 1 for single-scan tasks.
  std::uint64_t steps = 1;
  std::uint64_t total() const { return samples * steps; }
};

/// Sufficient sample counts from the DKW, Bernstein and Hoeffding bounds.
inline SamplePlan plan_samples(const SampleBudget& b) {
  b.validate();
  const double log_term = std::log(2.0 / b.delta_fail);
  const double eta2 = b.eta * b.eta;
  const auto d = static_cast<double>(b.d);
  auto ceil_count = [](double x) { return static_cast<std::uint64_t>(std::ceil(x)); };
  return std::visit(
      [&](const auto& task) -> SamplePlan {
        using T = std::decay_t<decltype(task)>;
        if constexpr (std::is_same_v<T, AllRankTask>) {
          return {ceil_count(d * d / (2.0 * eta2) * log_term), 1};
        } else if constexpr (std::is_same_v<T, FixedRankTask>) {
          const double k = task.rank;
          detail::require(task.rank >= 1 && task.rank <= b.d - 1, "fixed rank K must lie in 1..d-1");
          return {ceil_count((2.0 * k * (d - k) / eta2 + 2.0 * d / (3.0 * b.eta)) * log_term), 1};
        } else if constexpr (std::is_same_v<T, FractionalTask> || std::is_same_v<T, VarianceProfileTask>) {
          return {ceil_count(log_term / (2.0 * eta2)), 1};
        } else {
          detail::require(task.bracket_width > 0.0, "bisection bracket width must be positive");
          const double steps = std::max(1.0, std::ceil(std::log2(task.bracket_width / b.eta)));
          return {ceil_count(std::log(2.0 * steps / b.delta_fail) / (2.0 * eta2)),
                  static_cast<std::uint64_t>(steps)};
        }
      },
      b.task);
}

/// Expected raw centered-LCU attempts per successful covariance-probe sample.
inline double raw_attempt_factor(const CovarianceModel& model) {
  detail::require(model.total_variance() > 0.0, "total variance must be positive");
  return 4.0 / model.total_variance();
}

// ---------------------------------------------------------------------------
// Low-temperature explained-variance limit.

/// Minimum-trace filter retaining fraction theta of the variance:
/// occupations (1, ..., 1, a_theta, 0, ..., 0).
inline RVector variance_limit_filter(const CovarianceModel& model, double theta) {
  detail::require(theta > 0.0 && theta < 1.0, "retained-variance level must lie in (0, 1)");
  const double v = model.total_variance();
  if (!(v > 0.0)) throw ValidationError("total variance is zero; variance limit undefined");
  const RVector& ev = model.eigenvalues();
  const Eigen::Index d = ev.size();
  RVector m = RVector::Zero(d);
  const double target = theta * v;
  double before = 0.0;  // sum of lambda_j for j < K
  for (Eigen::Index k = 0; k < d; ++k) {
    const double after = before + ev(k);
    if (after >= target || k == d - 1) {
      if (!(ev(k) > 0.0)) {
        throw ValidationError("retained-variance level is infeasible: critical eigenvalue is zero");
      }
      m.head(k).setOnes();
      m(k) = std::clamp((target - before) / ev(k), 0.0, 1.0);
      return m;
    }
    before = after;
  }
  return m;
}

// ---------------------------------------------------------------------------
// Fixed-variance bisection on the multiplier lambda.

enum class VarianceTarget { normalized, unnormalized };

struct FixedVarianceStep {
  double lambda = 0.0;
  double estimate = 0.0;
  bool went_up = false;  ///< estimate below target, so lambda moved up
};

struct FixedVarianceCalibration {
  double lambda_hat = 0.0;
  Interval bracket;          ///< final bracket
  Interval initial_bracket;  ///< bracket after expansion
  int expansions = 0;
  std::vector<FixedVarianceStep> trajectory;
};

struct FixedVarianceOptions {
  VarianceTarget mode = VarianceTarget::normalized;
  /// Draws per evaluation; 0 evaluates exactly from the closed form.
  std::size_t per_step_samples = 0;
  std::uint64_t seed = 0;
  int steps = 60;
  int max_expansions = 60;
};

namespace detail {

/// Monte Carlo estimate of p_cond(lambda) (or p_joint when `joint`) from the
/// measurement with data operator lambda C, T1 = T'/T2 and beta = delta + 1/T2.
inline double estimate_fixed_variance_probability(const CovarianceModel& model, const MeasurementConfig& config,
                                                  double lambda, bool joint, std::size_t shots,
                                                  std::uint64_t seed) {
  const RVector w = covariance_probe_weights(model);
  const RVector scaled = lambda * model.eigenvalues();
  const MixtureSampler sampler(mode_centers(scaled, config), w, config.t1);
  const Philox4x32 rng(seed);
  const double beta = config.shift(1.0);
  const double p_succ = model.total_variance() / 4.0;
  std::atomic<std::size_t> accepted{0};
  parallel_chunks(shots, [&](std::size_t begin, std::size_t end) {
    std::size_t local = 0;
    for (std::size_t s = begin; s < end; ++s) {
      if (joint && !(rng.uniform_pair(s, 1).first < p_succ)) continue;
      if (sampler.draw(rng, s, 0) > beta) ++local;
    }
    accepted += local;
  });
  return static_cast<double>(accepted) / static_cast<double>(shots);
}

}  // namespace detail

/// Bisects lambda so that Tr(rho_C M_lambda^var) = theta (normalized mode)
/// or (1/4) Tr(C M_lambda^var) = gamma / 4 (unnormalized mode).
///
/// The configuration must satisfy T1 T2 = T'; the threshold is fixed at
/// beta = 1 / T2. The bracket starts at [0, 2 / lambda_1] and is widened by
/// doubling until it straddles the target.
inline FixedVarianceCalibration fixed_variance_bisection(const CovarianceModel& model,
                                                         const MeasurementConfig& config, double target,
                                                         const FixedVarianceOptions& opt = {}) {
  config.validate();
  const double v = model.total_variance();
  detail::require(v > 0.0, "total variance must be positive for fixed-variance calibration");
  if (opt.mode == VarianceTarget::normalized) {
    detail::require(target > 0.0 && target < 1.0, "normalized target theta must lie in (0, 1)");
  } else {
    detail::require(target > 0.0 && target < v, "unnormalized target gamma must lie in (0, V_C)");
  }
  const double t_prime = config.effective_temperature();
  const bool joint = opt.mode == VarianceTarget::unnormalized;
  const double goal = joint ? target / 4.0 : target;
  int evaluation = 0;
  auto evaluate = [&](double lambda) {
    ++evaluation;
    if (opt.per_step_samples == 0) {
      const RetainedVariance rv = retained_variance(model, fixed_variance_occupations(model.eigenvalues(), t_prime, lambda));
      return joint ? rv.absolute / 4.0 : rv.normalized;
    }
    const std::uint64_t step_seed = splitmix64(opt.seed + static_cast<std::uint64_t>(evaluation));
    return detail::estimate_fixed_variance_probability(model, config, lambda, joint, opt.per_step_samples, step_seed);
  };

  FixedVarianceCalibration out;
  double lo = 0.0;
  double hi = 2.0 / model.eigenvalue(0);
  double p_lo = evaluate(lo);
  double p_hi = evaluate(hi);
  while (p_hi < goal) {
    if (++out.expansions > opt.max_expansions) throw NumericError("fixed-variance bracket expansion cap exceeded");
    lo = hi;
    p_lo = p_hi;
    hi *= 2.0;
    p_hi = evaluate(hi);
  }
  double width = hi - lo;
  while (p_lo >= goal) {
    if (++out.expansions > opt.max_expansions) throw NumericError("fixed-variance bracket expansion cap exceeded");
    hi = lo;
    p_hi = p_lo;
    width *= 2.0;
    lo = hi - width;
    p_lo = evaluate(lo);
  }
  out.initial_bracket = {lo, hi};
  out.trajectory.push_back({lo, p_lo, true});
  out.trajectory.push_back({hi, p_hi, false});
  for (int step = 0; step < opt.steps; ++step) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double p = evaluate(mid);
    const bool up = p < goal;
    out.trajectory.push_back({mid, p, up});
    if (up) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  out.bracket = {lo, hi};
  out.lambda_hat = 0.5 * (lo + hi);
  return out;
}

}  // namespace fermipca
