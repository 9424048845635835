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
#include <optional>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "fermipca/covariance_model.hpp"
#include "fermipca/errors.hpp"
#include "fermipca/numeric.hpp"
#include "fermipca/parallel.hpp"
#include "fermipca/rng.hpp"
#include "fermipca/soft_filter.hpp"

namespace fermipca {

/// Control width T1, evolution scale T2 and control displacement delta of one
/// modified thermal measurement. Effective temperature T = T1 T2.
struct MeasurementConfig {
  double t1 = 1.0;
  double t2 = 1.0;
  double delta = 0.0;

  MeasurementConfig() = default;
  MeasurementConfig(double t1_, double t2_, double delta_ = 0.0) : t1(t1_), t2(t2_), delta(delta_) {
    validate();
  }

  void validate() const {
    detail::require(t1 > 0.0 && std::isfinite(t1), "control width t1 must be positive");
    detail::require(t2 > 0.0 && std::isfinite(t2), "evolution scale t2 must be positive");
    detail::require(std::isfinite(delta), "displacement delta must be finite");
  }

  double effective_temperature() const { return t1 * t2; }
  /// Chemical potential selected by threshold beta: (beta - delta) T2.
  double mu_for_threshold(double beta) const { return (beta - delta) * t2; }
  double threshold_for_mu(double mu) const { return mu / t2 + delta; }
  /// Position shift of eigenmode lambda: delta + lambda / T2.
  double shift(double lambda) const { return delta + lambda / t2; }

  bool operator==(const MeasurementConfig&) const = default;
};

// ---------------------------------------------------------------------------
// Logistic control distribution.

/// g_{T1}(q) = e^{-q/T1} / (T1 (1 + e^{-q/T1})^2) = sech^2(q / 2T1) / (4 T1).
inline double logistic_density(double t1, double q) {
  const double s = numeric::sech(q / (2.0 * t1));
  return s * s / (4.0 * t1);
}

/// F_{T1}(x) = 1 / (1 + e^{-x/T1}).
inline double logistic_cdf(double t1, double x) { return numeric::logistic(x / t1); }

// ---------------------------------------------------------------------------
// Probe states.

enum class ProbeKind { maximally_mixed, covariance_probe, pure, density };

inline std::string to_string(ProbeKind k) {
  switch (k) {
    case ProbeKind::maximally_mixed: return "maximally_mixed";
    case ProbeKind::covariance_probe: return "covariance_probe";
    case ProbeKind::pure: return "pure";
    case ProbeKind::density: return "density";
  }
  return "unknown";
}

/// Data-register input state, expressed in the model eigenbasis.
struct ProbeState {
  ProbeKind kind = ProbeKind::maximally_mixed;
  /// p_j = <u_j|rho|u_j>.
  RVector weights;
  /// Full rho in the eigenbasis; present for pure and density probes.
  std::optional<CMatrix> matrix_in_eigenbasis;

  static ProbeState maximally_mixed(Eigen::Index d) {
    return {ProbeKind::maximally_mixed, RVector::Constant(d, 1.0 / static_cast<double>(d)), std::nullopt};
  }

  static ProbeState covariance(const CovarianceModel& model) {
    return {ProbeKind::covariance_probe, covariance_probe_weights(model), std::nullopt};
  }

  /// Normalized pure state |v>/||v|| given in the original basis.
  static ProbeState pure(const CovarianceModel& model, const CVector& v) {
    detail::require(v.size() == model.dimension(), "probe vector dimension mismatch");
    const double n = v.norm();
    detail::require(n > 0.0 && std::isfinite(n), "pure probe vector must be nonzero");
    const CVector c = model.coefficients(v) / n;
    ProbeState p{ProbeKind::pure, c.cwiseAbs2(), CMatrix(c * c.adjoint())};
    p.weights /= p.weights.sum();
    return p;
  }

  /// Density matrix rho given in the original basis.
  static ProbeState density(const CovarianceModel& model, const CMatrix& rho) {
    const Eigen::Index d = model.dimension();
    detail::require(rho.rows() == d && rho.cols() == d, "probe density dimension mismatch");
    detail::require((rho - rho.adjoint()).cwiseAbs().maxCoeff() <= 1e-10, "probe density is not Hermitian");
    const CMatrix r = model.eigenvectors().adjoint() * rho * model.eigenvectors();
    RVector w = r.diagonal().real();
    detail::require(std::abs(w.sum() - 1.0) <= 1e-10, "probe density must have unit trace");
    detail::require(w.minCoeff() >= -1e-10, "probe density has negative diagonal weight");
    w = w.cwiseMax(0.0);
    return {ProbeKind::density, w, r};
  }

  void validate(Eigen::Index d) const {
    detail::require(weights.size() == d, "probe dimension does not match the model");
    detail::require(weights.minCoeff() >= 0.0, "probe weights must be non-negative");
    detail::require(std::abs(weights.sum() - 1.0) <= 1e-10, "probe weights must sum to one");
  }
};

// ---------------------------------------------------------------------------
// Exact position statistics: a finite mixture of shifted logistics.

inline double position_density(const CovarianceModel& model, const MeasurementConfig& config,
                               const ProbeState& probe, double q) {
  probe.validate(model.dimension());
  double f = 0.0;
  for (Eigen::Index j = 0; j < model.dimension(); ++j) {
    f += probe.weights(j) * logistic_density(config.t1, q - config.shift(model.eigenvalue(j)));
  }
  return f;
}

/// Pr(q <= beta).
inline double position_cdf(const CovarianceModel& model, const MeasurementConfig& config,
                           const ProbeState& probe, double beta) {
  probe.validate(model.dimension());
  double f = 0.0;
  for (Eigen::Index j = 0; j < model.dimension(); ++j) {
    f += probe.weights(j) * logistic_cdf(config.t1, beta - config.shift(model.eigenvalue(j)));
  }
  return f;
}

/// Pr(q > beta), summed directly from the upper tails.
inline double position_tail(const CovarianceModel& model, const MeasurementConfig& config,
                            const ProbeState& probe, double beta) {
  probe.validate(model.dimension());
  double g = 0.0;
  for (Eigen::Index j = 0; j < model.dimension(); ++j) {
    g += probe.weights(j) * logistic_cdf(config.t1, config.shift(model.eigenvalue(j)) - beta);
  }
  return g;
}

// ---------------------------------------------------------------------------
// Sampling.

struct PositionSampleSet {
  std::vector<double> samples;
  std::uint64_t seed = 0;
  ProbeKind probe = ProbeKind::maximally_mixed;
  MeasurementConfig config;
};

namespace detail {

/// Draws eigenmode indices from weights and logistic offsets by inverse CDF.
/// Sample s uses Philox block (s, stream) only.
class MixtureSampler {
 public:
  MixtureSampler(RVector centers, const RVector& weights, double t1)
      : centers_(std::move(centers)), t1_(t1) {
    cumulative_.resize(static_cast<std::size_t>(weights.size()));
    double acc = 0.0;
    for (Eigen::Index j = 0; j < weights.size(); ++j) {
      acc += weights(j);
      cumulative_[static_cast<std::size_t>(j)] = acc;
    }
    for (auto& c : cumulative_) c /= acc;
    // pin everything from the last positive-weight mode on to exactly 1 so
    // trailing zero-weight modes are never selected
    Eigen::Index last = weights.size() - 1;
    while (last > 0 && weights(last) <= 0.0) --last;
    for (auto j = static_cast<std::size_t>(last); j < cumulative_.size(); ++j) cumulative_[j] = 1.0;
  }

  Eigen::Index pick(double u) const {
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    const auto j = static_cast<Eigen::Index>(it - cumulative_.begin());
    return std::min<Eigen::Index>(j, centers_.size() - 1);
  }

  double draw(const Philox4x32& rng, std::uint64_t index, std::uint32_t stream) const {
    const auto [u_mode, u_pos] = rng.uniform_pair(index, stream);
    return centers_(pick(u_mode)) + t1_ * numeric::logit(u_pos);
  }

 private:
  RVector centers_;
  std::vector<double> cumulative_;
  double t1_;
};

inline RVector mode_centers(const RVector& eigenvalues, const MeasurementConfig& config) {
  RVector c(eigenvalues.size());
  for (Eigen::Index j = 0; j < c.size(); ++j) c(j) = config.shift(eigenvalues(j));
  return c;
}

}  // namespace detail

/// Draws `count` position outcomes of the thermal measurement on `probe`.
/// Deterministic in (seed, count); chunks may be generated in parallel.
inline PositionSampleSet sample_positions(const CovarianceModel& model, const MeasurementConfig& config,
                                          const ProbeState& probe, std::size_t count,
                                          std::uint64_t seed) {
  config.validate();
  probe.validate(model.dimension());
  detail::require(count >= 1, "sample count must be at least 1");
  PositionSampleSet out;
  out.seed = seed;
  out.probe = probe.kind;
  out.config = config;
  out.samples.resize(count);
  const detail::MixtureSampler sampler(detail::mode_centers(model.eigenvalues(), config), probe.weights,
                                       config.t1);
  const Philox4x32 rng(seed);
  parallel_chunks(count, [&](std::size_t begin, std::size_t end) {
    for (std::size_t s = begin; s < end; ++s) out.samples[s] = sampler.draw(rng, s, 0);
  });
  return out;
}

// ---------------------------------------------------------------------------
// Effects, Kraus densities and postselection.

/// The binary effect of the tail event q > beta; identical to the
/// Fermi-Dirac filter at T = T1 T2 and mu = (beta - delta) T2.
inline SoftFilter effect_from_threshold(const CovarianceModel& model, const MeasurementConfig& config,
                                        double beta) {
  config.validate();
  return fermi_dirac_filter(model, config.effective_temperature(), config.mu_for_threshold(beta));
}

/// Position window (lower, upper]; either end may be infinite.
struct Window {
  double lower = -numeric::kInf;
  double upper = numeric::kInf;

  void validate() const {
    detail::require(!std::isnan(lower) && !std::isnan(upper), "window bounds must not be NaN");
    detail::require(lower < upper, "window must be non-empty with lower < upper");
  }
};

/// Diagonal Kraus density K_q with entries sqrt(g(q - delta - lambda_j / T2)).
inline RVector kraus_density(const CovarianceModel& model, const MeasurementConfig& config, double q) {
  config.validate();
  RVector k(model.dimension());
  for (Eigen::Index j = 0; j < k.size(); ++j) {
    k(j) = std::sqrt(logistic_density(config.t1, q - config.shift(model.eigenvalue(j))));
  }
  return k;
}

namespace detail {

/// Pr(x in (a, b]) under the logistic law centered at zero, in the numerically
/// favourable tail.
inline double logistic_mass(double t1, double a, double b) {
  if (a >= 0.0) return logistic_cdf(t1, -a) - logistic_cdf(t1, -b);
  return logistic_cdf(t1, b) - logistic_cdf(t1, a);
}

}  // namespace detail

/// E(W) = integral over W of K_q^2, closed form per mode.
inline RVector window_effect(const CovarianceModel& model, const MeasurementConfig& config,
                             const Window& window) {
  config.validate();
  window.validate();
  RVector e(model.dimension());
  for (Eigen::Index j = 0; j < e.size(); ++j) {
    const double c = config.shift(model.eigenvalue(j));
    e(j) = detail::logistic_mass(config.t1, window.lower - c, window.upper - c);
  }
  return e;
}

/// Quantile windows W_1 = (beta_1, inf), W_k = (beta_k, beta_{k-1}],
/// W_d = (-inf, beta_{d-1}] from a strictly decreasing ladder.
inline std::vector<Window> quantile_windows(const std::vector<double>& beta_ladder) {
  for (std::size_t i = 1; i < beta_ladder.size(); ++i) {
    if (!(beta_ladder[i] < beta_ladder[i - 1])) {
      throw ValidationError("threshold ladder must be strictly decreasing in k");
    }
  }
  std::vector<Window> w;
  double upper = numeric::kInf;
  for (double b : beta_ladder) {
    w.push_back({b, upper});
    upper = b;
  }
  w.push_back({-numeric::kInf, upper});
  return w;
}

/// Absolute tolerance of the overlap quadrature.
inline constexpr double kGammaTolerance = 1e-10;

/// Window-overlap factor Gamma_ij = int_W sqrt(g(q - c_i) g(q - c_j)) dq.
inline double gamma_overlap(const CovarianceModel& model, const MeasurementConfig& config,
                            const Window& window, Eigen::Index i, Eigen::Index j) {
  config.validate();
  window.validate();
  const Eigen::Index d = model.dimension();
  detail::require(i >= 0 && i < d && j >= 0 && j < d, "mode index out of range");
  if (i > j) std::swap(i, j);
  const double ci = config.shift(model.eigenvalue(i));
  const double cj = config.shift(model.eigenvalue(j));
  if (i == j || ci == cj) {
    return detail::logistic_mass(config.t1, window.lower - ci, window.upper - ci);
  }
  const double t1 = config.t1;
  const double left = std::min(ci, cj);
  const double right = std::max(ci, cj);
  // Beyond 40 T1 outside the outer shift the integrand is below e^{-40} / T1.
  const double a = std::max(window.lower, left - 40.0 * t1);
  const double b = std::min(window.upper, right + 40.0 * t1);
  if (!(a < b)) return 0.0;
  auto integrand = [&](double q) {
    return numeric::sech((q - ci) / (2.0 * t1)) * numeric::sech((q - cj) / (2.0 * t1)) / (4.0 * t1);
  };
  std::vector<double> cuts{a};
  for (double c : {left, right}) {
    if (c > a && c < b) cuts.push_back(c);
  }
  cuts.push_back(b);
  double total = 0.0;
  using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
  // Relative to the L1 norm of the piece, which is at most 1.
  for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
    total += GK::integrate(integrand, cuts[s], cuts[s + 1], 30, kGammaTolerance * 1e-2);
  }
  return total;
}

/// Full Gamma matrix for a window.
inline Eigen::MatrixXd gamma_matrix(const CovarianceModel& model, const MeasurementConfig& config,
                                    const Window& window) {
  const Eigen::Index d = model.dimension();
  Eigen::MatrixXd g(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = i; j < d; ++j) {
      g(i, j) = g(j, i) = gamma_overlap(model, config, window, i, j);
    }
  }
  return g;
}

struct PostselectedState {
  /// rho_out|W in the model eigenbasis.
  CMatrix density;
  double acceptance_probability = 0.0;
};

inline constexpr double kMinAcceptance = 1e-12;

/// Data-register state conditioned on q in W. Diagonal-only probes take the
/// closed form; probes with a full matrix get Gamma-weighted coherences.
inline PostselectedState postselected_state(const CovarianceModel& model, const MeasurementConfig& config,
                                            const ProbeState& probe, const Window& window) {
  probe.validate(model.dimension());
  const Eigen::Index d = model.dimension();
  const RVector e = window_effect(model, config, window);
  PostselectedState out;
  out.acceptance_probability = e.dot(probe.weights);
  if (!(out.acceptance_probability > kMinAcceptance)) {
    throw NumericError("empty postselection branch: acceptance probability " +
                       std::to_string(out.acceptance_probability));
  }
  if (!probe.matrix_in_eigenbasis) {
    out.density = (e.cwiseProduct(probe.weights) / out.acceptance_probability).cast<Complex>().asDiagonal();
    return out;
  }
  const CMatrix& rho = *probe.matrix_in_eigenbasis;
  out.density = CMatrix::Zero(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    out.density(i, i) = e(i) * rho(i, i).real();
    for (Eigen::Index j = i + 1; j < d; ++j) {
      if (std::abs(rho(i, j)) == 0.0) continue;
      const double g = gamma_overlap(model, config, window, i, j);
      out.density(i, j) = g * rho(i, j);
      out.density(j, i) = std::conj(out.density(i, j));
    }
  }
  out.density /= out.acceptance_probability;
  return out;
}

// ---------------------------------------------------------------------------
// Product-formula check for the selector-swap evolution.

/// Operator-norm error of R first-order rounds
/// (exp(+i D p |m><m|) exp(-i D p rho_bar))^R against exp(-i p C / T2), with
/// D = 1 / (R T2) and rho_bar = C + |m><m|.
inline double trotter_round_error(const CovarianceModel& model, double momentum, int rounds, double t2) {
  detail::require(model.mean_vector().has_value(), "Trotter check needs a centered model with a mean branch");
  detail::require(rounds >= 1, "round count must be at least 1");
  detail::require(t2 > 0.0, "evolution scale t2 must be positive");
  const CVector& m = *model.mean_vector();
  const CMatrix mean_proj = m * m.adjoint();
  const CMatrix rho_bar = model.matrix() + mean_proj;
  const double step = momentum / (static_cast<double>(rounds) * t2);
  const CMatrix round =
      numeric::hermitian_expi(mean_proj, step) * numeric::hermitian_expi(rho_bar, -step);
  CMatrix product = CMatrix::Identity(model.dimension(), model.dimension());
  for (int r = 0; r < rounds; ++r) product = round * product;
  const CMatrix exact = numeric::hermitian_expi(model.matrix(), -momentum / t2);
  return numeric::operator_norm(product - exact);
}

}  // namespace fermipca
