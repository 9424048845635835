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

#include <atomic>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "fermipca/calibration.hpp"
#include "fermipca/covariance_model.hpp"
#include "fermipca/errors.hpp"
#include "fermipca/numeric.hpp"
#include "fermipca/parallel.hpp"
#include "fermipca/rng.hpp"
#include "fermipca/soft_filter.hpp"
#include "fermipca/thermal_measurement.hpp"

namespace fermipca {

/// Soft subspace score of one input. `normalized` is empty for degenerate
/// inputs whose centered vector vanishes.
struct Score {
  double s = 0.0;
  std::optional<double> normalized;
  double nu = 0.0;

  bool degenerate() const { return !normalized.has_value(); }
  /// Residual energy nu - s.
  double residual() const { return nu - s; }
};

/// s = <z|M|z> = sum_j m_j |c_j|^2 with c = U^dagger z; s_bar = s / nu.
inline Score score(const CovarianceModel& model, const RVector& occupations, const CenteredInput& input) {
  detail::require(occupations.size() == model.dimension(), "filter dimension does not match the model");
  detail::require(input.centered.size() == model.dimension(), "input dimension does not match the model");
  const RVector weight = model.coefficients(input.centered).cwiseAbs2();
  Score out;
  out.nu = input.nu;
  out.s = occupations.dot(weight);
  if (!input.degenerate()) out.normalized = std::clamp(out.s / input.nu, 0.0, 1.0);
  return out;
}

inline Score score(const CovarianceModel& model, const SoftFilter& filter, const CenteredInput& input) {
  detail::require(filter.model_hash == model.fingerprint(), "filter was built for a different eigenbasis");
  return score(model, filter.occupations, input);
}

/// Score with the effect of the tail event q > beta.
inline Score score_at_threshold(const CovarianceModel& model, const MeasurementConfig& config, double beta,
                                const CenteredInput& input) {
  return score(model, effect_from_threshold(model, config, beta).occupations, input);
}

/// Per-mode soft spectral energies e_k = <z|D_k|z>, their normalization
/// pi_k = e_k / nu, and cumulative scores keyed by K.
struct ScoreProfile {
  RVector per_mode_energy;
  /// Empty when the input is degenerate.
  std::optional<RVector> per_mode_probability;
  double nu = 0.0;
  std::map<int, Score> cumulative;

  bool degenerate() const { return !per_mode_probability.has_value(); }
};

/// Profile from a full ladder beta_1 > ... > beta_{d-1}.
inline ScoreProfile spectral_profile(const CovarianceModel& model, const MeasurementConfig& config,
                                     const std::vector<double>& beta_ladder, const CenteredInput& input) {
  config.validate();
  const Eigen::Index d = model.dimension();
  if (static_cast<Eigen::Index>(beta_ladder.size()) != d - 1) {
    throw ValidationError("spectral profile needs the full ladder of d-1 thresholds");
  }
  std::vector<double> mus;
  for (double b : beta_ladder) mus.push_back(config.mu_for_threshold(b));
  const std::vector<RVector> comps = soft_components(model, mus, config.effective_temperature());
  const RVector weight = model.coefficients(input.centered).cwiseAbs2();

  ScoreProfile out;
  out.nu = input.nu;
  out.per_mode_energy.resize(d);
  for (Eigen::Index k = 0; k < d; ++k) out.per_mode_energy(k) = comps[static_cast<std::size_t>(k)].dot(weight);
  if (!input.degenerate()) out.per_mode_probability = out.per_mode_energy / input.nu;

  // Cumulative scores use the nested filters directly rather than partial sums.
  for (int k = 1; k < d; ++k) {
    out.cumulative[k] = score_at_threshold(model, config, beta_ladder[static_cast<std::size_t>(k - 1)], input);
  }
  return out;
}

inline ScoreProfile spectral_profile(const CovarianceModel& model, const RankThresholds& thresholds,
                                     const CenteredInput& input) {
  return spectral_profile(model, thresholds.config, thresholds.ladder(model.dimension()), input);
}

// ---------------------------------------------------------------------------
// Monte Carlo estimators.

/// Fraction of thermal-measurement shots on the normalized centered probe
/// whose position exceeds beta. Estimates s_bar.
inline double tail_frequency(const CovarianceModel& model, const MeasurementConfig& config, double beta,
                             const CenteredInput& input, std::size_t shots, std::uint64_t seed) {
  if (input.degenerate()) throw ValidationError("degenerate input: the centered vector is zero");
  const PositionSampleSet set =
      sample_positions(model, config, ProbeState::pure(model, input.centered), shots, seed);
  std::size_t above = 0;
  for (double q : set.samples) above += q > beta ? 1 : 0;
  return static_cast<double>(above) / static_cast<double>(shots);
}

struct JointEstimate {
  double p_joint = 0.0;    ///< accepted shots / all shots, approximates s / 4
  double p_success = 0.0;  ///< centering successes / all shots, approximates nu / 4
  std::size_t shots = 0;
  std::size_t successes = 0;
  std::size_t accepted = 0;
  /// p_joint / p_success; empty when no shot succeeded.
  std::optional<double> normalized;
};

/// Simulates the unpostselected pipeline: each shot first runs the centering
/// LCU (success probability nu/4) and, on success, the thermal measurement on
/// the centered probe.
inline JointEstimate joint_score_estimate(const CovarianceModel& model, const MeasurementConfig& config,
                                          double beta, const CVector& raw, std::size_t shots,
                                          std::uint64_t seed) {
  config.validate();
  detail::require(shots >= 1, "shot count must be at least 1");
  const CenteredInput input = center_input(model, raw);
  JointEstimate out;
  out.shots = shots;
  if (!input.degenerate()) {
    const ProbeState probe = ProbeState::pure(model, input.centered);
    const detail::MixtureSampler sampler(detail::mode_centers(model.eigenvalues(), config), probe.weights,
                                         config.t1);
    const Philox4x32 rng(seed);
    std::atomic<std::size_t> successes{0};
    std::atomic<std::size_t> accepted{0};
    parallel_chunks(shots, [&](std::size_t begin, std::size_t end) {
      std::size_t ok = 0;
      std::size_t hit = 0;
      for (std::size_t s = begin; s < end; ++s) {
        if (!(rng.uniform_pair(s, 1).first < input.success_probability)) continue;
        ++ok;
        if (sampler.draw(rng, s, 0) > beta) ++hit;
      }
      successes += ok;
      accepted += hit;
    });
    out.successes = successes;
    out.accepted = accepted;
  }
  const auto n = static_cast<double>(shots);
  out.p_joint = static_cast<double>(out.accepted) / n;
  out.p_success = static_cast<double>(out.successes) / n;
  if (out.successes > 0) out.normalized = static_cast<double>(out.accepted) / static_cast<double>(out.successes);
  return out;
}

}  // namespace fermipca
