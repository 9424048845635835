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

#include <gtest/gtest.h>

#include <cstdlib>

#include "support.hpp"

namespace {

using namespace fermipca;
using namespace fermipca::testing;

/// Composite Simpson rule, used as an independent quadrature oracle.
template <class F>
double simpson(F f, double a, double b, int n = 200000) {
  const double hstep = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * hstep) * (i % 2 ? 4.0 : 2.0);
  return s * hstep / 3.0;
}

double exact_cdf_mixture(const RVector& centers, const RVector& w, double t1, double x) {
  double f = 0.0;
  for (Eigen::Index j = 0; j < centers.size(); ++j) f += w(j) * logistic((x - centers(j)) / t1);
  return f;
}

TEST(Logistic, DensityAndCdfAnchors) {
  EXPECT_DOUBLE_EQ(logistic_density(1.0, 0.0), 0.25);
  EXPECT_DOUBLE_EQ(logistic_cdf(0.3, 0.0), 0.5);
  for (double q : {-3.0, -0.2, 0.0, 0.7, 5.0}) {
    const double t1 = 0.4;
    const double e = std::exp(-q / t1);
    EXPECT_NEAR(logistic_density(t1, q), e / (t1 * (1 + e) * (1 + e)), 1e-15);
  }
  EXPECT_EQ(logistic_density(1e-3, 10.0), 0.0);
  EXPECT_TRUE(std::isfinite(logistic_density(1e-3, -10.0)));
}

TEST(Logistic, DensityIntegratesToOne) {
  for (double t1 : {0.05, 1.0, 3.0}) {
    const double total = simpson([&](double q) { return logistic_density(t1, q); }, -50 * t1, 50 * t1);
    EXPECT_NEAR(total, 1.0, 1e-10) << t1;
  }
}

TEST(PositionDensity, PureProbeIsSingleLogistic) {
  Rng rng(31);
  const auto model = model_with_spectrum(rng, random_spectrum(rng, 4));
  const MeasurementConfig cfg(0.2, 2.0, 0.3);
  const auto probe = ProbeState::pure(model, model.eigenvectors().col(0));
  for (double q : {-1.0, 0.0, 0.5, 1.0}) {
    EXPECT_NEAR(position_density(model, cfg, probe, q),
                logistic_density(0.2, q - 0.3 - model.eigenvalue(0) / 2.0), 1e-12);
  }
}

TEST(PositionDensity, MaximallyMixedTwoLevel) {
  const auto model = diagonal_model({2.0, 1.0});
  const MeasurementConfig cfg(0.3, 4.0);
  const auto probe = ProbeState::maximally_mixed(2);
  for (double q : {0.0, 0.25, 0.4, 1.0}) {
    const double expect = 0.5 * (logistic_density(0.3, q - 0.5) + logistic_density(0.3, q - 0.25));
    EXPECT_NEAR(position_density(model, cfg, probe, q), expect, 1e-15);
  }
}

TEST(PositionDensity, DensityIsDerivativeOfCdf) {
  Rng rng(32);
  const auto model = model_with_spectrum(rng, random_spectrum(rng, 5));
  const MeasurementConfig cfg(0.1, 1.5, -0.2);
  const auto probe = ProbeState::covariance(model);
  for (double q : {-0.5, 0.0, 0.2, 0.6}) {
    const double step = 1e-6;
    const double fd = (position_cdf(model, cfg, probe, q + step) - position_cdf(model, cfg, probe, q - step)) / (2 * step);
    EXPECT_NEAR(fd, position_density(model, cfg, probe, q), 1e-6);
  }
}

TEST(PositionCdf, TailTraceIdentity) {
  Rng rng(33);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index d = 2 + trial % 7;
    const auto model = model_with_spectrum(rng, random_spectrum(rng, d));
    const MeasurementConfig cfg(uniform(rng, 0.01, 1.0), uniform(rng, 0.5, 3.0), uniform(rng, -1.0, 1.0));
    const auto mixed = ProbeState::maximally_mixed(d);
    const auto pure = ProbeState::pure(model, random_complex_vector(rng, d));
    for (int b = 0; b < 20; ++b) {
      const double beta = uniform(rng, -2.0, 2.0);
      const RVector m = effect_from_threshold(model, cfg, beta).occupations;
      ASSERT_NEAR(1.0 - position_cdf(model, cfg, mixed, beta), m.sum() / d, 1e-12);
      ASSERT_NEAR(position_tail(model, cfg, mixed, beta), m.sum() / d, 1e-12);
      ASSERT_NEAR(1.0 - position_cdf(model, cfg, pure, beta), pure.weights.dot(m), 1e-12);
    }
  }
}

TEST(Probe, Validation) {
  const auto model = diagonal_model({2.0, 1.0});
  EXPECT_THROW(ProbeState::pure(model, CVector::Zero(2)), ValidationError);
  EXPECT_THROW(ProbeState::density(model, CMatrix::Identity(2, 2)), ValidationError);
  const auto p = ProbeState::density(model, CMatrix::Identity(2, 2) / 2.0);
  EXPECT_NEAR(p.weights.sum(), 1.0, 1e-15);
  ProbeState bad = ProbeState::maximally_mixed(3);
  EXPECT_THROW(position_cdf(model, MeasurementConfig(1, 1), bad, 0.0), ValidationError);
}

TEST(Config, RejectsNonPositiveScales) {
  EXPECT_THROW(MeasurementConfig(0.0, 1.0), ValidationError);
  EXPECT_THROW(MeasurementConfig(1.0, -1.0), ValidationError);
  const MeasurementConfig c(0.2, 3.0, 0.5);
  EXPECT_DOUBLE_EQ(c.effective_temperature(), 0.2 * 3.0);
  EXPECT_DOUBLE_EQ(c.mu_for_threshold(c.threshold_for_mu(0.7)), 0.7);
}

TEST(Sampling, DeterministicAndThreadIndependent) {
  Rng rng(34);
  const auto model = model_with_spectrum(rng, random_spectrum(rng, 5));
  const MeasurementConfig cfg(0.1, 1.0);
  const auto probe = ProbeState::maximally_mixed(5);
  ::setenv("FERMIPCA_THREADS", "1", 1);
  const auto a = sample_positions(model, cfg, probe, 100000, 77);
  ::setenv("FERMIPCA_THREADS", "4", 1);
  const auto b = sample_positions(model, cfg, probe, 100000, 77);
  ::unsetenv("FERMIPCA_THREADS");
  const auto c = sample_positions(model, cfg, probe, 100000, 78);
  EXPECT_EQ(a.samples, b.samples);
  EXPECT_NE(a.samples, c.samples);
  // a prefix run reproduces the same leading samples
  const auto p = sample_positions(model, cfg, probe, 1000, 77);
  EXPECT_TRUE(std::equal(p.samples.begin(), p.samples.end(), a.samples.begin()));
}

TEST(Sampling, KolmogorovDistanceWithinDkwBand) {
  Rng rng(35);
  const auto model = model_with_spectrum(rng, random_spectrum(rng, 6));
  const MeasurementConfig cfg(0.05, 1.0, 0.1);
  const auto probe = ProbeState::covariance(model);
  const std::size_t s = 100000;
  const double band = std::sqrt(std::log(2.0 / 0.01) / (2.0 * s));
  RVector centers(6);
  for (Eigen::Index j = 0; j < 6; ++j) centers(j) = cfg.shift(model.eigenvalue(j));
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto q = sample_positions(model, cfg, probe, s, seed).samples;
    std::sort(q.begin(), q.end());
    double ks = 0.0;
    for (std::size_t i = 0; i < s; ++i) {
      const double f = exact_cdf_mixture(centers, probe.weights, cfg.t1, q[i]);
      ks = std::max({ks, std::abs(f - static_cast<double>(i + 1) / s), std::abs(f - static_cast<double>(i) / s)});
    }
    ASSERT_LT(ks, band) << "seed " << seed;
  }
}

TEST(Sampling, NarrowControlClustersAtTopEigenvalue) {
  const auto model = diagonal_model({0.9, 0.4, 0.1});
  const MeasurementConfig cfg(1e-6, 2.0);
  const auto probe = ProbeState::pure(model, model.eigenvectors().col(0));
  for (double q : sample_positions(model, cfg, probe, 200, 5).samples) {
    ASSERT_NEAR(q, 0.45, 10 * cfg.t1);
  }
}

TEST(Sampling, MeanMatchesMixtureCenter) {
  Rng rng(36);
  const auto model = model_with_spectrum(rng, random_spectrum(rng, 4));
  const MeasurementConfig cfg(0.2, 2.0, 0.25);
  const auto set = sample_positions(model, cfg, ProbeState::maximally_mixed(4), 100000, 9);
  double mean = 0.0;
  for (double q : set.samples) mean += q;
  mean /= static_cast<double>(set.samples.size());
  const double center = cfg.delta + model.total_variance() / (4.0 * cfg.t2);
  double var = M_PI * M_PI * cfg.t1 * cfg.t1 / 3.0;
  for (Eigen::Index j = 0; j < 4; ++j) var += 0.25 * std::pow(cfg.shift(model.eigenvalue(j)) - center, 2);
  EXPECT_NEAR(mean, center, 3.0 * std::sqrt(var / 100000.0));
}

TEST(Sampling, ZeroWeightModesNeverDrawn) {
  const auto model = diagonal_model({1.0, 0.5, 0.0});
  // covariance probe puts zero weight on the last mode, whose center is at 0
  const MeasurementConfig cfg(1e-4, 1.0);
  for (double q : sample_positions(model, cfg, ProbeState::covariance(model), 20000, 3).samples) {
    ASSERT_GT(q, 0.25);
  }
}

TEST(Effect, MatchesFermiDiracFilter) {
  Rng rng(37);
  const auto model = model_with_spectrum(rng, random_spectrum(rng, 5));
  for (int trial = 0; trial < 100; ++trial) {
    const MeasurementConfig cfg(uniform(rng, 0.01, 1.0), uniform(rng, 0.1, 5.0), uniform(rng, -1.0, 1.0));
    const double beta = uniform(rng, -2.0, 2.0);
    const RVector a = effect_from_threshold(model, cfg, beta).occupations;
    const RVector b = fermi_dirac_filter(model, cfg.t1 * cfg.t2, (beta - cfg.delta) * cfg.t2).occupations;
    ASSERT_LE((a - b).cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(Effect, SaturatesAtExtremeThresholds) {
  const auto model = diagonal_model({2.0, 1.0});
  const MeasurementConfig cfg(0.1, 1.0);
  EXPECT_EQ(effect_from_threshold(model, cfg, 1e6).occupations, RVector::Zero(2));
  EXPECT_EQ(effect_from_threshold(model, cfg, -1e6).occupations, RVector::Ones(2));
}

TEST(Effect, SymmetricAtMidpointThreshold) {
  const auto model = diagonal_model({2.0, 1.0});
  const MeasurementConfig cfg(0.05, 2.0);
  const RVector m = effect_from_threshold(model, cfg, 1.5 / 2.0).occupations;
  EXPECT_NEAR(m.sum(), 1.0, 1e-15);
  EXPECT_NEAR(m(0), 1.0 - m(1), 1e-15);
}

TEST(Kraus, SquaresIntegrateToWindowEffect) {
  Rng rng(38);
  const auto model = model_with_spectrum(rng, random_spectrum(rng, 3));
  const MeasurementConfig cfg(0.1, 1.0);
  const Window w{0.1, 0.6};
  const RVector e = window_effect(model, cfg, w);
  for (Eigen::Index j = 0; j < 3; ++j) {
    const double oracle = simpson([&](double q) { return std::pow(kraus_density(model, cfg, q)(j), 2); }, w.lower, w.upper, 20000);
    EXPECT_NEAR(e(j), oracle, 1e-10);
  }
}

TEST(Window, FullLineIsIdentityAndTailIsThresholdEffect) {
  Rng rng(39);
  const auto model = model_with_spectrum(rng, random_spectrum(rng, 4));
  const MeasurementConfig cfg(0.1, 2.0, 0.1);
  EXPECT_LE((window_effect(model, cfg, Window{}) - RVector::Ones(4)).cwiseAbs().maxCoeff(), 0.0);
  const RVector tail = window_effect(model, cfg, Window{0.3, numeric::kInf});
  EXPECT_LE((tail - effect_from_threshold(model, cfg, 0.3).occupations).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_THROW(window_effect(model, cfg, Window{1.0, 0.5}), ValidationError);
}

TEST(Window, AdditiveOverPartitions) {
  Rng rng(40);
  const auto model = model_with_spectrum(rng, random_spectrum(rng, 5));
  const MeasurementConfig cfg(0.07, 1.3, -0.1);
  std::vector<double> cuts{0.6, 0.35, 0.2, -0.05};
  RVector total = RVector::Zero(5);
  for (const auto& w : quantile_windows(cuts)) total += window_effect(model, cfg, w);
  EXPECT_LE((total - RVector::Ones(5)).cwiseAbs().maxCoeff(), 1e-15);
  const RVector ab = window_effect(model, cfg, {0.2, 0.6});
  const RVector split = window_effect(model, cfg, {0.2, 0.35}) + window_effect(model, cfg, {0.35, 0.6});
  EXPECT_LE((ab - split).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Window, QuantileWindowsReproduceSoftComponents) {
  Rng rng(41);
  const auto model = model_with_spectrum(rng, random_spectrum(rng, 6));
  const MeasurementConfig cfg(0.05, 2.0, 0.2);
  const auto mus = exact_mu_ladder(model, cfg.effective_temperature());
  std::vector<double> betas;
  for (double mu : mus) betas.push_back(cfg.threshold_for_mu(mu));
  const auto windows = quantile_windows(betas);
  const auto comps = soft_components(model, mus, cfg.effective_temperature());
  for (std::size_t k = 0; k < windows.size(); ++k) {
    EXPECT_LE((window_effect(model, cfg, windows[k]) - comps[k]).cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(Gamma, DiagonalOverTailEqualsOccupation) {
  Rng rng(42);
  const auto model = model_with_spectrum(rng, random_spectrum(rng, 4));
  const MeasurementConfig cfg(0.1, 1.0);
  const RVector m = effect_from_threshold(model, cfg, 0.4).occupations;
  for (Eigen::Index i = 0; i < 4; ++i) {
    EXPECT_NEAR(gamma_overlap(model, cfg, {0.4, numeric::kInf}, i, i), m(i), 1e-15);
  }
}

TEST(Gamma, FullLineClosedForm) {
  const auto model = diagonal_model({1.0, 0.6, 0.1});
  const MeasurementConfig cfg(0.15, 1.2);
  for (Eigen::Index i = 0; i < 3; ++i) {
    for (Eigen::Index j = 0; j < 3; ++j) {
      const double c = (model.eigenvalue(i) - model.eigenvalue(j)) / (2.0 * cfg.t1 * cfg.t2);
      const double expect = c == 0.0 ? 1.0 : c / std::sinh(c);
      EXPECT_NEAR(gamma_overlap(model, cfg, Window{}, i, j), expect, 1e-10) << i << "," << j;
    }
  }
}

TEST(Gamma, SymmetricAndCauchySchwarz) {
  Rng rng(43);
  for (int trial = 0; trial < 10; ++trial) {
    const auto model = model_with_spectrum(rng, random_spectrum(rng, 4));
    const MeasurementConfig cfg(uniform(rng, 0.02, 0.5), uniform(rng, 0.5, 2.0), uniform(rng, -0.2, 0.2));
    const double a = uniform(rng, -0.5, 0.5);
    const Window w{a, a + uniform(rng, 0.05, 1.0)};
    const Eigen::MatrixXd g = gamma_matrix(model, cfg, w);
    for (Eigen::Index i = 0; i < 4; ++i) {
      for (Eigen::Index j = 0; j < 4; ++j) {
        ASSERT_EQ(g(i, j), g(j, i));
        ASSERT_LE(g(i, j), std::sqrt(g(i, i) * g(j, j)) + 1e-10);
        // oracle: Simpson quadrature of the overlap integrand
        if (i < j && trial < 3) {
          const double ci = cfg.shift(model.eigenvalue(i)), cj = cfg.shift(model.eigenvalue(j));
          const double s = simpson([&](double q) {
            return std::sqrt(logistic_density(cfg.t1, q - ci) * logistic_density(cfg.t1, q - cj));
          }, w.lower, w.upper, 20000);
          ASSERT_NEAR(g(i, j), s, 1e-10);
        }
      }
    }
  }
}

TEST(Gamma, DegenerateModesMatchDiagonal) {
  const auto model = diagonal_model({0.8, 0.5, 0.5});
  const MeasurementConfig cfg(0.1, 1.0);
  const Window w{0.3, 0.7};
  EXPECT_DOUBLE_EQ(gamma_overlap(model, cfg, w, 1, 2), gamma_overlap(model, cfg, w, 1, 1));
}

TEST(Postselection, MaximallyMixedWindowGivesSoftComponent) {
  Rng rng(44);
  const auto model = model_with_spectrum(rng, random_spectrum(rng, 5));
  const MeasurementConfig cfg(0.05, 1.0);
  const auto mus = exact_mu_ladder(model, cfg.effective_temperature());
  std::vector<double> betas;
  for (double mu : mus) betas.push_back(cfg.threshold_for_mu(mu));
  const auto windows = quantile_windows(betas);
  const auto comps = soft_components(model, mus, cfg.effective_temperature());
  for (std::size_t k = 0; k < windows.size(); ++k) {
    const auto out = postselected_state(model, cfg, ProbeState::maximally_mixed(5), windows[k]);
    EXPECT_NEAR(out.acceptance_probability, 0.2, 1e-10);
    const CMatrix expect = comps[k].cast<Complex>().asDiagonal();
    EXPECT_LE((out.density - expect).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(Postselection, PureProbeGivesValidDensity) {
  Rng rng(45);
  for (int trial = 0; trial < 10; ++trial) {
    const auto model = model_with_spectrum(rng, random_spectrum(rng, 4));
    const MeasurementConfig cfg(uniform(rng, 0.05, 0.3), 1.0);
    const auto probe = ProbeState::pure(model, random_complex_vector(rng, 4));
    const auto out = postselected_state(model, cfg, probe, {0.3, 0.8});
    const CMatrix& r = out.density;
    ASSERT_LE((r - r.adjoint()).cwiseAbs().maxCoeff(), 1e-14);
    ASSERT_NEAR(r.trace().real(), 1.0, 1e-10);
    ASSERT_GE(Eigen::SelfAdjointEigenSolver<CMatrix>(r).eigenvalues().minCoeff(), -1e-10);
    ASSERT_NEAR(out.acceptance_probability, 1.0 - position_cdf(model, cfg, probe, 0.3) -
                                                (1.0 - position_cdf(model, cfg, probe, 0.8)), 1e-12);
  }
}

TEST(Postselection, EmptyBranchIsNumericError) {
  const auto model = diagonal_model({1.0, 0.5});
  const MeasurementConfig cfg(0.01, 1.0);
  EXPECT_THROW(postselected_state(model, cfg, ProbeState::maximally_mixed(2), {50.0, 60.0}), NumericError);
}

TEST(Trotter, CommutingCaseIsExact) {
  const auto model = build_centered_covariance(FeatureDataset({(CVector(3) << 1, 0, 0).finished(),
                                                                (CVector(3) << 0, 1, 0).finished()}));
  for (int r : {1, 7, 64}) EXPECT_LE(trotter_round_error(model, 1.7, r, 0.8), 1e-12);
}

TEST(Trotter, FirstOrderConvergence) {
  Rng rng(46);
  const auto model = random_centered_model(rng, 5, 6);
  std::vector<double> x, y;
  double prev = numeric::kInf;
  for (int r = 8; r <= 1024; r *= 2) {
    const double e = trotter_round_error(model, 1.5, r, 1.0);
    EXPECT_LT(e, prev);
    prev = e;
    x.push_back(std::log(r));
    y.push_back(std::log(e));
  }
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / x.size();
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / y.size();
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  EXPECT_NEAR(sxy / sxx, -1.0, 0.2);
}

TEST(Trotter, NeedsMeanBranch) {
  EXPECT_THROW(trotter_round_error(diagonal_model({1.0, 0.5}), 1.0, 4, 1.0), ValidationError);
}

}  // namespace
