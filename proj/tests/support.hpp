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

// Shared fixtures and independent oracles for the test suites. Nothing here
// calls into the library's eigensolver or RNG.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <vector>

#include "fermipca/fermipca.hpp"

namespace fermipca::testing {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

inline CVector random_complex_vector(Rng& rng, Eigen::Index d) {
  std::normal_distribution<double> n(0.0, 1.0);
  CVector v(d);
  for (Eigen::Index i = 0; i < d; ++i) v(i) = {n(rng), n(rng)};
  return v;
}

inline CVector random_unit_vector(Rng& rng, Eigen::Index d) {
  CVector v = random_complex_vector(rng, d);
  return v / v.norm();
}

/// Haar-ish unitary from Gram-Schmidt on Gaussian columns.
inline CMatrix random_unitary(Rng& rng, Eigen::Index d) {
  CMatrix q(d, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    CVector v = random_complex_vector(rng, d);
    for (Eigen::Index i = 0; i < j; ++i) v -= q.col(i).dot(v) * q.col(i);
    q.col(j) = v / v.norm();
  }
  return q;
}

/// Sorted (non-increasing) spectrum with entries in [lo, hi].
inline RVector random_spectrum(Rng& rng, Eigen::Index d, double lo = 0.0, double hi = 1.0) {
  std::vector<double> x(static_cast<std::size_t>(d));
  for (auto& v : x) v = uniform(rng, lo, hi);
  std::sort(x.begin(), x.end(), std::greater<>());
  return Eigen::Map<RVector>(x.data(), d);
}

/// Spectrum whose consecutive gaps are all at least `min_gap`.
inline RVector gapped_spectrum(Rng& rng, Eigen::Index d, double min_gap) {
  RVector ev(d);
  double v = uniform(rng, 0.0, 0.1);
  for (Eigen::Index j = d - 1; j >= 0; --j) {
    ev(j) = v;
    v += min_gap + uniform(rng, 0.0, min_gap);
  }
  return ev;
}

inline CMatrix matrix_with_spectrum(Rng& rng, const RVector& ev) {
  const CMatrix u = random_unitary(rng, ev.size());
  CMatrix m = u * ev.cast<Complex>().asDiagonal() * u.adjoint();
  return 0.5 * (m + m.adjoint());
}

inline CovarianceModel model_with_spectrum(Rng& rng, const RVector& ev) {
  return build_from_matrix(matrix_with_spectrum(rng, ev));
}

inline CovarianceModel diagonal_model(std::vector<double> ev) {
  const RVector v = Eigen::Map<RVector>(ev.data(), static_cast<Eigen::Index>(ev.size()));
  return build_from_matrix(CMatrix(v.cast<Complex>().asDiagonal()));
}

inline FeatureDataset random_dataset(Rng& rng, std::size_t n, Eigen::Index d) {
  std::vector<CVector> v;
  for (std::size_t i = 0; i < n; ++i) v.push_back(random_unit_vector(rng, d));
  return FeatureDataset(std::move(v));
}

inline CovarianceModel random_centered_model(Rng& rng, std::size_t n, Eigen::Index d) {
  return build_centered_covariance(random_dataset(rng, n, d));
}

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline double h(double x) { return (x <= 0.0 || x >= 1.0) ? 0.0 : -x * std::log(x) - (1 - x) * std::log(1 - x); }

/// Logistic-mixture CDF with centers delta + lambda_j / t2, written out directly.
inline double mixture_cdf(const RVector& ev, const RVector& w, double t1, double t2, double delta, double x) {
  double f = 0.0;
  for (Eigen::Index j = 0; j < ev.size(); ++j) f += w(j) * logistic((x - delta - ev(j) / t2) / t1);
  return f;
}

/// Inverse of mixture_cdf by plain bisection.
inline double mixture_quantile(const RVector& ev, const RVector& w, double t1, double t2, double delta, double p) {
  double lo = delta + ev.minCoeff() / t2 - 800.0 * t1;
  double hi = delta + ev.maxCoeff() / t2 + 800.0 * t1;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (mixture_cdf(ev, w, t1, t2, delta, mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// S samples placed at the exact quantile levels i/S, i = 1..S-1, plus one
/// sample far in the upper tail. Order statistic r sits at level r/S.
inline std::vector<double> exact_quantile_grid(const RVector& ev, const RVector& w, double t1, double t2,
                                               double delta, std::size_t s) {
  std::vector<double> out;
  for (std::size_t i = 1; i < s; ++i) {
    out.push_back(mixture_quantile(ev, w, t1, t2, delta, static_cast<double>(i) / static_cast<double>(s)));
  }
  out.push_back(delta + ev.maxCoeff() / t2 + 1000.0 * t1);
  return out;
}

inline RVector uniform_weights(Eigen::Index d) { return RVector::Constant(d, 1.0 / static_cast<double>(d)); }

/// Characteristic-polynomial coefficients of a Hermitian matrix by the
/// Faddeev-LeVerrier recursion: p(x) = sum_k c[k] x^k with c[d] = 1.
inline std::vector<double> charpoly(const CMatrix& a) {
  const Eigen::Index d = a.rows();
  std::vector<double> c(static_cast<std::size_t>(d + 1), 0.0);
  c[static_cast<std::size_t>(d)] = 1.0;
  CMatrix m = CMatrix::Zero(d, d);
  const CMatrix id = CMatrix::Identity(d, d);
  for (Eigen::Index k = 1; k <= d; ++k) {
    m = a * m + c[static_cast<std::size_t>(d - k + 1)] * id;
    c[static_cast<std::size_t>(d - k)] = -(a * m).trace().real() / static_cast<double>(k);
  }
  return c;
}

/// Real roots of a Hermitian characteristic polynomial, descending. d = 2 and
/// d = 3 use closed forms; d = 4 uses Ferrari's resolvent reduction.
inline std::vector<double> closed_form_eigenvalues(const CMatrix& a) {
  const auto c = charpoly(a);
  const Eigen::Index d = a.rows();
  std::vector<double> r;
  auto cubic = [](double b, double cc, double dd) {  // x^3 + b x^2 + cc x + dd, three real roots
    const double p = cc - b * b / 3.0;
    const double q = 2.0 * b * b * b / 27.0 - b * cc / 3.0 + dd;
    std::vector<double> out;
    if (std::abs(p) < 1e-300) {
      const double x = std::cbrt(-q) - b / 3.0;
      return std::vector<double>{x, x, x};
    }
    const double m = 2.0 * std::sqrt(std::max(0.0, -p / 3.0));
    const double arg = std::clamp(3.0 * q / (p * m), -1.0, 1.0);
    const double theta = std::acos(arg) / 3.0;
    for (int k = 0; k < 3; ++k) out.push_back(m * std::cos(theta - 2.0 * M_PI * k / 3.0) - b / 3.0);
    return out;
  };
  if (d == 2) {
    const double b = c[1], cc = c[0];
    const double disc = std::sqrt(std::max(0.0, b * b - 4 * cc));
    r = {(-b + disc) / 2, (-b - disc) / 2};
  } else if (d == 3) {
    r = cubic(c[2], c[1], c[0]);
  } else if (d == 4) {
    // depressed quartic y^4 + p y^2 + q y + s with x = y - b/4
    const double b = c[3], cc = c[2], dd = c[1], e = c[0];
    const double p = cc - 3 * b * b / 8;
    const double q = dd - b * cc / 2 + b * b * b / 8;
    const double s = e - b * dd / 4 + b * b * cc / 16 - 3 * b * b * b * b / 256;
    // resolvent cubic in z = 2m: z^3 + 2p z^2 + (p^2 - 4s) z - q^2, largest root
    const auto zs = cubic(2 * p, p * p - 4 * s, -q * q);
    const double z = std::max(0.0, *std::max_element(zs.begin(), zs.end()));
    const double w = std::sqrt(z);
    auto quad = [&](double bb, double c0) {
      const double disc = std::sqrt(std::max(0.0, bb * bb - 4 * c0));
      r.push_back((-bb + disc) / 2 - b / 4);
      r.push_back((-bb - disc) / 2 - b / 4);
    };
    if (w < 1e-12) {  // biquadratic
      const double disc = std::sqrt(std::max(0.0, p * p - 4 * s));
      for (double y2 : {(-p + disc) / 2, (-p - disc) / 2}) {
        const double y = std::sqrt(std::max(0.0, y2));
        r.push_back(y - b / 4);
        r.push_back(-y - b / 4);
      }
    } else {
      quad(w, (p + z) / 2 - q / (2 * w));
      quad(-w, (p + z) / 2 + q / (2 * w));
    }
  }
  std::sort(r.begin(), r.end(), std::greater<>());
  return r;
}

}  // namespace fermipca::testing
