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

#include <cmath>
#include <complex>
#include <limits>

#include <Eigen/Dense>

namespace fermipca {

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;

namespace numeric {

/// Exponent magnitude past which exp() is treated as saturated.
inline constexpr double kSaturation = 700.0;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// 1 / (1 + e^{-x}), branch-split so neither branch overflows.
inline double logistic(double x) {
  if (x > kSaturation) return 1.0;
  if (x < -kSaturation) return 0.0;
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// log(1 + e^x).
inline double log1p_exp(double x) {
  if (x > kSaturation) return x;
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  if (x < -kSaturation) return 0.0;
  return std::log1p(std::exp(x));
}

/// log(u / (1 - u)) for u in (0, 1).
inline double logit(double u) { return std::log(u) - std::log1p(-u); }

/// Binary (Fermi-Dirac) entropy -x log x - (1-x) log(1-x), zero at the endpoints.
inline double binary_entropy(double x) {
  if (x <= 0.0 || x >= 1.0) return 0.0;
  return -x * std::log(x) - (1.0 - x) * std::log1p(-x);
}

/// sech(x) without overflowing cosh for large |x|.
inline double sech(double x) {
  const double a = std::abs(x);
  if (a > kSaturation) return 0.0;
  const double e = std::exp(-a);
  return 2.0 * e / (1.0 + e * e);
}

/// Largest singular value of a dense complex matrix.
inline double operator_norm(const CMatrix& a) {
  if (a.size() == 0) return 0.0;
  Eigen::JacobiSVD<CMatrix> svd(a);
  return svd.singularValues()(0);
}

/// exp(i * t * H) for Hermitian H via its eigendecomposition.
inline CMatrix hermitian_expi(const CMatrix& h, double t) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
  const CMatrix& v = es.eigenvectors();
  CVector phases(v.cols());
  for (Eigen::Index j = 0; j < v.cols(); ++j) {
    phases(j) = std::exp(Complex(0.0, t * es.eigenvalues()(j)));
  }
  return v * phases.asDiagonal() * v.adjoint();
}

}  // namespace numeric
}  // namespace fermipca
