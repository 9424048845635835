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
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fermipca/errors.hpp"
#include "fermipca/numeric.hpp"
#include "fermipca/rng.hpp"

namespace fermipca {

/// Normalized feature states |phi_i>, all of one dimension d >= 2.
class FeatureDataset {
 public:
  /// Tolerance on | ||phi|| - 1 | for accepted feature states.
  static constexpr double kNormTolerance = 1e-6;

  explicit FeatureDataset(std::vector<CVector> vectors) : vectors_(std::move(vectors)) {
    detail::require(!vectors_.empty(), "dataset must contain at least one vector");
    const Eigen::Index d = vectors_.front().size();
    detail::require(d >= 2, "feature dimension must be at least 2");
    for (std::size_t i = 0; i < vectors_.size(); ++i) {
      if (vectors_[i].size() != d) {
        throw ValidationError("dimension mismatch at vector " + std::to_string(i) + ": expected " +
                              std::to_string(d) + ", got " + std::to_string(vectors_[i].size()));
      }
      const double norm = vectors_[i].norm();
      if (!std::isfinite(norm) || std::abs(norm - 1.0) > kNormTolerance) {
        throw ValidationError("vector " + std::to_string(i) + " is not normalized (norm " +
                              std::to_string(norm) + ")");
      }
    }
  }

  Eigen::Index dimension() const { return vectors_.front().size(); }
  std::size_t size() const { return vectors_.size(); }
  const std::vector<CVector>& vectors() const { return vectors_; }
  const CVector& operator[](std::size_t i) const { return vectors_[i]; }

 private:
  std::vector<CVector> vectors_;
};

/// Hermitian PSD covariance operator with its cached spectral decomposition.
///
/// Eigenvalues are sorted non-increasing; ties keep the order in which the
/// eigensolver produced them. Immutable after construction.
class CovarianceModel {
 public:
  static constexpr double kHermitianTolerance = 1e-12;
  static constexpr double kPsdTolerance = 1e-10;

  const CMatrix& matrix() const { return matrix_; }
  const RVector& eigenvalues() const { return eigenvalues_; }
  const CMatrix& eigenvectors() const { return eigenvectors_; }
  double eigenvalue(Eigen::Index j) const { return eigenvalues_(j); }
  Eigen::Index dimension() const { return eigenvalues_.size(); }
  double total_variance() const { return total_variance_; }
  const std::optional<CVector>& mean_vector() const { return mean_; }
  double mean_norm_sq() const { return alpha_; }
  bool centered() const { return mean_.has_value(); }

  /// Fingerprint of the eigenbasis and spectrum, used to pair filters and
  /// thresholds with the model they were computed from.
  std::uint64_t fingerprint() const { return fingerprint_; }

  /// Coefficients c_j = <u_j|v> in the eigenbasis.
  CVector coefficients(const CVector& v) const { return eigenvectors_.adjoint() * v; }

  /// Dense U diag(w) U^dagger for a diagonal (eigenbasis) weight vector.
  CMatrix to_dense(const RVector& weights) const {
    return eigenvectors_ * weights.cast<Complex>().asDiagonal() * eigenvectors_.adjoint();
  }

  /// Builds from a Hermitian PSD matrix; the mean branch is left empty.
  static CovarianceModel from_matrix(const CMatrix& matrix) {
    return CovarianceModel(matrix, std::nullopt);
  }

  /// Builds from stored spectral data (model files). The data is checked for
  /// consistency but used verbatim so round trips are bit exact.
  static CovarianceModel from_decomposition(CMatrix matrix, RVector eigenvalues,
                                            CMatrix eigenvectors, std::optional<CVector> mean) {
    const Eigen::Index d = matrix.rows();
    detail::require(d >= 2 && matrix.cols() == d, "model matrix must be square with d >= 2");
    detail::require(eigenvalues.size() == d && eigenvectors.rows() == d && eigenvectors.cols() == d,
                    "model spectral data has inconsistent dimensions");
    for (Eigen::Index j = 1; j < d; ++j) {
      detail::require(eigenvalues(j) <= eigenvalues(j - 1), "model eigenvalues are not sorted");
    }
    detail::require(eigenvalues(d - 1) >= 0.0, "model eigenvalues must be non-negative");
    const CMatrix gram = eigenvectors.adjoint() * eigenvectors;
    detail::require((gram - CMatrix::Identity(d, d)).cwiseAbs().maxCoeff() <= 1e-10,
                    "model eigenvectors are not orthonormal");
    const CMatrix rebuilt =
        eigenvectors * eigenvalues.cast<Complex>().asDiagonal() * eigenvectors.adjoint();
    detail::require((rebuilt - matrix).cwiseAbs().maxCoeff() <= 1e-10,
                    "model eigendecomposition does not reproduce the matrix");
    if (mean) detail::require(mean->size() == d, "mean vector dimension mismatch");
    CovarianceModel m;
    m.matrix_ = std::move(matrix);
    m.eigenvalues_ = std::move(eigenvalues);
    m.eigenvectors_ = std::move(eigenvectors);
    m.mean_ = std::move(mean);
    m.finish();
    return m;
  }

 private:
  CovarianceModel() = default;

  CovarianceModel(const CMatrix& matrix, std::optional<CVector> mean) : mean_(std::move(mean)) {
    const Eigen::Index d = matrix.rows();
    detail::require(d >= 2 && matrix.cols() == d, "covariance matrix must be square with d >= 2");
    detail::require(matrix.allFinite(), "covariance matrix has non-finite entries");
    const double scale = std::max(1.0, matrix.cwiseAbs().maxCoeff());
    const double asym = (matrix - matrix.adjoint()).cwiseAbs().maxCoeff();
    if (asym > kHermitianTolerance * scale) {
      throw ValidationError("covariance matrix is not Hermitian (max asymmetry " +
                            std::to_string(asym) + ")");
    }
    matrix_ = (matrix + matrix.adjoint()) / 2.0;

    Eigen::SelfAdjointEigenSolver<CMatrix> es(matrix_);
    if (es.info() != Eigen::Success) throw NumericError("Hermitian eigensolver failed");
    const RVector& raw = es.eigenvalues();

    std::vector<Eigen::Index> order(static_cast<std::size_t>(d));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return raw(a) > raw(b); });

    eigenvalues_.resize(d);
    eigenvectors_.resize(d, d);
    for (Eigen::Index j = 0; j < d; ++j) {
      double lam = raw(order[static_cast<std::size_t>(j)]);
      if (lam < 0.0) {
        if (lam < -kPsdTolerance * scale) {
          throw ValidationError("covariance matrix is not PSD (eigenvalue " + std::to_string(lam) +
                                ")");
        }
        lam = 0.0;
      }
      eigenvalues_(j) = lam;
      eigenvectors_.col(j) = es.eigenvectors().col(order[static_cast<std::size_t>(j)]);
    }
    finish();
  }

  void finish() {
    total_variance_ = eigenvalues_.sum();
    alpha_ = mean_ ? mean_->squaredNorm() : 0.0;
    std::uint64_t h = fnv1a(eigenvalues_.data(), sizeof(double) * eigenvalues_.size());
    h = fnv1a(eigenvectors_.data(), sizeof(Complex) * eigenvectors_.size(), h);
    fingerprint_ = h;
  }

  friend CovarianceModel build_centered_covariance(const FeatureDataset&);
  friend CovarianceModel build_uncentered_covariance(const FeatureDataset&);

  CMatrix matrix_;
  RVector eigenvalues_;
  CMatrix eigenvectors_;
  double total_variance_ = 0.0;
  std::optional<CVector> mean_;
  double alpha_ = 0.0;
  std::uint64_t fingerprint_ = 0;
};

/// Empirical feature-state average (1/N) sum |phi_i><phi_i|.
inline CMatrix feature_state_average(const FeatureDataset& data) {
  const Eigen::Index d = data.dimension();
  CMatrix rho = CMatrix::Zero(d, d);
  for (const auto& v : data.vectors()) rho.noalias() += v * v.adjoint();
  return rho / static_cast<double>(data.size());
}

/// Subnormalized feature-space mean |m> = (1/N) sum |phi_i>.
inline CVector feature_mean(const FeatureDataset& data) {
  CVector m = CVector::Zero(data.dimension());
  for (const auto& v : data.vectors()) m += v;
  return m / static_cast<double>(data.size());
}

/// Centered covariance C = (1/N) sum |phi_i - m><phi_i - m|, which equals the
/// feature-state average minus |m><m|. The mean branch is stored as is.
inline CovarianceModel build_centered_covariance(const FeatureDataset& data) {
  const CVector m = feature_mean(data);
  const Eigen::Index d = data.dimension();
  // Accumulating centered outer products keeps C exactly PSD in exact
  // arithmetic and avoids cancellation in the rho - |m><m| form.
  CMatrix c = CMatrix::Zero(d, d);
  for (const auto& v : data.vectors()) {
    const CVector z = v - m;
    c.noalias() += z * z.adjoint();
  }
  c /= static_cast<double>(data.size());
  return CovarianceModel(c, m);
}

/// Uncentered variant: C is the feature-state average itself, no mean branch.
inline CovarianceModel build_uncentered_covariance(const FeatureDataset& data) {
  return CovarianceModel(feature_state_average(data), std::nullopt);
}

inline CovarianceModel build_from_matrix(const CMatrix& matrix) {
  return CovarianceModel::from_matrix(matrix);
}

/// Nonzero spectra of C (feature space) and of K_c / N (Gram space), each
/// sorted non-increasing. The two are computed along independent routes.
struct KernelSpectra {
  std::vector<double> covariance;
  std::vector<double> centered_gram;
};

inline KernelSpectra kernel_spectrum_check(const FeatureDataset& data,
                                           double zero_tolerance = 1e-12) {
  const auto n = static_cast<Eigen::Index>(data.size());
  const Eigen::Index d = data.dimension();
  CMatrix phi(d, n);
  for (Eigen::Index i = 0; i < n; ++i) phi.col(i) = data[static_cast<std::size_t>(i)];

  auto nonzero_desc = [&](const RVector& ev) {
    std::vector<double> out;
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
      if (ev(i) > zero_tolerance) out.push_back(ev(i));
    }
    std::sort(out.begin(), out.end(), std::greater<>());
    return out;
  };

  KernelSpectra result;
  // Feature-space route: rho_bar - |m><m|.
  const CVector m = phi.rowwise().sum() / static_cast<double>(n);
  const CMatrix c = phi * phi.adjoint() / static_cast<double>(n) - m * m.adjoint();
  result.covariance = nonzero_desc(Eigen::SelfAdjointEigenSolver<CMatrix>(c).eigenvalues());

  // Gram-space route: H K H / N with K_ij = <phi_i|phi_j>.
  const CMatrix k = phi.adjoint() * phi;
  const CMatrix h = CMatrix::Identity(n, n) - CMatrix::Constant(n, n, 1.0 / static_cast<double>(n));
  const CMatrix kc = h * k * h / static_cast<double>(n);
  result.centered_gram = nonzero_desc(Eigen::SelfAdjointEigenSolver<CMatrix>(kc).eigenvalues());
  return result;
}

/// Eigenbasis weights lambda_j / V_C of the covariance probe rho_C = C / Tr C.
inline RVector covariance_probe_weights(const CovarianceModel& model) {
  if (!(model.total_variance() > 0.0)) {
    throw ValidationError("degenerate dataset: total variance is zero, covariance probe undefined");
  }
  return model.eigenvalues() / model.total_variance();
}

/// Dense covariance probe rho_C = C / Tr(C).
inline CMatrix covariance_probe(const CovarianceModel& model) {
  return model.to_dense(covariance_probe_weights(model));
}

/// A test feature state after LCU centering against the model mean.
struct CenteredInput {
  CVector raw;
  CVector centered;
  double nu = 0.0;
  double success_probability = 0.0;

  /// The input coincides with the feature-space mean.
  bool degenerate() const { return nu <= kDegenerateNu; }

  static constexpr double kDegenerateNu = 1e-24;
};

inline CenteredInput center_input(const CovarianceModel& model, const CVector& raw) {
  if (!model.mean_vector()) {
    throw ValidationError("model has no mean vector; build it in centered mode to center inputs");
  }
  detail::require(raw.size() == model.dimension(), "input dimension does not match the model");
  CenteredInput in;
  in.raw = raw;
  in.centered = raw - *model.mean_vector();
  in.nu = in.centered.squaredNorm();
  in.success_probability = in.nu / 4.0;
  return in;
}

/// Centers against the mean when the model has one; otherwise passes the raw
/// vector through unchanged (uncentered PCA).
inline CenteredInput prepare_input(const CovarianceModel& model, const CVector& raw) {
  if (model.mean_vector()) return center_input(model, raw);
  detail::require(raw.size() == model.dimension(), "input dimension does not match the model");
  CenteredInput in;
  in.raw = raw;
  in.centered = raw;
  in.nu = raw.squaredNorm();
  in.success_probability = in.nu / 4.0;
  return in;
}

}  // namespace fermipca
