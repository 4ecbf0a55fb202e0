// Copyright 2026  The svback Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// Small dense symmetric-matrix toolbox shared by the PLDA, adaptation and
// synthesis code.  Everything here works in double precision.

#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>

#include <Eigen/Dense>

#include "svback/common.hpp"

namespace svback::linalg {

inline Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

inline double max_asymmetry(const Matrix& m) {
  return (m - m.transpose()).cwiseAbs().maxCoeff();
}

inline bool all_finite(const Vector& v) { return v.allFinite(); }

/// Eigen-decomposition of a symmetric matrix, eigenvalues ascending.
struct SymEig {
  Vector values;
  Matrix vectors;
};

inline SymEig sym_eig(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m));
  if (es.info() != Eigen::Success)
    throw Error(ErrorKind::kConditioning, "symmetric eigensolver failed");
  return {es.eigenvalues(), es.eigenvectors()};
}

inline double min_eigenvalue(const Matrix& m) {
  return sym_eig(m).values.minCoeff();
}

/// Rebuilds V diag(f(lambda)) V^T.
template <typename F>
Matrix spectral_map(const Matrix& m, F&& f) {
  SymEig e = sym_eig(m);
  Vector mapped = e.values.unaryExpr(std::forward<F>(f));
  return symmetrize(e.vectors * mapped.asDiagonal() * e.vectors.transpose());
}

/// Principal (symmetric PSD) square root; tiny negative eigenvalues from
/// rounding are clamped to zero.
inline Matrix principal_sqrt(const Matrix& m) {
  return spectral_map(m, [](double l) { return std::sqrt(std::max(l, 0.0)); });
}

inline Matrix inverse_principal_sqrt(const Matrix& m) {
  SymEig e = sym_eig(m);
  if (e.values.minCoeff() <= 0.0)
    throw Error(ErrorKind::kConditioning,
                "matrix is not positive definite (min eigenvalue " +
                    std::to_string(e.values.minCoeff()) + ")");
  Vector mapped = e.values.cwiseSqrt().cwiseInverse();
  return symmetrize(e.vectors * mapped.asDiagonal() * e.vectors.transpose());
}

/// Clamps eigenvalues from below.
inline Matrix floor_eigenvalues(const Matrix& m, double floor) {
  return spectral_map(m, [floor](double l) { return std::max(l, floor); });
}

/// Conditioning guard: epsilon = 1e-6 * trace / d.  A zero-trace matrix
/// falls back to an absolute 1e-6.
inline double regularizer(const Matrix& m) {
  const double eps = 1e-6 * m.trace() / static_cast<double>(m.rows());
  return eps > 0.0 ? eps : 1e-6;
}

inline Matrix regularized(const Matrix& m) {
  return m + regularizer(m) * Matrix::Identity(m.rows(), m.cols());
}

/// Adds the regularizer only when the matrix is not comfortably positive
/// definite (smallest eigenvalue at or below epsilon).
inline Matrix regularized_if_needed(const Matrix& m) {
  if (min_eigenvalue(m) > regularizer(m)) return m;
  return regularized(m);
}

/// Simultaneous diagonalization of a symmetric pair (a, b) with b positive
/// definite: returns P with P^T b P = I and P^T a P = diag(values).
struct SimultaneousDiag {
  Vector values;
  Matrix transform;
};

inline SimultaneousDiag simultaneous_diagonalize(const Matrix& a,
                                                 const Matrix& b) {
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(
      symmetrize(a), symmetrize(b), Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
  if (es.info() != Eigen::Success)
    throw Error(ErrorKind::kConditioning,
                "generalized eigensolver failed (second matrix not positive "
                "definite?)");
  return {es.eigenvalues(), es.eigenvectors()};
}

/// log N(x; mean, cov) through a Cholesky factorization.
inline double gaussian_log_density(const Vector& x, const Vector& mean,
                                   const Matrix& cov) {
  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() != Eigen::Success)
    throw Error(ErrorKind::kInvalidModel,
                "covariance is not positive definite");
  const Vector z = llt.matrixL().solve(x - mean);
  const double log_det =
      2.0 * llt.matrixLLT().diagonal().array().log().sum();
  const double d = static_cast<double>(x.size());
  return -0.5 * (d * std::log(2.0 * std::numbers::pi) + log_det +
                 z.squaredNorm());
}

inline Vector mean_of(std::span<const Vector> data) {
  Vector m = Vector::Zero(data.front().size());
  for (const Vector& x : data) m += x;
  return m / static_cast<double>(data.size());
}

/// Biased (denominator n) sample covariance about the given mean.
inline Matrix scatter_of(std::span<const Vector> data, const Vector& mean) {
  const Eigen::Index d = mean.size();
  Matrix s = Matrix::Zero(d, d);
  for (const Vector& x : data) {
    const Vector c = x - mean;
    s.selfadjointView<Eigen::Lower>().rankUpdate(c);
  }
  s.triangularView<Eigen::StrictlyUpper>() = s.transpose();
  return s / static_cast<double>(data.size());
}

}  // namespace svback::linalg
