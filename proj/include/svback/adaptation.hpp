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

// Unsupervised domain adaptation from unlabeled in-domain embeddings:
//  - feature-level correlation alignment (CORAL),
//  - model-level correlation alignment of the PLDA covariances (CORAL+),
//  - excess-variance PLDA adaptation (the Kaldi-style recipe).
// All three recenter the model on the in-domain mean.

#pragma once

#include <algorithm>
#include <span>
#include <vector>

#include "svback/common.hpp"
#include "svback/linalg.hpp"
#include "svback/plda.hpp"

namespace svback {

/// In-domain second-order statistics.
struct DomainStats {
  Vector mean;
  Matrix total_cov;
  long count = 0;

  Eigen::Index dim() const { return mean.size(); }
};

/// Mean and biased (denominator n) covariance, plus epsilon * I with
/// epsilon = 1e-6 * trace / d.
inline DomainStats collect_domain_stats(std::span<const Vector> data) {
  require(data.size() >= 2, ErrorKind::kInsufficientData,
          "domain statistics need at least 2 vectors, got " +
              std::to_string(data.size()));
  const Eigen::Index d = data.front().size();
  for (const Vector& x : data) {
    require_dim(x.size(), d, "domain statistics input");
    require(x.allFinite(), ErrorKind::kInvalidData,
            "domain statistics: non-finite input");
  }
  DomainStats st;
  st.mean = linalg::mean_of(data);
  st.total_cov = linalg::regularized(linalg::scatter_of(data, st.mean));
  st.count = static_cast<long>(data.size());
  return st;
}

/// Stats describing the marginal of a PLDA model, usable as the out-of-domain
/// side of feature alignment.
inline DomainStats model_marginal_stats(const GaussianPLDA& model,
                                        long count = 0) {
  return {model.mu, model.total_covariance(), count};
}

/// x -> A (x - out_mean) + in_mean with A = C_in^(1/2) C_out^(-1/2).
struct CoralTransform {
  Matrix a;
  Vector out_mean;
  Vector in_mean;

  Vector apply(const Vector& x) const {
    require_dim(x.size(), out_mean.size(), "coral input");
    return a * (x - out_mean) + in_mean;
  }

  std::vector<Vector> apply(std::span<const Vector> xs) const {
    std::vector<Vector> out;
    out.reserve(xs.size());
    for (const Vector& x : xs) out.push_back(apply(x));
    return out;
  }
};

namespace detail {

inline void check_stats(const DomainStats& st, const char* what) {
  require(st.mean.size() >= 1 && st.total_cov.rows() == st.mean.size() &&
              st.total_cov.cols() == st.mean.size(),
          ErrorKind::kShape, std::string(what) + ": inconsistent shapes");
  require(st.mean.allFinite() && st.total_cov.allFinite(),
          ErrorKind::kInvalidData, std::string(what) + ": non-finite values");
}

/// C_in^(1/2) C_out^(-1/2); throws kConditioning on a singular C_out.
inline Matrix alignment_matrix(const Matrix& c_out, const Matrix& c_in) {
  const Matrix out_reg = linalg::regularized_if_needed(c_out);
  const double lo = linalg::min_eigenvalue(out_reg);
  if (!(lo > 0.0))
    throw Error(ErrorKind::kConditioning,
                "out-of-domain covariance is singular after regularization");
  return linalg::principal_sqrt(c_in) * linalg::inverse_principal_sqrt(out_reg);
}

}  // namespace detail

inline CoralTransform make_coral_transform(const DomainStats& out_stats,
                                           const DomainStats& in_stats) {
  detail::check_stats(out_stats, "out-of-domain stats");
  detail::check_stats(in_stats, "in-domain stats");
  require_dim(in_stats.dim(), out_stats.dim(), "in-domain stats");
  return {detail::alignment_matrix(out_stats.total_cov, in_stats.total_cov),
          out_stats.mean, in_stats.mean};
}

inline Vector coral_align_features(const DomainStats& out_stats,
                                   const DomainStats& in_stats,
                                   const Vector& x) {
  return make_coral_transform(out_stats, in_stats).apply(x);
}

/// Model-level equivalent of training on CORAL-aligned features: the PLDA
/// pushed through the alignment map (mu -> in mean, phi -> A phi A^T).
inline GaussianPLDA coral_align_model(const GaussianPLDA& model,
                                      const DomainStats& in_stats) {
  model.validate(1e-8);
  detail::check_stats(in_stats, "in-domain stats");
  require_dim(in_stats.dim(), model.dim(), "in-domain stats");
  const Matrix a =
      detail::alignment_matrix(model.total_covariance(), in_stats.total_cov);
  GaussianPLDA out;
  out.mu = in_stats.mean;
  out.phi_b = linalg::symmetrize(a * model.phi_b * a.transpose());
  out.phi_w = linalg::symmetrize(a * model.phi_w * a.transpose());
  return out;
}

/// One CORAL+ covariance update.  With P such that P^T phi P = I and
/// P^T pseudo P = diag(lambda):
///
///   phi_new = phi + P^-T diag(gamma * max(lambda - 1, 0)) P^-1,
///
/// where P^-1 = P^T phi.  The increment is PSD, so variance never shrinks.
inline Matrix coral_plus_update(const Matrix& phi, const Matrix& pseudo,
                                double gamma) {
  require(gamma >= 0.0 && gamma <= 1.0, ErrorKind::kParameter,
          "gamma must lie in [0, 1]");
  require(phi.rows() == pseudo.rows() && phi.cols() == pseudo.cols(),
          ErrorKind::kShape, "coral_plus_update: shape mismatch");
  const Matrix base = linalg::regularized_if_needed(phi);
  const auto sd = linalg::simultaneous_diagonalize(pseudo, base);
  const Vector gain =
      gamma * (sd.values.array() - 1.0).max(0.0).matrix();
  const Matrix back = base * sd.transform;  // P^-T
  return linalg::symmetrize(phi + back * gain.asDiagonal() * back.transpose());
}

/// CORAL+ adaptation of both PLDA covariances toward the in-domain total
/// covariance, interpolated by gamma in [0, 1]; mu moves to the in-domain
/// mean.
inline GaussianPLDA coral_plus_adapt(const GaussianPLDA& model,
                                     const DomainStats& in_stats,
                                     double gamma = 0.5) {
  require(gamma >= 0.0 && gamma <= 1.0, ErrorKind::kParameter,
          "gamma must lie in [0, 1]");
  model.validate(1e-8);
  detail::check_stats(in_stats, "in-domain stats");
  require_dim(in_stats.dim(), model.dim(), "in-domain stats");
  const Matrix a =
      detail::alignment_matrix(model.total_covariance(), in_stats.total_cov);
  const Matrix pseudo_b = linalg::symmetrize(a * model.phi_b * a.transpose());
  const Matrix pseudo_w = linalg::symmetrize(a * model.phi_w * a.transpose());
  GaussianPLDA out;
  out.mu = in_stats.mean;
  out.phi_b = coral_plus_update(model.phi_b, pseudo_b, gamma);
  out.phi_w = coral_plus_update(model.phi_w, pseudo_w, gamma);
  return out;
}

struct ExcessVarianceShares {
  double within = 0.75;
  double between = 0.25;
};

/// Adds in-domain variance the model does not explain.  In the basis where
/// the model total covariance is I and the in-domain covariance is
/// diag(lambda), every direction with lambda > 1 receives lambda - 1, split
/// between phi_w and phi_b by the shares.
inline GaussianPLDA excess_variance_adapt(const GaussianPLDA& model,
                                          const DomainStats& in_stats,
                                          ExcessVarianceShares shares = {}) {
  require(shares.within >= 0.0 && shares.between >= 0.0 &&
              std::abs(shares.within + shares.between - 1.0) <= 1e-12,
          ErrorKind::kParameter,
          "shares must be non-negative and sum to 1");
  model.validate(1e-8);
  detail::check_stats(in_stats, "in-domain stats");
  require_dim(in_stats.dim(), model.dim(), "in-domain stats");
  const Matrix total = model.total_covariance();
  const auto sd = linalg::simultaneous_diagonalize(in_stats.total_cov, total);
  const Vector excess = (sd.values.array() - 1.0).max(0.0).matrix();
  const Matrix back = total * sd.transform;
  const Matrix added =
      linalg::symmetrize(back * excess.asDiagonal() * back.transpose());
  GaussianPLDA out;
  out.mu = in_stats.mean;
  out.phi_w = linalg::symmetrize(model.phi_w + shares.within * added);
  out.phi_b = linalg::symmetrize(model.phi_b + shares.between * added);
  return out;
}

}  // namespace svback
