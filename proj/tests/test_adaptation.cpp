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

#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "svback/adaptation.hpp"

namespace svback {
namespace {

Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }
Vector scalar_vec(double v) { return Vector::Constant(1, v); }

DomainStats stats(const Vector& mean, const Matrix& cov) { return {mean, cov, 100}; }

double min_eig(const Matrix& m) {
  return Eigen::SelfAdjointEigenSolver<Matrix>(m).eigenvalues().minCoeff();
}

std::vector<Vector> gaussian_sample(const Vector& mean, const Matrix& cov, int n,
                                    std::mt19937_64& rng) {
  const Matrix l = cov.llt().matrixL();
  std::vector<Vector> out;
  for (int i = 0; i < n; ++i)
    out.push_back(mean + l * oracle::random_vector(mean.size(), rng));
  return out;
}

// --- collect_domain_stats -------------------------------------------------

TEST(DomainStats, TwoPoints) {
  const std::vector<Vector> d{scalar_vec(0), scalar_vec(2)};
  const DomainStats st = collect_domain_stats(d);
  EXPECT_DOUBLE_EQ(st.mean(0), 1.0);
  EXPECT_NEAR(st.total_cov(0, 0), 1.0 + 1e-6, 1e-15);
  EXPECT_EQ(st.count, 2);
}

TEST(DomainStats, IdenticalPointsGiveRegularizerOnly) {
  const Vector p = (Vector(3) << 1, 2, 3).finished();
  const std::vector<Vector> d{p, p, p};
  const DomainStats st = collect_domain_stats(d);
  EXPECT_LT((st.total_cov - 1e-6 * Matrix::Identity(3, 3)).cwiseAbs().maxCoeff(),
            1e-18);
}

TEST(DomainStats, SampleCovarianceConverges) {
  std::mt19937_64 rng(61);
  const Matrix c = oracle::random_spd(5, rng);
  const DomainStats st =
      collect_domain_stats(gaussian_sample(Vector::Zero(5), c, 10000, rng));
  EXPECT_LT(oracle::relative_frobenius(st.total_cov, c), 0.05);
  EXPECT_LT((st.total_cov - st.total_cov.transpose()).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(DomainStats, Errors) {
  const std::vector<Vector> one{scalar_vec(1)};
  EXPECT_THROW(collect_domain_stats(one), Error);
  try {
    collect_domain_stats(one);
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInsufficientData);
  }
  const std::vector<Vector> ragged{scalar_vec(1), Vector::Zero(2)};
  EXPECT_THROW(collect_domain_stats(ragged), Error);
}

// --- feature alignment -----------------------------------------------------

TEST(Coral, IdentityWhenDomainsMatch) {
  std::mt19937_64 rng(67);
  const Matrix c = oracle::random_spd(4, rng);
  const Vector m = oracle::random_vector(4, rng);
  const Vector x = oracle::random_vector(4, rng);
  const Vector y = coral_align_features(stats(m, c), stats(m, c), x);
  EXPECT_LT((y - x).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Coral, ScalarSquareRoots) {
  const Vector y = coral_align_features(stats(scalar_vec(0), scalar(4)),
                                        stats(scalar_vec(0), scalar(1)),
                                        scalar_vec(2));
  EXPECT_NEAR(y(0), 1.0, 1e-12);
}

TEST(Coral, PushForwardMatchesInDomain) {
  std::mt19937_64 rng(71);
  const Eigen::Index d = 4;
  const Matrix c_out = oracle::random_spd(d, rng), c_in = oracle::random_spd(d, rng);
  const Vector m_out = oracle::random_vector(d, rng), m_in = oracle::random_vector(d, rng);
  const std::vector<Vector> xs = gaussian_sample(m_out, c_out, 10000, rng);
  const DomainStats out_stats = collect_domain_stats(xs);
  const CoralTransform t = make_coral_transform(out_stats, stats(m_in, c_in));
  const std::vector<Vector> ys = t.apply(xs);
  const Vector mean = linalg::mean_of(ys);
  EXPECT_LT((mean - m_in).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LT(oracle::relative_frobenius(linalg::scatter_of(ys, mean), c_in), 0.05);
}

TEST(Coral, SingularOutCovarianceIsConditioningError) {
  Matrix bad = Matrix::Zero(2, 2);
  bad(0, 0) = -1.0;
  try {
    coral_align_features(stats(Vector::Zero(2), bad),
                         stats(Vector::Zero(2), Matrix::Identity(2, 2)),
                         Vector::Zero(2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kConditioning);
  }
}

// --- CORAL+ ------------------------------------------------------------------

TEST(CoralPlus, ScalarUpdate) {
  EXPECT_NEAR(coral_plus_update(scalar(1), scalar(4), 0.5)(0, 0), 2.5, 1e-12);
  EXPECT_NEAR(coral_plus_update(scalar(1), scalar(0.25), 0.5)(0, 0), 1.0, 1e-12);
}

TEST(CoralPlus, MatchedDomainsLeaveModelUnchanged) {
  std::mt19937_64 rng(73);
  const GaussianPLDA m = oracle::random_model(5, rng);
  const GaussianPLDA a = coral_plus_adapt(m, model_marginal_stats(m), 0.7);
  EXPECT_LT((a.phi_b - m.phi_b).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LT((a.phi_w - m.phi_w).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LT((a.mu - m.mu).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(CoralPlus, GammaZeroReturnsOriginalAndRecenters) {
  std::mt19937_64 rng(79);
  const GaussianPLDA m = oracle::random_model(4, rng);
  const DomainStats in = stats(oracle::random_vector(4, rng), oracle::random_spd(4, rng));
  const GaussianPLDA a = coral_plus_adapt(m, in, 0.0);
  EXPECT_LT((a.phi_b - m.phi_b).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((a.phi_w - m.phi_w).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(a.mu, in.mean);
}

TEST(CoralPlus, VarianceNeverShrinksAndIsMonotoneInGamma) {
  std::mt19937_64 rng(83);
  for (int trial = 0; trial < 40; ++trial) {
    const Eigen::Index d = 1 + trial % 6;
    const GaussianPLDA m = oracle::random_model(d, rng);
    const DomainStats in =
        stats(oracle::random_vector(d, rng), 3.0 * oracle::random_spd(d, rng));
    GaussianPLDA prev = m;
    for (double g = 0.0; g <= 1.0 + 1e-12; g += 0.25) {
      const GaussianPLDA a = coral_plus_adapt(m, in, g);
      a.validate(1e-10);
      EXPECT_GE(min_eig(a.phi_b - m.phi_b), -1e-10);
      EXPECT_GE(min_eig(a.phi_w - m.phi_w), -1e-10);
      EXPECT_GE(min_eig(a.phi_b - prev.phi_b), -1e-10);
      EXPECT_GE(min_eig(a.phi_w - prev.phi_w), -1e-10);
      prev = a;
    }
  }
}

TEST(CoralPlus, ContinuousInGamma) {
  std::mt19937_64 rng(89);
  const GaussianPLDA m = oracle::random_model(4, rng);
  const DomainStats in = stats(Vector::Zero(4), 2.0 * oracle::random_spd(4, rng));
  for (double g = 0.0; g < 0.95; g += 0.1) {
    const GaussianPLDA a = coral_plus_adapt(m, in, g);
    const GaussianPLDA b = coral_plus_adapt(m, in, g + 1e-7);
    EXPECT_LT((a.phi_b - b.phi_b).norm(), 1e-4);
    EXPECT_LT((a.phi_w - b.phi_w).norm(), 1e-4);
  }
}

TEST(CoralPlus, Errors) {
  std::mt19937_64 rng(97);
  GaussianPLDA m = oracle::random_model(2, rng);
  const DomainStats in = stats(Vector::Zero(2), Matrix::Identity(2, 2));
  EXPECT_THROW(coral_plus_adapt(m, in, 1.5), Error);
  m.phi_w = -Matrix::Identity(2, 2);
  try {
    coral_plus_adapt(m, in, 0.5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInvalidModel);
  }
}

// --- excess variance -------------------------------------------------------

/// Whitened-basis oracle via Cholesky of the model total and a plain
/// symmetric eigendecomposition: returns the expected adapted total.
Matrix expected_total(const Matrix& total, const Matrix& observed) {
  const Matrix l = total.llt().matrixL();
  const Matrix li = l.inverse();
  const Matrix m = li * observed * li.transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.transpose()));
  const Vector lam = es.eigenvalues().cwiseMax(1.0);
  return l * es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose() *
         l.transpose();
}

TEST(ExcessVariance, ScalarSplit) {
  const GaussianPLDA m{scalar_vec(0), scalar(0.5), scalar(0.5)};
  const GaussianPLDA a = excess_variance_adapt(m, stats(scalar_vec(0), scalar(2)));
  EXPECT_NEAR(a.phi_w(0, 0), 1.25, 1e-12);
  EXPECT_NEAR(a.phi_b(0, 0), 0.75, 1e-12);
}

TEST(ExcessVariance, NoExcessLeavesModelUnchanged) {
  std::mt19937_64 rng(101);
  const GaussianPLDA m = oracle::random_model(4, rng);
  const GaussianPLDA a =
      excess_variance_adapt(m, stats(m.mu, 0.5 * m.total_covariance()));
  EXPECT_LT((a.phi_b - m.phi_b).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((a.phi_w - m.phi_w).cwiseAbs().maxCoeff(), 1e-12);
  const GaussianPLDA same = excess_variance_adapt(m, model_marginal_stats(m));
  EXPECT_LT((same.phi_b - m.phi_b).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LT((same.phi_w - m.phi_w).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(ExcessVariance, TotalMatchesWhitenedMaxOracle) {
  std::mt19937_64 rng(103);
  for (int trial = 0; trial < 40; ++trial) {
    const Eigen::Index d = 1 + trial % 7;
    const GaussianPLDA m = oracle::random_model(d, rng);
    const DomainStats in = stats(Vector::Zero(d), 2.0 * oracle::random_spd(d, rng));
    const GaussianPLDA a = excess_variance_adapt(m, in, {0.3, 0.7});
    EXPECT_LT((a.total_covariance() - expected_total(m.total_covariance(), in.total_cov))
                  .cwiseAbs()
                  .maxCoeff(),
              1e-8);
    a.validate(1e-10);
    EXPECT_GE(min_eig(a.phi_b), -1e-10);
  }
}

TEST(ExcessVariance, Idempotent) {
  std::mt19937_64 rng(107);
  for (int trial = 0; trial < 20; ++trial) {
    const GaussianPLDA m = oracle::random_model(5, rng);
    const DomainStats in = stats(oracle::random_vector(5, rng), 2.0 * oracle::random_spd(5, rng));
    const GaussianPLDA once = excess_variance_adapt(m, in);
    const GaussianPLDA twice = excess_variance_adapt(once, in);
    EXPECT_LT((once.phi_b - twice.phi_b).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LT((once.phi_w - twice.phi_w).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(ExcessVariance, SharesMustBeOnSimplex) {
  const GaussianPLDA m{scalar_vec(0), scalar(0.5), scalar(0.5)};
  const DomainStats in = stats(scalar_vec(0), scalar(2));
  for (ExcessVarianceShares s : {ExcessVarianceShares{0.5, 0.6},
                                 ExcessVarianceShares{-0.1, 1.1}}) {
    try {
      excess_variance_adapt(m, in, s);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::kParameter);
    }
  }
}

}  // namespace
}  // namespace svback
