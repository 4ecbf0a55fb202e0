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

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "svback/plda.hpp"

namespace svback {
namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

GaussianPLDA scalar_model(double mu, double b, double w) {
  return {vec({mu}), Matrix::Constant(1, 1, b), Matrix::Constant(1, 1, w)};
}

template <typename F>
ErrorKind kind_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected an svback::Error";
  return ErrorKind::kUsage;
}

// --- length_normalize -------------------------------------------------------

TEST(LengthNormalize, HandCases) {
  EXPECT_DOUBLE_EQ(length_normalize(vec({5}))(0), 1.0);
  EXPECT_DOUBLE_EQ(length_normalize(vec({-5}))(0), -1.0);
  const Vector y = length_normalize(vec({3, 4}));
  EXPECT_NEAR(y(0), 3 * std::sqrt(2.0) / 5, 1e-15);
  EXPECT_NEAR(y(1), 4 * std::sqrt(2.0) / 5, 1e-15);
}

TEST(LengthNormalize, NormIsSqrtDimAndIdempotent) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 100; ++i) {
    const Eigen::Index d = 1 + i % 17;
    const Vector x = oracle::random_vector(d, rng, 3.0);
    const Vector y = length_normalize(x);
    EXPECT_NEAR(y.norm(), std::sqrt(static_cast<double>(d)), 1e-12);
    EXPECT_LT((length_normalize(y) - y).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(LengthNormalize, ZeroVectorIsDegenerate) {
  EXPECT_EQ(kind_of([] { length_normalize(Vector::Zero(3)); }),
            ErrorKind::kDegenerateInput);
}

// --- fit_preprocessor -------------------------------------------------------

TEST(Preprocessor, ScalarVarianceFour) {
  // Points +-2 have mean 0 and biased variance 4.
  const std::vector<Vector> data{vec({2}), vec({-2}), vec({2}), vec({-2})};
  const Preprocessor p = fit_preprocessor(data, false);
  EXPECT_NEAR(p.shift(0), 0.0, 1e-15);
  EXPECT_NEAR(p.transform(0, 0), 0.5, 1e-12);
}

TEST(Preprocessor, SelfWhiteningGivesIdentityCovariance) {
  std::mt19937_64 rng(7);
  const Eigen::Index d = 6;
  const Matrix mix = oracle::random_spd(d, rng, 0.2);
  std::vector<Vector> data;
  for (int i = 0; i < 400; ++i)
    data.push_back(mix * oracle::random_vector(d, rng) + Vector::Constant(d, 3.0));
  const Preprocessor p = fit_preprocessor(data, false);
  const std::vector<Vector> out = p.apply(data);
  const Vector m = linalg::mean_of(out);
  const Matrix c = linalg::scatter_of(out, m);
  EXPECT_LT(m.cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT((c - Matrix::Identity(d, d)).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Preprocessor, WhiteDataIsFixedPoint) {
  // Exactly zero-mean identity-covariance data: +-e_i for each axis, scaled.
  const Eigen::Index d = 3;
  std::vector<Vector> data;
  for (Eigen::Index i = 0; i < d; ++i) {
    Vector e = Vector::Zero(d);
    e(i) = std::sqrt(static_cast<double>(d));
    data.push_back(e);
    data.push_back(-e);
  }
  const Preprocessor p = fit_preprocessor(data, false);
  EXPECT_LT(p.shift.cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT((p.transform - Matrix::Identity(d, d)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Preprocessor, LengthNormAppliedLast) {
  std::mt19937_64 rng(3);
  std::vector<Vector> data;
  for (int i = 0; i < 50; ++i) data.push_back(oracle::random_vector(4, rng, 2.0));
  const Preprocessor p = fit_preprocessor(data, true);
  for (const Vector& x : p.apply(data)) EXPECT_NEAR(x.norm(), 2.0, 1e-12);
}

TEST(Preprocessor, RankDeficientIsRegularized) {
  // Two points in 3-D: covariance of rank 1 still yields a finite transform.
  const std::vector<Vector> data{vec({1, 2, 3}), vec({-1, 0, 1})};
  const Preprocessor p = fit_preprocessor(data, false);
  EXPECT_TRUE(p.transform.allFinite());
}

TEST(Preprocessor, NeedsTwoVectors) {
  const std::vector<Vector> one{vec({1, 2})};
  EXPECT_EQ(kind_of([&] { fit_preprocessor(one, false); }),
            ErrorKind::kInsufficientData);
}

// --- density ---------------------------------------------------------------

TEST(Density, StandardNormalAtMode) {
  EXPECT_NEAR(plda_log_density(scalar_model(0, 0.5, 0.5), vec({0})),
              -0.9189385332046727, 1e-12);
}

TEST(Density, ModeMaximizesAndMatchesNaiveOracle) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const GaussianPLDA m = oracle::random_model(3, rng);
    const Vector x = oracle::random_vector(3, rng, 2.0);
    const double got = plda_log_density(m, x);
    EXPECT_NEAR(got, oracle::naive_log_density(x, m.mu, m.phi_b + m.phi_w), 1e-10);
    EXPECT_GE(plda_log_density(m, m.mu), got);
  }
}

TEST(Density, DimensionMismatch) {
  EXPECT_EQ(kind_of([] { plda_log_density(scalar_model(0, 1, 1), vec({1, 2})); }),
            ErrorKind::kShape);
}

// --- scoring ---------------------------------------------------------------

TEST(Score, ScalarHandValue) {
  // Oracle value from the explicit joint Gaussians:
  // -0.5 log 3 + log 2 + 1/3.
  const GaussianPLDA m = scalar_model(0, 0.5, 0.5);
  const double oracle_value = oracle::joint_llr(m, vec({1}), vec({1}));
  EXPECT_NEAR(oracle_value, 0.4771743695592237, 1e-12);
  EXPECT_NEAR(plda_llr_score(m, vec({1}), vec({1})), 0.4771743695592237, 1e-12);
}

TEST(Score, ZeroBetweenCovarianceScoresZero) {
  std::mt19937_64 rng(5);
  GaussianPLDA m = oracle::random_model(4, rng);
  m.phi_b.setZero();
  for (int i = 0; i < 20; ++i)
    EXPECT_EQ(plda_llr_score(m, oracle::random_vector(4, rng),
                             oracle::random_vector(4, rng)),
              0.0);
}

TEST(Score, SymmetricOnRandomPairs) {
  std::mt19937_64 rng(13);
  const GaussianPLDA m = oracle::random_model(5, rng);
  for (int i = 0; i < 1000; ++i) {
    const Vector a = oracle::random_vector(5, rng, 2.0);
    const Vector b = oracle::random_vector(5, rng, 2.0);
    EXPECT_NEAR(plda_llr_score(m, a, b), plda_llr_score(m, b, a), 1e-12);
  }
}

TEST(Score, MatchesJointGaussianOracle) {
  std::mt19937_64 rng(17);
  for (Eigen::Index d = 1; d <= 8; ++d)
    for (int i = 0; i < 25; ++i) {
      const GaussianPLDA m = oracle::random_model(d, rng);
      const Vector a = oracle::random_vector(d, rng, 1.5);
      const Vector b = oracle::random_vector(d, rng, 1.5);
      EXPECT_NEAR(plda_llr_score(m, a, b), oracle::joint_llr(m, a, b), 1e-9)
          << "d=" << d;
    }
}

TEST(Score, TranslationEquivariance) {
  std::mt19937_64 rng(19);
  for (int i = 0; i < 100; ++i) {
    GaussianPLDA m = oracle::random_model(4, rng);
    const Vector a = oracle::random_vector(4, rng);
    const Vector b = oracle::random_vector(4, rng);
    const Vector c = oracle::random_vector(4, rng, 5.0);
    const double before = plda_llr_score(m, a, b);
    m.mu += c;
    EXPECT_NEAR(plda_llr_score(m, a + c, b + c), before, 1e-9);
  }
}

TEST(Score, ShapeErrors) {
  const GaussianPLDA m = scalar_model(0, 1, 1);
  EXPECT_EQ(kind_of([&] { plda_llr_score(m, vec({1, 2}), vec({1})); }),
            ErrorKind::kShape);
}

// --- score_trials ----------------------------------------------------------

struct Archives {
  EmbeddingArchive enroll, test;
  std::vector<Trial> trials;
};

Archives random_archives(int n_enroll, int n_test, int n_trials, Eigen::Index d,
                         std::mt19937_64& rng) {
  Archives a;
  for (int i = 0; i < n_enroll; ++i)
    a.enroll.add({"e" + std::to_string(i), oracle::random_vector(d, rng)});
  for (int i = 0; i < n_test; ++i)
    a.test.add({"t" + std::to_string(i), oracle::random_vector(d, rng)});
  std::uniform_int_distribution<int> ue(0, n_enroll - 1), ut(0, n_test - 1);
  for (int i = 0; i < n_trials; ++i)
    a.trials.push_back({"e" + std::to_string(ue(rng)), "t" + std::to_string(ut(rng))});
  return a;
}

TEST(ScoreTrials, EmptyAndSingleton) {
  std::mt19937_64 rng(23);
  const GaussianPLDA m = oracle::random_model(3, rng);
  Archives a = random_archives(2, 2, 1, 3, rng);
  EXPECT_EQ(score_trials(m, a.enroll, a.test, {}).size(), 0u);
  const ScoreSet s = score_trials(m, a.enroll, a.test, a.trials);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s.scores[0], plda_llr_score(m, a.enroll.at(a.trials[0].enroll),
                                        a.test.at(a.trials[0].test)));
}

TEST(ScoreTrials, BatchEqualsElementwiseLoop) {
  std::mt19937_64 rng(29);
  const GaussianPLDA m = oracle::random_model(6, rng);
  const Archives a = random_archives(50, 200, 10000, 6, rng);
  const ScoreSet s = score_trials(m, a.enroll, a.test, a.trials);
  ASSERT_EQ(s.size(), a.trials.size());
  for (std::size_t i = 0; i < a.trials.size(); ++i) {
    ASSERT_EQ(s.trials[i], a.trials[i]);
    ASSERT_EQ(s.scores[i], plda_llr_score(m, a.enroll.at(a.trials[i].enroll),
                                          a.test.at(a.trials[i].test)));
  }
}

TEST(ScoreTrials, ReportsEveryMissingKey) {
  std::mt19937_64 rng(31);
  const GaussianPLDA m = oracle::random_model(2, rng);
  Archives a = random_archives(2, 2, 0, 2, rng);
  a.trials = {{"e0", "t0"}, {"ghost", "t1"}, {"e1", "phantom"}};
  try {
    score_trials(m, a.enroll, a.test, a.trials);
    FAIL() << "expected a lookup error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kLookup);
    EXPECT_NE(std::string(e.what()).find("ghost"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("phantom"), std::string::npos);
  }
}

// --- EM ----------------------------------------------------------------------

LabeledEmbeddings scalar_two_speakers() {
  LabeledEmbeddings d;
  const std::vector<std::pair<std::string, double>> pts{
      {"A", 0.9}, {"A", 1.1}, {"B", -0.9}, {"B", -1.1}};
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const std::string key = "u" + std::to_string(i);
    d.embeddings.push_back({key, vec({pts[i].second})});
    d.speaker_of[key] = pts[i].first;
  }
  return d;
}

TEST(Em, ScalarTwoSpeakersConvergesToClosedFormMaximum) {
  // With equal counts n per speaker the likelihood factorizes: the within
  // part is maximized by W = sum of within scatters / (N - S), the
  // speaker-mean part by B + W/n = biased variance of the speaker means.
  const LabeledEmbeddings data = scalar_two_speakers();
  const double within = (2 * 0.01 + 2 * 0.01) / (4 - 2);
  const double between = 1.0 - within / 2;

  EmOptions opts;
  opts.iterations = 2000;
  opts.tolerance = 0.0;
  const GaussianPLDA m = fit_plda_em(data, opts);
  EXPECT_NEAR(m.mu(0), 0.0, 1e-9);
  EXPECT_NEAR(m.phi_w(0, 0), within, 1e-6);
  EXPECT_NEAR(m.phi_b(0, 0), between, 1e-6);
  // Stated tolerance band around (0, 0.01, 1.0).
  EXPECT_NEAR(m.mu(0), 0.0, 0.05);
  EXPECT_NEAR(m.phi_w(0, 0), 0.01, 0.05);
  EXPECT_NEAR(m.phi_b(0, 0), 1.0, 0.05);
}

TEST(Em, LogLikelihoodNonDecreasing) {
  std::mt19937_64 rng(37);
  for (int ds = 0; ds < 5; ++ds) {
    const GaussianPLDA truth = oracle::random_model(4, rng);
    const LabeledEmbeddings data = sample_embeddings(truth, 30, 1 + ds % 4, 100 + ds);
    EmOptions opts;
    opts.tolerance = 0.0;
    std::vector<double> trace;
    if (ds % 4 == 0) continue;  // one observation per speaker cannot train W
    fit_plda_em(data, opts, &trace);
    ASSERT_EQ(trace.size(), 21u);
    for (std::size_t i = 1; i < trace.size(); ++i)
      EXPECT_GE(trace[i], trace[i - 1] - 1e-8) << "iteration " << i;
  }
}

TEST(Em, NoBetweenVarianceLearnsNearZeroPhiB) {
  std::mt19937_64 rng(41);
  GaussianPLDA truth = oracle::random_model(3, rng);
  truth.phi_b.setZero();
  const LabeledEmbeddings data = sample_embeddings(truth, 200, 10, 4242);
  const GaussianPLDA m = fit_plda_em(data);
  EXPECT_LT(m.phi_b.trace(), 0.05 * m.phi_w.trace());
}

TEST(Em, StartingAtTruthStaysNearTruth) {
  std::mt19937_64 rng(43);
  const GaussianPLDA truth = oracle::random_model(3, rng);
  // 5000 samples split so both covariances see about 2500 degrees of freedom.
  const LabeledEmbeddings data = sample_embeddings(truth, 2500, 2, 777);
  EmOptions opts;
  opts.init = truth;
  const GaussianPLDA m = fit_plda_em(data, opts);
  EXPECT_LT(oracle::relative_frobenius(m.phi_b, truth.phi_b), 0.05);
  EXPECT_LT(oracle::relative_frobenius(m.phi_w, truth.phi_w), 0.05);
}

TEST(Em, RecoversSamplingModel) {
  std::mt19937_64 rng(47);
  const GaussianPLDA truth = oracle::random_model(5, rng);
  const GaussianPLDA m = fit_plda_em(sample_embeddings(truth, 500, 8, 99));
  EXPECT_LT(oracle::relative_frobenius(m.phi_b, truth.phi_b), 0.15);
  EXPECT_LT(oracle::relative_frobenius(m.phi_w, truth.phi_w), 0.15);
  m.validate(1e-10, 1e-6);
}

TEST(Em, VarianceFloorApplied) {
  // Identical observations per speaker leave zero within scatter.
  LabeledEmbeddings d;
  for (int s = 0; s < 3; ++s)
    for (int j = 0; j < 2; ++j) {
      const std::string key = "k" + std::to_string(s) + std::to_string(j);
      d.embeddings.push_back({key, vec({static_cast<double>(s), 1.0})});
      d.speaker_of[key] = "s" + std::to_string(s);
    }
  EmOptions opts;
  opts.variance_floor = 1e-3;
  const GaussianPLDA m = fit_plda_em(d, opts);
  EXPECT_GE(linalg::min_eigenvalue(m.phi_w), 1e-3 - 1e-12);
}

TEST(Em, Errors) {
  LabeledEmbeddings one;
  one.embeddings = {{"a", vec({1})}, {"b", vec({2})}};
  one.speaker_of = {{"a", "S"}, {"b", "S"}};
  EXPECT_EQ(kind_of([&] { fit_plda_em(one); }), ErrorKind::kInsufficientSpeakers);

  LabeledEmbeddings bad = scalar_two_speakers();
  bad.embeddings[1].values(0) = std::nan("");
  EXPECT_EQ(kind_of([&] { fit_plda_em(bad); }), ErrorKind::kInvalidData);

  EmOptions zero;
  zero.iterations = 0;
  EXPECT_EQ(kind_of([&] { fit_plda_em(scalar_two_speakers(), zero); }),
            ErrorKind::kParameter);
}

// --- sampling --------------------------------------------------------------

TEST(Sample, ZeroBetweenPutsSpeakersAtMean) {
  GaussianPLDA m{vec({1, -2}), Matrix::Zero(2, 2), 1e-12 * Matrix::Identity(2, 2)};
  const LabeledEmbeddings s = sample_embeddings(m, 20, 3, 1);
  for (const Embedding& e : s.embeddings)
    EXPECT_LT((e.values - m.mu).norm(), 1e-4);
}

TEST(Sample, MarginalCovarianceMatchesModel) {
  std::mt19937_64 rng(53);
  const GaussianPLDA m = oracle::random_model(4, rng);
  const LabeledEmbeddings s = sample_embeddings(m, 2000, 1, 5);
  std::vector<Vector> xs;
  for (const Embedding& e : s.embeddings) xs.push_back(e.values);
  const Matrix c = linalg::scatter_of(xs, linalg::mean_of(xs));
  EXPECT_LT(oracle::relative_frobenius(c, m.total_covariance()), 0.10);
}

TEST(Sample, DeterministicGivenSeed) {
  std::mt19937_64 rng(59);
  const GaussianPLDA m = oracle::random_model(3, rng);
  const LabeledEmbeddings a = sample_embeddings(m, 5, 4, 123);
  const LabeledEmbeddings b = sample_embeddings(m, 5, 4, 123);
  ASSERT_EQ(a.embeddings.size(), b.embeddings.size());
  for (std::size_t i = 0; i < a.embeddings.size(); ++i) {
    EXPECT_EQ(a.embeddings[i].key, b.embeddings[i].key);
    EXPECT_EQ(a.embeddings[i].values, b.embeddings[i].values);
  }
  EXPECT_EQ(a.speaker_of, b.speaker_of);
}

TEST(Model, ValidateRejectsBadCovariances) {
  GaussianPLDA m = scalar_model(0, 1, 1);
  m.phi_w(0, 0) = -1;
  EXPECT_EQ(kind_of([&] { m.validate(); }), ErrorKind::kInvalidModel);
  GaussianPLDA asym{vec({0, 0}), Matrix::Identity(2, 2), Matrix::Identity(2, 2)};
  asym.phi_b(0, 1) = 1e-3;
  EXPECT_EQ(kind_of([&] { asym.validate(); }), ErrorKind::kInvalidModel);
}

}  // namespace
}  // namespace svback
