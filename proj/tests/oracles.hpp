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

// Test-only reference implementations.  These deliberately take the slow,
// obvious route (explicit joint covariances, LU inverses, quadratic threshold
// scans) and share no code path with the library beyond Eigen itself.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "svback/plda.hpp"

namespace svback::oracle {

/// log N(x; mean, cov) via an LU inverse and determinant.
inline double naive_log_density(const Vector& x, const Vector& mean,
                                const Matrix& cov) {
  Eigen::FullPivLU<Matrix> lu(cov);
  const Vector c = x - mean;
  const double quad = c.dot(lu.inverse() * c);
  const double d = static_cast<double>(x.size());
  return -0.5 * (d * std::log(2.0 * std::numbers::pi) +
                 std::log(std::abs(lu.determinant())) + quad);
}

/// LLR from explicitly assembled 2d x 2d joint Gaussians: same-speaker
/// covariance [[T, B], [B, T]] against independent [[T, 0], [0, T]].
inline double joint_llr(const GaussianPLDA& m, const Vector& e,
                        const Vector& t) {
  const Eigen::Index d = m.dim();
  const Matrix total = m.phi_b + m.phi_w;
  Matrix same(2 * d, 2 * d);
  same << total, m.phi_b, m.phi_b, total;
  Vector x(2 * d), mu(2 * d);
  x << e, t;
  mu << m.mu, m.mu;
  return naive_log_density(x, mu, same) - naive_log_density(e, m.mu, total) -
         naive_log_density(t, m.mu, total);
}

inline Matrix random_spd(Eigen::Index d, std::mt19937_64& rng,
                         double ridge = 0.1) {
  std::normal_distribution<double> n01;
  Matrix a(d, d);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = n01(rng);
  Matrix s = a * a.transpose() / static_cast<double>(d) +
             ridge * Matrix::Identity(d, d);
  return 0.5 * (s + s.transpose());
}

inline Vector random_vector(Eigen::Index d, std::mt19937_64& rng,
                            double scale = 1.0) {
  std::normal_distribution<double> n01;
  Vector v(d);
  for (Eigen::Index i = 0; i < d; ++i) v(i) = scale * n01(rng);
  return v;
}

inline GaussianPLDA random_model(Eigen::Index d, std::mt19937_64& rng) {
  return {random_vector(d, rng), random_spd(d, rng), random_spd(d, rng)};
}

struct BrutePoint {
  double threshold, p_miss, p_fa;
};

/// Every distinct score plus +inf; counts by a full scan per threshold.
inline std::vector<BrutePoint> brute_det(const std::vector<double>& tar,
                                         const std::vector<double>& non) {
  std::vector<double> th(tar);
  th.insert(th.end(), non.begin(), non.end());
  std::sort(th.begin(), th.end());
  th.erase(std::unique(th.begin(), th.end()), th.end());
  th.push_back(std::numeric_limits<double>::infinity());
  std::vector<BrutePoint> out;
  for (double t : th) {
    int miss = 0, fa = 0;
    for (double x : tar) miss += x < t;
    for (double x : non) fa += x >= t;
    out.push_back({t, static_cast<double>(miss) / static_cast<double>(tar.size()),
                   static_cast<double>(fa) / static_cast<double>(non.size())});
  }
  return out;
}

inline double brute_eer(const std::vector<double>& tar,
                        const std::vector<double>& non) {
  const auto p = brute_det(tar, non);
  for (std::size_t i = 1; i < p.size(); ++i) {
    if (p[i].p_miss < p[i].p_fa) continue;
    const BrutePoint& a = p[i - 1];
    const BrutePoint& b = p[i];
    const double t =
        (a.p_fa - a.p_miss) / ((b.p_miss - a.p_miss) - (b.p_fa - a.p_fa));
    return a.p_miss + t * (b.p_miss - a.p_miss);
  }
  return p.back().p_miss;
}

inline double brute_min_dcf(const std::vector<double>& tar,
                            const std::vector<double>& non, double p) {
  double best = std::numeric_limits<double>::infinity();
  for (const BrutePoint& q : brute_det(tar, non))
    best = std::min(best, (p * q.p_miss + (1 - p) * q.p_fa) / std::min(p, 1 - p));
  return best;
}

/// Straight summation in long double.
inline long double direct_cross_entropy(const std::vector<double>& tar,
                                        const std::vector<double>& non,
                                        double p) {
  const long double logit = std::log(static_cast<long double>(p) / (1.0L - p));
  long double st = 0, sn = 0;
  for (double s : tar) st += std::log1p(std::exp(-(s + logit)));
  for (double s : non) sn += std::log1p(std::exp(s + logit));
  return p * st / tar.size() + (1.0L - p) * sn / non.size();
}

inline double relative_frobenius(const Matrix& est, const Matrix& truth) {
  return (est - truth).norm() / truth.norm();
}

}  // namespace svback::oracle
