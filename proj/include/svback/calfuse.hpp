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

// Affine calibration and linear fusion trained with the prior-weighted
// cross-entropy, and positive-weight subsystem selection.

#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "svback/common.hpp"
#include "svback/metrics.hpp"
#include "svback/scores.hpp"

namespace svback {

struct CalibrationModel {
  double a = 1.0;
  double b = 0.0;
};

struct FusionModel {
  std::vector<std::string> names;    // one per subsystem seen in training
  std::vector<double> weights;       // one per subsystem; 0 when dropped
  double offset = 0.0;
  double p_eff = 0.5;
  std::vector<std::size_t> retained; // indices into names / weights
};

namespace detail {

inline double softplus(double u) {
  return u > 0.0 ? u + std::log1p(std::exp(-u)) : std::log1p(std::exp(u));
}

inline double sigmoid(double u) {
  if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
  const double e = std::exp(u);
  return e / (1.0 + e);
}

inline constexpr double kRidge = 1e-6;
inline constexpr double kGradTol = 1e-8;

/// Prior-weighted logistic regression over rows of `features` (last column is
/// the constant 1), labels +1 / -1 and per-trial weights p/N_tar or
/// (1-p)/N_non.  Minimizes
///   sum_t c_t softplus(-y_t (theta . x_t + logit p)) + ridge |theta|^2
/// by damped Newton.
class LinearLogisticObjective {
 public:
  LinearLogisticObjective(Matrix features, std::vector<double> signs,
                          double p_eff, double ridge)
      : x_(std::move(features)), y_(std::move(signs)), ridge_(ridge) {
    logit_ = effective_prior_logit(p_eff);
    double nt = 0, nn = 0;
    for (double y : y_) (y > 0 ? nt : nn) += 1.0;
    require(nt > 0, ErrorKind::kClass, "no target trials");
    require(nn > 0, ErrorKind::kClass, "no nontarget trials");
    c_.resize(y_.size());
    for (std::size_t t = 0; t < y_.size(); ++t)
      c_[t] = y_[t] > 0 ? p_eff / nt : (1.0 - p_eff) / nn;
  }

  double value(const Vector& theta) const {
    const Vector z = x_ * theta;
    double f = ridge_ * theta.squaredNorm();
    for (std::size_t t = 0; t < y_.size(); ++t)
      f += c_[t] * softplus(-y_[t] * (z(t) + logit_));
    return f;
  }

  void gradient_hessian(const Vector& theta, Vector& g, Matrix& h) const {
    const Eigen::Index k = x_.cols();
    const Vector z = x_ * theta;
    g = 2.0 * ridge_ * theta;
    h = 2.0 * ridge_ * Matrix::Identity(k, k);
    for (std::size_t t = 0; t < y_.size(); ++t) {
      const auto row = x_.row(static_cast<Eigen::Index>(t));
      const double m = -y_[t] * (z(t) + logit_);
      const double s = sigmoid(m);
      g.noalias() += (c_[t] * s * -y_[t]) * row.transpose();
      h.noalias() += (c_[t] * s * (1.0 - s)) * (row.transpose() * row);
    }
  }

  Vector minimize() const {
    const Eigen::Index k = x_.cols();
    Vector theta = Vector::Zero(k);
    Vector g;
    Matrix h;
    double f = value(theta);
    for (int it = 0; it < 500; ++it) {
      gradient_hessian(theta, g, h);
      if (g.norm() < kGradTol) return theta;
      const Vector step = h.ldlt().solve(-g);
      const double slope = g.dot(step);
      double alpha = 1.0;
      Vector next = theta + step;
      double fn = value(next);
      while (fn > f + 1e-4 * alpha * slope && alpha > 1e-12) {
        alpha *= 0.5;
        next = theta + alpha * step;
        fn = value(next);
      }
      if (!(fn <= f)) break;  // no further progress possible in doubles
      theta = next;
      f = fn;
    }
    gradient_hessian(theta, g, h);
    // Flat objective to machine precision counts as converged.
    if (g.norm() >= 1e-6)
      throw Error(ErrorKind::kConditioning,
                  "logistic training did not converge (gradient norm " +
                      std::to_string(g.norm()) + ")");
    return theta;
  }

 private:
  Matrix x_;
  std::vector<double> y_;
  std::vector<double> c_;
  double logit_ = 0.0;
  double ridge_ = 0.0;
};

inline std::vector<double> class_signs(const ScoreSet& s) {
  s.validate();
  if (!s.labels) throw Error(ErrorKind::kLabel, "score set has no labels");
  std::vector<double> y;
  y.reserve(s.size());
  for (TrialLabel l : *s.labels) y.push_back(l == TrialLabel::kTarget ? 1.0 : -1.0);
  return y;
}

inline void check_finite(const ScoreSet& s) {
  for (double x : s.scores)
    require(std::isfinite(x), ErrorKind::kInvalidData, "non-finite score");
}

/// All subsystem score sets must carry the identical trial list.
inline void check_alignment(std::span<const ScoreSet> systems) {
  require(!systems.empty(), ErrorKind::kParameter,
          "fusion needs at least one subsystem");
  for (const ScoreSet& s : systems) s.validate();
  const std::vector<Trial>& ref = systems.front().trials;
  for (std::size_t k = 1; k < systems.size(); ++k) {
    const std::vector<Trial>& other = systems[k].trials;
    const std::size_t n = std::min(ref.size(), other.size());
    for (std::size_t t = 0; t < n; ++t)
      if (!(ref[t] == other[t]))
        throw Error(ErrorKind::kAlignment,
                    "subsystem " + std::to_string(k) + " trial " +
                        std::to_string(t) + " is (" + other[t].enroll + ", " +
                        other[t].test + "), expected (" + ref[t].enroll +
                        ", " + ref[t].test + ")");
    if (ref.size() != other.size())
      throw Error(ErrorKind::kAlignment,
                  "subsystem " + std::to_string(k) + " has " +
                      std::to_string(other.size()) + " trials, expected " +
                      std::to_string(ref.size()) + "; first mismatch at trial " +
                      std::to_string(n));
  }
}

}  // namespace detail

/// Class-normalized, prior-weighted cross-entropy of scores read as LLRs
/// (natural log).
inline double weighted_cross_entropy(const ScoreSet& s, double p_eff) {
  const double logit = effective_prior_logit(p_eff);
  const auto [tar, non] = split_by_class(s);
  double ct = 0.0, cn = 0.0;
  for (double x : tar) ct += detail::softplus(-(x + logit));
  for (double x : non) cn += detail::softplus(x + logit);
  return p_eff * ct / static_cast<double>(tar.size()) +
         (1.0 - p_eff) * cn / static_cast<double>(non.size());
}

inline ScoreSet apply_affine(const CalibrationModel& m, ScoreSet s) {
  for (double& x : s.scores) x = m.a * x + m.b;
  return s;
}

/// Trains a linear fusion sum_i w_i s_i + b.  Fused score sets are refused.
inline FusionModel train_fusion(std::span<const ScoreSet> systems,
                                double p_eff,
                                std::vector<std::string> names = {}) {
  detail::check_alignment(systems);
  for (std::size_t k = 0; k < systems.size(); ++k) {
    require(!systems[k].fused, ErrorKind::kParameter,
            "subsystem " + std::to_string(k) +
                " is itself a fusion output; fusion of fusions is refused");
    detail::check_finite(systems[k]);
  }
  const std::vector<double> y = detail::class_signs(systems.front());
  const auto n = static_cast<Eigen::Index>(y.size());
  const auto k = static_cast<Eigen::Index>(systems.size());
  Matrix x(n, k + 1);
  for (Eigen::Index j = 0; j < k; ++j)
    for (Eigen::Index t = 0; t < n; ++t) x(t, j) = systems[j].scores[t];
  x.col(k).setOnes();
  const Vector theta =
      detail::LinearLogisticObjective(std::move(x), y, p_eff, detail::kRidge)
          .minimize();

  FusionModel m;
  if (names.empty())
    for (Eigen::Index j = 0; j < k; ++j) names.push_back("sys" + std::to_string(j));
  require(names.size() == systems.size(), ErrorKind::kParameter,
          "subsystem name count does not match subsystem count");
  m.names = std::move(names);
  m.weights.assign(theta.data(), theta.data() + k);
  m.offset = theta(k);
  m.p_eff = p_eff;
  for (std::size_t j = 0; j < systems.size(); ++j) m.retained.push_back(j);
  return m;
}

/// Affine calibration (a, b) minimizing the weighted cross-entropy with a
/// 1e-6 ridge.
inline CalibrationModel train_calibration(const ScoreSet& s,
                                          double p_eff = 0.5) {
  const FusionModel f = train_fusion(std::span<const ScoreSet>(&s, 1), p_eff);
  return {f.weights.front(), f.offset};
}

/// Applies a fusion.  `systems` is either the full subsystem list seen in
/// training or just the retained ones, in retained order.
inline ScoreSet apply_fusion(const FusionModel& m,
                             std::span<const ScoreSet> systems) {
  std::vector<const ScoreSet*> used;
  if (systems.size() == m.names.size()) {
    for (std::size_t j : m.retained) used.push_back(&systems[j]);
  } else if (systems.size() == m.retained.size()) {
    for (const ScoreSet& s : systems) used.push_back(&s);
  } else {
    throw Error(ErrorKind::kAlignment,
                "fusion expects " + std::to_string(m.names.size()) + " or " +
                    std::to_string(m.retained.size()) + " subsystems, got " +
                    std::to_string(systems.size()));
  }
  require(!used.empty(), ErrorKind::kParameter, "fusion retains no subsystem");
  std::vector<ScoreSet> aligned;
  for (const ScoreSet* s : used) aligned.push_back(*s);
  detail::check_alignment(aligned);

  ScoreSet out;
  out.trials = used.front()->trials;
  out.labels = used.front()->labels;
  out.fused = true;
  out.scores.assign(out.trials.size(), m.offset);
  for (std::size_t r = 0; r < used.size(); ++r) {
    const double w = m.weights[m.retained[r]];
    for (std::size_t t = 0; t < out.scores.size(); ++t)
      out.scores[t] += w * used[r]->scores[t];
  }
  return out;
}

/// Trains a fusion, drops every subsystem with weight <= 0 and retrains on the
/// survivors, until all weights are positive or one subsystem is left.  With
/// single_pass the drop/retrain happens at most once.
inline FusionModel select_positive_weight_subsystems(
    std::span<const ScoreSet> systems, double p_eff,
    std::vector<std::string> names = {}, bool single_pass = false) {
  if (names.empty())
    for (std::size_t j = 0; j < systems.size(); ++j)
      names.push_back("sys" + std::to_string(j));
  require(names.size() == systems.size(), ErrorKind::kParameter,
          "subsystem name count does not match subsystem count");
  std::vector<std::size_t> alive(systems.size());
  for (std::size_t j = 0; j < alive.size(); ++j) alive[j] = j;

  FusionModel sub;
  for (int pass = 0;; ++pass) {
    std::vector<ScoreSet> subset;
    std::vector<std::string> sub_names;
    for (std::size_t j : alive) {
      subset.push_back(systems[j]);
      sub_names.push_back(names[j]);
    }
    sub = train_fusion(subset, p_eff, sub_names);
    std::vector<std::size_t> next;
    for (std::size_t r = 0; r < alive.size(); ++r)
      if (sub.weights[r] > 0.0) next.push_back(alive[r]);
    const bool stable = next.size() == alive.size();
    if (stable || alive.size() == 1 || (single_pass && pass == 1)) break;
    if (next.empty()) {
      // Keep the single least-negative subsystem.
      std::size_t best = 0;
      for (std::size_t r = 1; r < alive.size(); ++r)
        if (sub.weights[r] > sub.weights[best]) best = r;
      next = {alive[best]};
    }
    alive = std::move(next);
  }

  FusionModel m;
  m.names = std::move(names);
  m.weights.assign(systems.size(), 0.0);
  for (std::size_t r = 0; r < alive.size(); ++r)
    m.weights[alive[r]] = sub.weights[r];
  m.offset = sub.offset;
  m.p_eff = p_eff;
  m.retained = alive;
  return m;
}

/// Pre-calibration of each subsystem followed by linear fusion of the
/// calibrated scores.
struct FusionPipeline {
  std::vector<CalibrationModel> precalibration;  // one per subsystem
  FusionModel fusion;
};

struct FusionOptions {
  double p_eff = 0.5;
  double calibration_prior = 0.5;
  bool precalibrate = true;
  bool prune = false;
  bool single_pass = false;
};

inline FusionPipeline train_fusion_pipeline(std::span<const ScoreSet> systems,
                                            const FusionOptions& opts,
                                            std::vector<std::string> names = {}) {
  FusionPipeline p;
  std::vector<ScoreSet> inputs;
  for (const ScoreSet& s : systems) {
    require(!s.fused, ErrorKind::kParameter,
            "fusion of fusions is refused");
    CalibrationModel c;
    if (opts.precalibrate) c = train_calibration(s, opts.calibration_prior);
    p.precalibration.push_back(c);
    inputs.push_back(apply_affine(c, s));
  }
  p.fusion = opts.prune ? select_positive_weight_subsystems(
                              inputs, opts.p_eff, std::move(names),
                              opts.single_pass)
                        : train_fusion(inputs, opts.p_eff, std::move(names));
  return p;
}

inline ScoreSet apply_fusion_pipeline(const FusionPipeline& p,
                                      std::span<const ScoreSet> systems) {
  require(systems.size() == p.precalibration.size(), ErrorKind::kAlignment,
          "pipeline expects " + std::to_string(p.precalibration.size()) +
              " subsystems, got " + std::to_string(systems.size()));
  std::vector<ScoreSet> calibrated;
  for (std::size_t j = 0; j < systems.size(); ++j)
    calibrated.push_back(apply_affine(p.precalibration[j], systems[j]));
  return apply_fusion(p.fusion, calibrated);
}

}  // namespace svback
