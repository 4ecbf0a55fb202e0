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

// Two-covariance PLDA: embedding preprocessing, EM training, marginal density,
// verification log-likelihood-ratio scoring and generative sampling.
//
// The model is  y_s ~ N(mu, phi_b)  for each speaker s and
// x_si = y_s + e_si  with  e_si ~ N(0, phi_w), so every embedding has marginal
// N(mu, phi_b + phi_w) and two embeddings of one speaker covary by phi_b.

#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "svback/common.hpp"
#include "svback/embedding.hpp"
#include "svback/linalg.hpp"
#include "svback/scores.hpp"

namespace svback {

struct GaussianPLDA {
  Vector mu;
  Matrix phi_b;  // between-speaker covariance
  Matrix phi_w;  // within-speaker covariance

  Eigen::Index dim() const { return mu.size(); }
  Matrix total_covariance() const { return phi_b + phi_w; }

  /// Throws kInvalidModel unless the covariance invariants hold.  `tol` is
  /// the symmetry tolerance; eigenvalue checks allow rounding at the scale of
  /// the matrix.
  void validate(double tol = 1e-10, double variance_floor = 0.0) const {
    const Eigen::Index d = dim();
    require(d >= 1, ErrorKind::kInvalidModel, "model dimension is 0");
    require(phi_b.rows() == d && phi_b.cols() == d && phi_w.rows() == d &&
                phi_w.cols() == d,
            ErrorKind::kInvalidModel, "covariance shapes do not match mean");
    require(mu.allFinite() && phi_b.allFinite() && phi_w.allFinite(),
            ErrorKind::kInvalidModel, "non-finite model parameters");
    require(linalg::max_asymmetry(phi_b) <= tol, ErrorKind::kInvalidModel,
            "phi_b is not symmetric");
    require(linalg::max_asymmetry(phi_w) <= tol, ErrorKind::kInvalidModel,
            "phi_w is not symmetric");
    const double slack = 1e-12 * std::max(1.0, phi_w.cwiseAbs().maxCoeff());
    const double w_min = linalg::min_eigenvalue(phi_w);
    require(w_min > 0.0 && w_min >= variance_floor - slack,
            ErrorKind::kInvalidModel, "phi_w is not positive definite");
    const double b_slack = 1e-10 * std::max(1.0, phi_b.cwiseAbs().maxCoeff());
    require(linalg::min_eigenvalue(phi_b) >= -b_slack,
            ErrorKind::kInvalidModel, "phi_b has negative eigenvalues");
  }
};

// ---------------------------------------------------------------------------
// Preprocessing

/// Rescales x to norm sqrt(d).
inline Vector length_normalize(const Vector& x) {
  require(x.allFinite(), ErrorKind::kDegenerateInput,
          "length_normalize: non-finite input");
  const double n = x.norm();
  require(n > 0.0, ErrorKind::kDegenerateInput,
          "length_normalize: zero vector");
  return x * (std::sqrt(static_cast<double>(x.size())) / n);
}

/// Centering, whitening and optional length normalization, applied in that
/// order.  Immutable once fitted.
struct Preprocessor {
  Vector shift;
  Matrix transform;
  bool apply_length_norm = false;

  Eigen::Index dim() const { return shift.size(); }

  Vector apply(const Vector& x) const {
    require_dim(x.size(), dim(), "preprocessor input");
    Vector y = transform * (x - shift);
    return apply_length_norm ? length_normalize(y) : y;
  }

  std::vector<Vector> apply(std::span<const Vector> xs) const {
    std::vector<Vector> out;
    out.reserve(xs.size());
    for (const Vector& x : xs) out.push_back(apply(x));
    return out;
  }

  EmbeddingArchive apply(const EmbeddingArchive& a) const {
    EmbeddingArchive out;
    for (const Embedding& e : a.entries()) out.add({e.key, apply(e.values)});
    return out;
  }

  LabeledEmbeddings apply(const LabeledEmbeddings& l) const {
    LabeledEmbeddings out{{}, l.speaker_of};
    out.embeddings.reserve(l.embeddings.size());
    for (const Embedding& e : l.embeddings)
      out.embeddings.push_back({e.key, apply(e.values)});
    return out;
  }
};

/// Fits shift = sample mean and transform = (sample covariance)^(-1/2).  The
/// covariance gets epsilon * I (epsilon = 1e-6 * trace / d) when there are
/// fewer than d + 1 vectors or it is not comfortably positive definite.
inline Preprocessor fit_preprocessor(std::span<const Vector> data,
                                     bool use_length_norm) {
  require(data.size() >= 2, ErrorKind::kInsufficientData,
          "fit_preprocessor needs at least 2 vectors, got " +
              std::to_string(data.size()));
  const Eigen::Index d = data.front().size();
  for (const Vector& x : data) {
    require_dim(x.size(), d, "fit_preprocessor input");
    require(x.allFinite(), ErrorKind::kInvalidData,
            "fit_preprocessor: non-finite input");
  }
  Preprocessor p;
  p.shift = linalg::mean_of(data);
  Matrix cov = linalg::scatter_of(data, p.shift);
  if (static_cast<Eigen::Index>(data.size()) < d + 1)
    cov = linalg::regularized(cov);
  else
    cov = linalg::regularized_if_needed(cov);
  p.transform = linalg::inverse_principal_sqrt(cov);
  p.apply_length_norm = use_length_norm;
  return p;
}

// ---------------------------------------------------------------------------
// Density and scoring

inline double plda_log_density(const GaussianPLDA& model, const Vector& x) {
  require_dim(x.size(), model.dim(), "plda_log_density");
  return linalg::gaussian_log_density(x, model.mu, model.total_covariance());
}

/// Precomputed two-covariance verification scorer.  In the basis where
/// phi_w = I and phi_b = diag(psi) the same-speaker / different-speaker
/// log-likelihood ratio splits into independent per-dimension terms
///
///   c_i - 0.5 * q_i * (u_i^2 + v_i^2) + r_i * u_i * v_i
///
/// with c_i = log(1 + psi_i) - 0.5 log(1 + 2 psi_i),
///      q_i = (1 + psi_i) / (1 + 2 psi_i) - 1 / (1 + psi_i),
///      r_i = psi_i / (1 + 2 psi_i).
class PldaScorer {
 public:
  explicit PldaScorer(const GaussianPLDA& model) : mu_(model.mu) {
    const auto sd = linalg::simultaneous_diagonalize(model.phi_b, model.phi_w);
    projection_ = sd.transform.transpose();
    const Eigen::Index d = model.dim();
    constant_ = 0.0;
    quad_.resize(d);
    cross_.resize(d);
    for (Eigen::Index i = 0; i < d; ++i) {
      const double psi = std::max(sd.values(i), 0.0);
      const double tot = 1.0 + psi;
      const double det = 1.0 + 2.0 * psi;
      constant_ += std::log(tot) - 0.5 * std::log(det);
      quad_(i) = tot / det - 1.0 / tot;
      cross_(i) = psi / det;
    }
  }

  Eigen::Index dim() const { return mu_.size(); }

  /// Maps an embedding into the scoring basis.
  Vector project(const Vector& x) const {
    require_dim(x.size(), dim(), "plda score input");
    return projection_ * (x - mu_);
  }

  /// Score two already-projected vectors.
  double score_projected(const Vector& u, const Vector& v) const {
    const double quad = quad_.dot((u.array().square() + v.array().square())
                                      .matrix());
    const double cross = cross_.dot(u.cwiseProduct(v));
    return constant_ - 0.5 * quad + cross;
  }

  double score(const Vector& enroll, const Vector& test) const {
    return score_projected(project(enroll), project(test));
  }

 private:
  Vector mu_;
  Matrix projection_;
  double constant_ = 0.0;
  Vector quad_;
  Vector cross_;
};

/// log p(enroll, test | same speaker) - log p(enroll, test | different).
inline double plda_llr_score(const GaussianPLDA& model, const Vector& enroll,
                             const Vector& test) {
  require_dim(enroll.size(), model.dim(), "plda_llr_score enroll");
  require_dim(test.size(), model.dim(), "plda_llr_score test");
  return PldaScorer(model).score(enroll, test);
}

/// Scores every trial in order.  All unresolvable keys are reported together.
inline ScoreSet score_trials(const GaussianPLDA& model,
                             const EmbeddingArchive& enroll,
                             const EmbeddingArchive& test,
                             const std::vector<Trial>& trials) {
  std::vector<std::string> missing;
  for (const Trial& t : trials) {
    if (!enroll.contains(t.enroll)) missing.push_back("enroll:" + t.enroll);
    if (!test.contains(t.test)) missing.push_back("test:" + t.test);
  }
  if (!missing.empty()) {
    std::string msg = "unresolved trial keys:";
    for (const std::string& m : missing) msg += " " + m;
    throw Error(ErrorKind::kLookup, msg);
  }
  ScoreSet out;
  out.trials = trials;
  out.scores.reserve(trials.size());
  if (trials.empty()) return out;
  const PldaScorer scorer(model);
  std::unordered_map<std::string, Vector> enroll_proj, test_proj;
  for (const Trial& t : trials) {
    auto e = enroll_proj.find(t.enroll);
    if (e == enroll_proj.end())
      e = enroll_proj.emplace(t.enroll, scorer.project(enroll.at(t.enroll)))
              .first;
    auto s = test_proj.find(t.test);
    if (s == test_proj.end())
      s = test_proj.emplace(t.test, scorer.project(test.at(t.test))).first;
    out.scores.push_back(scorer.score_projected(e->second, s->second));
  }
  return out;
}

// ---------------------------------------------------------------------------
// EM training

struct EmOptions {
  int iterations = 20;
  double variance_floor = 1e-6;
  /// Early stop when the log-likelihood gain per sample drops below this.
  /// Zero or negative disables early stopping.
  double tolerance = 1e-7;
  /// Start from these parameters instead of the moment estimates.
  std::optional<GaussianPLDA> init;
};

namespace detail {

/// Per-speaker sufficient statistics: count, mean, within scatter (sum).
struct SpeakerStats {
  std::vector<int> counts;
  std::vector<Vector> means;
  std::vector<Matrix> scatters;
  Eigen::Index dim = 0;
  long total = 0;
};

inline SpeakerStats speaker_stats(const LabeledEmbeddings& data) {
  SpeakerStats st;
  st.dim = data.dim();
  for (const auto& [label, members] : data.by_speaker()) {
    Vector m = Vector::Zero(st.dim);
    for (std::size_t i : members) m += data.embeddings[i].values;
    m /= static_cast<double>(members.size());
    Matrix s = Matrix::Zero(st.dim, st.dim);
    for (std::size_t i : members) {
      const Vector c = data.embeddings[i].values - m;
      s.noalias() += c * c.transpose();
    }
    st.counts.push_back(static_cast<int>(members.size()));
    st.means.push_back(std::move(m));
    st.scatters.push_back(std::move(s));
    st.total += static_cast<long>(members.size());
  }
  return st;
}

inline double log_likelihood(const GaussianPLDA& model,
                             const SpeakerStats& st) {
  const double d = static_cast<double>(st.dim);
  const double log2pi = std::log(2.0 * std::numbers::pi);
  Eigen::LLT<Matrix> w_llt(model.phi_w);
  require(w_llt.info() == Eigen::Success, ErrorKind::kInvalidModel,
          "phi_w is not positive definite");
  const double w_logdet =
      2.0 * w_llt.matrixLLT().diagonal().array().log().sum();
  std::map<int, Matrix> marginal;
  double ll = 0.0;
  for (std::size_t s = 0; s < st.counts.size(); ++s) {
    const int n = st.counts[s];
    auto it = marginal.find(n);
    if (it == marginal.end())
      it = marginal.emplace(n, model.phi_b + model.phi_w / n).first;
    ll += linalg::gaussian_log_density(st.means[s], model.mu, it->second);
    if (n > 1) {
      const double trace = w_llt.solve(st.scatters[s]).trace();
      ll += -0.5 * (n - 1) * d * log2pi - 0.5 * (n - 1) * w_logdet -
            0.5 * trace;
    }
    ll -= 0.5 * d * std::log(static_cast<double>(n));
  }
  return ll;
}

inline GaussianPLDA moment_init(const SpeakerStats& st, double floor) {
  const Eigen::Index d = st.dim;
  const double n_spk = static_cast<double>(st.counts.size());
  GaussianPLDA m;
  m.mu = Vector::Zero(d);
  for (std::size_t s = 0; s < st.counts.size(); ++s)
    m.mu += st.counts[s] * st.means[s];
  m.mu /= static_cast<double>(st.total);
  m.phi_b = Matrix::Zero(d, d);
  m.phi_w = Matrix::Zero(d, d);
  for (std::size_t s = 0; s < st.counts.size(); ++s) {
    const Vector c = st.means[s] - m.mu;
    m.phi_b.noalias() += c * c.transpose();
    m.phi_w += st.scatters[s];
  }
  m.phi_b = linalg::symmetrize(m.phi_b / n_spk);
  m.phi_w = linalg::floor_eigenvalues(m.phi_w / static_cast<double>(st.total),
                                      floor);
  return m;
}

inline GaussianPLDA em_step(const GaussianPLDA& model, const SpeakerStats& st,
                            double floor) {
  const Eigen::Index d = st.dim;
  const std::size_t n_spk = st.counts.size();
  // Posterior of the speaker variable given n observations with mean xbar:
  //   gain K_n = phi_b (phi_b + phi_w / n)^-1
  //   mean  mu + K_n (xbar - mu),  covariance phi_b - K_n phi_b.
  struct Posterior {
    Matrix gain;
    Matrix cov;
  };
  std::map<int, Posterior> post;
  for (int n : st.counts) {
    if (post.count(n)) continue;
    const Matrix g = model.phi_b + model.phi_w / n;
    Eigen::LLT<Matrix> llt(g);
    require(llt.info() == Eigen::Success, ErrorKind::kInvalidModel,
            "marginal covariance is not positive definite");
    const Matrix gain = llt.solve(model.phi_b).transpose();
    post.emplace(n, Posterior{gain, linalg::symmetrize(model.phi_b -
                                                       gain * model.phi_b)});
  }
  std::vector<Vector> means(n_spk);
  Vector mu = Vector::Zero(d);
  for (std::size_t s = 0; s < n_spk; ++s) {
    const Posterior& p = post.at(st.counts[s]);
    means[s] = model.mu + p.gain * (st.means[s] - model.mu);
    mu += means[s];
  }
  mu /= static_cast<double>(n_spk);

  Matrix between = Matrix::Zero(d, d);
  Matrix within = Matrix::Zero(d, d);
  for (std::size_t s = 0; s < n_spk; ++s) {
    const int n = st.counts[s];
    const Posterior& p = post.at(n);
    const Vector cb = means[s] - mu;
    between.noalias() += cb * cb.transpose();
    between += p.cov;
    const Vector cw = st.means[s] - means[s];
    within += st.scatters[s];
    within.noalias() += n * (cw * cw.transpose());
    within += n * p.cov;
  }
  GaussianPLDA next;
  next.mu = mu;
  next.phi_b = linalg::floor_eigenvalues(between / static_cast<double>(n_spk),
                                         0.0);
  next.phi_w =
      linalg::floor_eigenvalues(within / static_cast<double>(st.total), floor);
  return next;
}

}  // namespace detail

/// Marginal log-likelihood of labeled data under the model.
inline double plda_log_likelihood(const GaussianPLDA& model,
                                  const LabeledEmbeddings& data) {
  data.validate();
  require_dim(data.dim(), model.dim(), "plda_log_likelihood");
  return detail::log_likelihood(model, detail::speaker_stats(data));
}

/// Trains a full-rank two-covariance PLDA by EM.  When `loglik_trace` is
/// given it receives the training log-likelihood before the first iteration
/// and after each completed one.
inline GaussianPLDA fit_plda_em(const LabeledEmbeddings& data,
                                const EmOptions& opts = {},
                                std::vector<double>* loglik_trace = nullptr) {
  require(opts.iterations >= 1, ErrorKind::kParameter,
          "EM needs at least one iteration");
  require(opts.variance_floor > 0.0, ErrorKind::kParameter,
          "variance floor must be positive");
  data.validate();
  const detail::SpeakerStats st = detail::speaker_stats(data);
  require(st.counts.size() >= 2, ErrorKind::kInsufficientSpeakers,
          "PLDA training needs at least 2 speakers, got " +
              std::to_string(st.counts.size()));

  GaussianPLDA model;
  if (opts.init) {
    require_dim(opts.init->dim(), st.dim, "EM initial model");
    model = *opts.init;
    model.phi_w = linalg::floor_eigenvalues(model.phi_w, opts.variance_floor);
  } else {
    model = detail::moment_init(st, opts.variance_floor);
  }
  double ll = detail::log_likelihood(model, st);
  if (loglik_trace) loglik_trace->assign(1, ll);
  for (int it = 0; it < opts.iterations; ++it) {
    model = detail::em_step(model, st, opts.variance_floor);
    const double next = detail::log_likelihood(model, st);
    if (loglik_trace) loglik_trace->push_back(next);
    const double gain = (next - ll) / static_cast<double>(st.total);
    ll = next;
    if (opts.tolerance > 0.0 && gain < opts.tolerance) break;
  }
  return model;
}

// ---------------------------------------------------------------------------
// Sampling

namespace detail {

inline Vector standard_normal(Eigen::Index d, std::mt19937_64& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  Vector z(d);
  for (Eigen::Index i = 0; i < d; ++i) z(i) = n01(rng);
  return z;
}

}  // namespace detail

/// Draws n_speakers speaker variables from N(mu, phi_b) and per_speaker
/// observations around each.  Keys are "<prefix><speaker>-<index>" and speaker
/// labels "<prefix><speaker>".
inline LabeledEmbeddings sample_embeddings(const GaussianPLDA& model,
                                           int n_speakers, int per_speaker,
                                           std::uint64_t seed,
                                           const std::string& prefix = "spk") {
  require(n_speakers >= 1 && per_speaker >= 1, ErrorKind::kParameter,
          "sample_embeddings: counts must be at least 1");
  model.validate(1e-8);
  std::mt19937_64 rng(seed);
  const Matrix b_root = linalg::principal_sqrt(model.phi_b);
  const Matrix w_root = linalg::principal_sqrt(model.phi_w);
  const Eigen::Index d = model.dim();
  LabeledEmbeddings out;
  out.embeddings.reserve(static_cast<std::size_t>(n_speakers) * per_speaker);
  for (int s = 0; s < n_speakers; ++s) {
    const std::string spk = prefix + std::to_string(s);
    const Vector y = model.mu + b_root * detail::standard_normal(d, rng);
    for (int j = 0; j < per_speaker; ++j) {
      std::string key = spk + "-" + std::to_string(j);
      out.speaker_of.emplace(key, spk);
      out.embeddings.push_back(
          {std::move(key), y + w_root * detail::standard_normal(d, rng)});
    }
  }
  return out;
}

}  // namespace svback
