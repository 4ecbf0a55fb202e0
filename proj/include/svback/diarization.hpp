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

// Multi-speaker test segments: uniform cutting, PLDA affinity between cuts,
// average-linkage agglomerative clustering and max-over-clusters scoring.

#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "svback/common.hpp"
#include "svback/plda.hpp"

namespace svback {

struct Cut {
  double start = 0.0;
  double end = 0.0;
};

struct CutPlan {
  std::string recording_id;
  std::vector<Cut> cuts;
};

inline constexpr double kMinCutSeconds = 0.5;

/// floor(duration / cut_length) full cuts; a trailing remainder shorter than
/// half a second is merged into the last cut, otherwise it becomes a cut.
inline CutPlan uniform_cut_plan(double duration, double cut_length = 1.0,
                                std::string recording_id = {}) {
  require(std::isfinite(duration) && duration >= kMinCutSeconds,
          ErrorKind::kTooShort,
          "recording of " + std::to_string(duration) +
              " s is shorter than the 0.5 s minimum cut");
  require(std::isfinite(cut_length) && cut_length >= kMinCutSeconds,
          ErrorKind::kParameter, "cut length must be at least 0.5 s");
  CutPlan plan{std::move(recording_id), {}};
  // Absorb rounding so that e.g. 3.0 / 1.0 is not counted as 2.999...
  const auto full = static_cast<long>(std::floor(duration / cut_length + 1e-9));
  for (long i = 0; i < full; ++i)
    plan.cuts.push_back({static_cast<double>(i) * cut_length,
                         static_cast<double>(i + 1) * cut_length});
  if (plan.cuts.empty()) {
    plan.cuts.push_back({0.0, duration});
    return plan;
  }
  const double covered = plan.cuts.back().end;
  const double remainder = duration - covered;
  if (remainder >= kMinCutSeconds)
    plan.cuts.push_back({covered, duration});
  else
    plan.cuts.back().end = duration;
  return plan;
}

/// Pairwise PLDA scores between cuts.  The diagonal is 0 and never read by
/// the clustering.
struct AffinityMatrix {
  Matrix values;
  Eigen::Index n() const { return values.rows(); }
};

inline AffinityMatrix affinity_matrix(const GaussianPLDA& model,
                                      std::span<const Vector> cuts) {
  require(!cuts.empty(), ErrorKind::kInsufficientData,
          "affinity matrix needs at least one cut");
  const PldaScorer scorer(model);
  std::vector<Vector> proj;
  proj.reserve(cuts.size());
  for (const Vector& c : cuts) proj.push_back(scorer.project(c));
  const auto n = static_cast<Eigen::Index>(cuts.size());
  AffinityMatrix a{Matrix::Zero(n, n)};
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double s = scorer.score_projected(proj[i], proj[j]);
      a.values(i, j) = s;
      a.values(j, i) = s;
    }
  return a;
}

struct Clustering {
  std::vector<int> assignment;  // cut index -> cluster id
  int k = 0;
};

/// Average-linkage AHC.  While the best average inter-cluster affinity is at
/// least stop_threshold, merge that pair.  Clusters are ordered by their
/// smallest member cut; ties go to the lexicographically smallest pair in
/// that order.  Final ids follow the same order.
inline Clustering ahc_cluster(const AffinityMatrix& affinity,
                              double stop_threshold) {
  const Eigen::Index n = affinity.n();
  require(n >= 1 && affinity.values.cols() == n, ErrorKind::kShape,
          "affinity matrix must be square and non-empty");
  // Active clusters kept sorted by smallest member; sums holds the total
  // pairwise affinity between clusters.
  std::vector<std::vector<int>> members(n);
  for (Eigen::Index i = 0; i < n; ++i) members[i] = {static_cast<int>(i)};
  Matrix sums = affinity.values;
  std::vector<Eigen::Index> active(n);
  for (Eigen::Index i = 0; i < n; ++i) active[i] = i;

  while (active.size() > 1) {
    double best = -std::numeric_limits<double>::infinity();
    std::size_t bi = 0, bj = 0;
    for (std::size_t x = 0; x < active.size(); ++x)
      for (std::size_t y = x + 1; y < active.size(); ++y) {
        const Eigen::Index i = active[x], j = active[y];
        const double avg =
            sums(i, j) / (static_cast<double>(members[i].size()) *
                          static_cast<double>(members[j].size()));
        if (avg > best) {
          best = avg;
          bi = x;
          bj = y;
        }
      }
    if (!(best >= stop_threshold)) break;
    const Eigen::Index keep = active[bi], gone = active[bj];
    for (Eigen::Index other : active) {
      if (other == keep || other == gone) continue;
      sums(keep, other) += sums(gone, other);
      sums(other, keep) = sums(keep, other);
    }
    members[keep].insert(members[keep].end(), members[gone].begin(),
                         members[gone].end());
    members[gone].clear();
    active.erase(active.begin() + static_cast<std::ptrdiff_t>(bj));
  }

  Clustering c;
  c.k = static_cast<int>(active.size());
  c.assignment.assign(static_cast<std::size_t>(n), -1);
  for (std::size_t id = 0; id < active.size(); ++id)
    for (int m : members[active[id]]) c.assignment[m] = static_cast<int>(id);
  return c;
}

inline std::vector<Vector> cluster_means(std::span<const Vector> cuts,
                                         const Clustering& clustering) {
  require(cuts.size() == clustering.assignment.size(), ErrorKind::kShape,
          "cluster_means: " + std::to_string(cuts.size()) + " cuts but " +
              std::to_string(clustering.assignment.size()) + " assignments");
  require(!cuts.empty(), ErrorKind::kInsufficientData, "no cuts");
  std::vector<Vector> sums(clustering.k, Vector::Zero(cuts.front().size()));
  std::vector<int> counts(clustering.k, 0);
  for (std::size_t i = 0; i < cuts.size(); ++i) {
    const int c = clustering.assignment[i];
    require(c >= 0 && c < clustering.k, ErrorKind::kInvalidData,
            "cluster id out of range");
    require_dim(cuts[i].size(), cuts.front().size(), "cut embedding");
    sums[c] += cuts[i];
    ++counts[c];
  }
  for (int c = 0; c < clustering.k; ++c) {
    require(counts[c] > 0, ErrorKind::kInvalidData, "empty cluster");
    sums[c] /= static_cast<double>(counts[c]);
  }
  return sums;
}

struct MultiSpeakerScore {
  double score = 0.0;
  int k = 0;
  int best_cluster = 0;
  Clustering clustering;
};

/// Diarize the cuts, then score the enrollment against every cluster mean and
/// keep the maximum.
inline MultiSpeakerScore score_multispeaker_trial(
    const GaussianPLDA& model, const Vector& enroll,
    std::span<const Vector> cuts, double stop_threshold = 0.0) {
  require(!cuts.empty(), ErrorKind::kInsufficientData,
          "multi-speaker trial needs at least one cut");
  const PldaScorer scorer(model);
  const Vector e = scorer.project(enroll);
  MultiSpeakerScore out;
  out.clustering = ahc_cluster(affinity_matrix(model, cuts), stop_threshold);
  out.k = out.clustering.k;
  const std::vector<Vector> means = cluster_means(cuts, out.clustering);
  out.score = -std::numeric_limits<double>::infinity();
  for (int c = 0; c < out.k; ++c) {
    const double s = scorer.score_projected(e, scorer.project(means[c]));
    if (s > out.score) {
      out.score = s;
      out.best_cluster = c;
    }
  }
  return out;
}

/// Scores the whole segment, represented by the mean of its cuts.
inline double score_whole_segment(const GaussianPLDA& model,
                                  const Vector& enroll,
                                  std::span<const Vector> cuts) {
  require(!cuts.empty(), ErrorKind::kInsufficientData,
          "whole-segment scoring needs at least one cut");
  Vector mean = Vector::Zero(cuts.front().size());
  for (const Vector& c : cuts) {
    require_dim(c.size(), cuts.front().size(), "cut embedding");
    mean += c;
  }
  mean /= static_cast<double>(cuts.size());
  return plda_llr_score(model, enroll, mean);
}

/// Fraction of cuts that belong to the majority reference speaker of their
/// cluster.
inline double cluster_purity(const Clustering& c,
                             const std::vector<std::string>& reference) {
  require(reference.size() == c.assignment.size(), ErrorKind::kShape,
          "cluster_purity: reference size mismatch");
  std::vector<std::map<std::string, int>> counts(c.k);
  for (std::size_t i = 0; i < reference.size(); ++i)
    ++counts[c.assignment[i]][reference[i]];
  int agree = 0;
  for (const auto& m : counts) {
    int best = 0;
    for (const auto& [spk, n] : m) best = std::max(best, n);
    agree += best;
  }
  return static_cast<double>(agree) / static_cast<double>(reference.size());
}

/// A recording with reference speaker labels per cut, used for tuning.
struct LabeledRecording {
  std::vector<Vector> cuts;
  std::vector<std::string> speakers;
};

struct ThresholdChoice {
  double threshold = 0.0;
  double k_accuracy = 0.0;  // fraction of recordings with the right k
  double purity = 0.0;      // mean purity
};

/// Picks the stop threshold from `grid` maximizing the fraction of dev
/// recordings whose cluster count matches the reference, then mean purity.
/// Ties keep the earlier grid entry.
inline ThresholdChoice tune_ahc_threshold(
    const GaussianPLDA& model, const std::vector<LabeledRecording>& dev,
    const std::vector<double>& grid) {
  require(!dev.empty() && !grid.empty(), ErrorKind::kParameter,
          "threshold tuning needs dev recordings and a grid");
  std::vector<AffinityMatrix> affinities;
  affinities.reserve(dev.size());
  for (const LabeledRecording& r : dev)
    affinities.push_back(affinity_matrix(model, r.cuts));
  ThresholdChoice best{grid.front(), -1.0, -1.0};
  for (double th : grid) {
    double hits = 0.0, purity = 0.0;
    for (std::size_t i = 0; i < dev.size(); ++i) {
      const Clustering c = ahc_cluster(affinities[i], th);
      std::map<std::string, int> distinct;
      for (const std::string& s : dev[i].speakers) distinct[s] = 1;
      if (c.k == static_cast<int>(distinct.size())) hits += 1.0;
      purity += cluster_purity(c, dev[i].speakers);
    }
    hits /= static_cast<double>(dev.size());
    purity /= static_cast<double>(dev.size());
    if (hits > best.k_accuracy ||
        (hits == best.k_accuracy && purity > best.purity))
      best = {th, hits, purity};
  }
  return best;
}

}  // namespace svback
