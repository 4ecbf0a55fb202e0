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

// Detection measures.  Decision rule everywhere: accept iff score >= threshold.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "svback/common.hpp"
#include "svback/scores.hpp"

namespace svback {

struct DetPoint {
  double threshold;
  double p_miss;
  double p_fa;
};

/// Empirical miss / false-alarm staircase, one point per distinct score plus
/// a final +inf threshold (reject everything).
struct DetCurve {
  std::vector<DetPoint> points;
};

inline DetCurve det_points(const ScoreSet& s) {
  auto [tar, non] = split_by_class(s);
  std::sort(tar.begin(), tar.end());
  std::sort(non.begin(), non.end());
  std::vector<double> thresholds;
  thresholds.reserve(tar.size() + non.size());
  std::merge(tar.begin(), tar.end(), non.begin(), non.end(),
             std::back_inserter(thresholds));
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()),
                   thresholds.end());
  thresholds.push_back(std::numeric_limits<double>::infinity());

  const double nt = static_cast<double>(tar.size());
  const double nn = static_cast<double>(non.size());
  DetCurve curve;
  curve.points.reserve(thresholds.size());
  std::size_t ti = 0, ni = 0;  // counts strictly below the threshold
  for (double th : thresholds) {
    while (ti < tar.size() && tar[ti] < th) ++ti;
    while (ni < non.size() && non[ni] < th) ++ni;
    curve.points.push_back({th, static_cast<double>(ti) / nt,
                            static_cast<double>(non.size() - ni) / nn});
  }
  return curve;
}

/// Crossing of p_miss and p_fa on the staircase, linearly interpolated
/// between the last point with p_miss < p_fa and the next one.
inline double eer_from_curve(const DetCurve& c) {
  const auto& p = c.points;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i].p_miss < p[i].p_fa) continue;
    if (i == 0) return p[0].p_miss;  // unreachable: first point is (0, 1)
    const DetPoint& a = p[i - 1];
    const DetPoint& b = p[i];
    const double t =
        (a.p_fa - a.p_miss) / ((b.p_miss - a.p_miss) - (b.p_fa - a.p_fa));
    return a.p_miss + t * (b.p_miss - a.p_miss);
  }
  return p.back().p_miss;
}

inline double eer(const ScoreSet& s) { return eer_from_curve(det_points(s)); }

inline double effective_prior_logit(double p_eff) {
  require(p_eff > 0.0 && p_eff < 1.0, ErrorKind::kDomain,
          "effective prior must lie in (0, 1), got " + std::to_string(p_eff));
  return std::log(p_eff / (1.0 - p_eff));
}

inline double normalized_cost(double p_eff, double p_miss, double p_fa) {
  return (p_eff * p_miss + (1.0 - p_eff) * p_fa) /
         std::min(p_eff, 1.0 - p_eff);
}

/// Normalized cost with decisions at the Bayes threshold -logit(p_eff).  Not
/// clipped: miscalibrated systems can exceed 1.
inline double actual_dcf(const ScoreSet& s, double p_eff) {
  const double threshold = -effective_prior_logit(p_eff);
  const auto [tar, non] = split_by_class(s);
  std::size_t miss = 0, fa = 0;
  for (double x : tar)
    if (!(x >= threshold)) ++miss;
  for (double x : non)
    if (x >= threshold) ++fa;
  return normalized_cost(p_eff,
                         static_cast<double>(miss) / static_cast<double>(tar.size()),
                         static_cast<double>(fa) / static_cast<double>(non.size()));
}

inline double min_dcf_from_curve(const DetCurve& c, double p_eff) {
  effective_prior_logit(p_eff);
  double best = std::numeric_limits<double>::infinity();
  for (const DetPoint& p : c.points)
    best = std::min(best, normalized_cost(p_eff, p.p_miss, p.p_fa));
  return best;
}

inline double min_dcf(const ScoreSet& s, double p_eff) {
  return min_dcf_from_curve(det_points(s), p_eff);
}

struct CostParams {
  std::vector<double> effective_priors;

  void validate() const {
    require(!effective_priors.empty(), ErrorKind::kParameter,
            "cost parameters need at least one effective prior");
    for (double p : effective_priors) effective_prior_logit(p);
  }

  /// "cmn2" = {0.01, 0.005}, "vast" = {0.05}.
  static CostParams preset(const std::string& name) {
    if (name == "cmn2") return {{0.01, 0.005}};
    if (name == "vast") return {{0.05}};
    throw Error(ErrorKind::kParameter, "unknown cost preset '" + name + "'");
  }
};

enum class CostMode { kActual, kMin };

/// Mean of the normalized cost over the configured effective priors.
inline double c_primary(const ScoreSet& s, const CostParams& params,
                        CostMode mode) {
  params.validate();
  double sum = 0.0;
  if (mode == CostMode::kMin) {
    const DetCurve curve = det_points(s);
    for (double p : params.effective_priors) sum += min_dcf_from_curve(curve, p);
  } else {
    for (double p : params.effective_priors) sum += actual_dcf(s, p);
  }
  return sum / static_cast<double>(params.effective_priors.size());
}

}  // namespace svback
