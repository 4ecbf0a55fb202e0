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

// Closed-loop runs over the synthetic datasets: train, adapt or diarize, score
// and measure.

#pragma once

#include <map>
#include <string>
#include <vector>

#include "svback/adaptation.hpp"
#include "svback/diarization.hpp"
#include "svback/metrics.hpp"
#include "svback/plda.hpp"
#include "svback/synth.hpp"

namespace svback::experiments {

inline ScoreSet score_set(const GaussianPLDA& model, const synth::TrialSet& t) {
  return t.labeled(score_trials(model, t.enroll, t.test, t.trials.trials));
}

struct DomainShiftResult {
  GaussianPLDA out_of_domain;
  double eer_unshifted = 0.0;   // out-of-domain model on out-of-domain eval
  double eer_unadapted = 0.0;   // out-of-domain model on in-domain eval
  double eer_coral = 0.0;       // feature-level alignment
  double eer_coral_plus = 0.0;
  double eer_excess_variance = 0.0;
};

struct DomainShiftOptions {
  EmOptions em;
  double gamma = 0.5;
  ExcessVarianceShares shares;
};

inline DomainShiftResult run_domain_shift(const synth::DomainShiftDataset& ds,
                                          const DomainShiftOptions& opts = {}) {
  DomainShiftResult r;
  r.out_of_domain = fit_plda_em(ds.train, opts.em);
  const std::vector<Vector> unl = ds.unlabeled.values();
  const DomainStats in_stats = collect_domain_stats(unl);
  r.eer_unshifted = eer(score_set(r.out_of_domain, ds.eval_unshifted));
  r.eer_unadapted = eer(score_set(r.out_of_domain, ds.eval));
  r.eer_coral = eer(score_set(coral_align_model(r.out_of_domain, in_stats), ds.eval));
  r.eer_coral_plus =
      eer(score_set(coral_plus_adapt(r.out_of_domain, in_stats, opts.gamma), ds.eval));
  r.eer_excess_variance = eer(
      score_set(excess_variance_adapt(r.out_of_domain, in_stats, opts.shares), ds.eval));
  return r;
}

/// Scores every trial of a multi-speaker split both ways.
struct MultiSpeakerScores {
  ScoreSet whole;
  ScoreSet diarized;
  std::vector<int> cluster_counts;     // per recording
  std::vector<double> purities;        // per recording
};

inline MultiSpeakerScores score_multispeaker_split(const GaussianPLDA& model,
                                                   const synth::MultiSpeakerSplit& split,
                                                   double threshold) {
  MultiSpeakerScores out;
  std::map<std::string, std::size_t> rec_index;
  for (std::size_t i = 0; i < split.recordings.size(); ++i)
    rec_index[split.recordings[i].id] = i;
  // Cluster once per recording.
  const PldaScorer scorer(model);
  std::vector<std::vector<Vector>> projected_means;
  for (const synth::SynthRecording& rec : split.recordings) {
    const Clustering c = ahc_cluster(affinity_matrix(model, rec.cuts), threshold);
    out.cluster_counts.push_back(c.k);
    out.purities.push_back(cluster_purity(c, rec.speakers));
    std::vector<Vector> proj;
    for (const Vector& m : cluster_means(rec.cuts, c)) proj.push_back(scorer.project(m));
    projected_means.push_back(std::move(proj));
  }
  for (const Trial& t : split.trials.trials) {
    const synth::SynthRecording& rec = split.recordings.at(rec_index.at(t.test));
    const Vector& enroll = split.enroll.at(t.enroll);
    out.whole.trials.push_back(t);
    out.whole.scores.push_back(score_whole_segment(model, enroll, rec.cuts));
    const Vector e = scorer.project(enroll);
    double best = -std::numeric_limits<double>::infinity();
    for (const Vector& m : projected_means[rec_index.at(t.test)])
      best = std::max(best, scorer.score_projected(e, m));
    out.diarized.trials.push_back(t);
    out.diarized.scores.push_back(best);
  }
  out.whole.labels = split.trials.labels;
  out.diarized.labels = split.trials.labels;
  return out;
}

struct MultiSpeakerResult {
  GaussianPLDA model;
  ThresholdChoice tuned;
  double k_accuracy = 0.0;   // eval recordings with the reference speaker count
  double mean_purity = 0.0;  // eval
  double eer_whole = 0.0;
  double eer_diarized = 0.0;
};

inline std::vector<double> default_threshold_grid() {
  std::vector<double> g;
  for (double t = -20.0; t <= 20.0 + 1e-9; t += 0.5) g.push_back(t);
  return g;
}

inline MultiSpeakerResult run_multispeaker(const synth::MultiSpeakerDataset& ds,
                                           const EmOptions& em = {}) {
  MultiSpeakerResult r;
  r.model = fit_plda_em(ds.train, em);
  r.tuned = tune_ahc_threshold(r.model, ds.dev.labeled_recordings(),
                               default_threshold_grid());
  const MultiSpeakerScores s = score_multispeaker_split(r.model, ds.eval, r.tuned.threshold);
  const int want = ds.config.multi_speaker->speakers_per_recording;
  double hits = 0, purity = 0;
  for (std::size_t i = 0; i < s.cluster_counts.size(); ++i) {
    if (s.cluster_counts[i] == want) hits += 1;
    purity += s.purities[i];
  }
  r.k_accuracy = hits / static_cast<double>(s.cluster_counts.size());
  r.mean_purity = purity / static_cast<double>(s.purities.size());
  r.eer_whole = eer(s.whole);
  r.eer_diarized = eer(s.diarized);
  return r;
}

}  // namespace svback::experiments
