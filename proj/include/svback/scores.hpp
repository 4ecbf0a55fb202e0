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

#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "svback/common.hpp"

namespace svback {

struct Trial {
  std::string enroll;
  std::string test;

  friend bool operator==(const Trial&, const Trial&) = default;
  friend auto operator<=>(const Trial&, const Trial&) = default;
};

enum class TrialLabel { kNontarget, kTarget };

/// Trial-aligned scores, optionally labeled.  `fused` marks the output of a
/// fusion, which is refused as fusion input.
struct ScoreSet {
  std::vector<Trial> trials;
  std::vector<double> scores;
  std::optional<std::vector<TrialLabel>> labels;
  bool fused = false;

  std::size_t size() const { return scores.size(); }
  bool labeled() const { return labels.has_value(); }

  void validate() const {
    require(trials.size() == scores.size(), ErrorKind::kAlignment,
            "score set has " + std::to_string(trials.size()) + " trials but " +
                std::to_string(scores.size()) + " scores");
    if (labels)
      require(labels->size() == scores.size(), ErrorKind::kAlignment,
              "score set label count does not match score count");
  }
};

/// Trial list as read from a trials file; labels present for keys used in
/// training and evaluation.
struct TrialList {
  std::vector<Trial> trials;
  std::optional<std::vector<TrialLabel>> labels;
  std::vector<std::pair<Trial, TrialLabel>> keyed() const {
    require(labels.has_value(), ErrorKind::kLabel, "trial list has no labels");
    std::vector<std::pair<Trial, TrialLabel>> out;
    for (std::size_t i = 0; i < trials.size(); ++i)
      out.emplace_back(trials[i], (*labels)[i]);
    return out;
  }
};

/// Splits a labeled score set into (target, nontarget) score lists.  Throws a
/// label error when unlabeled and a class error when either class is empty.
inline std::pair<std::vector<double>, std::vector<double>> split_by_class(
    const ScoreSet& s) {
  s.validate();
  if (!s.labels) throw Error(ErrorKind::kLabel, "score set has no labels");
  std::pair<std::vector<double>, std::vector<double>> out;
  for (std::size_t i = 0; i < s.scores.size(); ++i) {
    if ((*s.labels)[i] == TrialLabel::kTarget)
      out.first.push_back(s.scores[i]);
    else
      out.second.push_back(s.scores[i]);
  }
  require(!out.first.empty(), ErrorKind::kClass, "no target trials");
  require(!out.second.empty(), ErrorKind::kClass, "no nontarget trials");
  return out;
}

/// Builds a labeled score set from raw target / nontarget lists, with
/// synthetic trial ids.
inline ScoreSet make_labeled_scores(const std::vector<double>& targets,
                                    const std::vector<double>& nontargets) {
  ScoreSet s;
  s.labels.emplace();
  for (std::size_t i = 0; i < targets.size(); ++i) {
    s.trials.push_back({"tar" + std::to_string(i), "t"});
    s.scores.push_back(targets[i]);
    s.labels->push_back(TrialLabel::kTarget);
  }
  for (std::size_t i = 0; i < nontargets.size(); ++i) {
    s.trials.push_back({"non" + std::to_string(i), "t"});
    s.scores.push_back(nontargets[i]);
    s.labels->push_back(TrialLabel::kNontarget);
  }
  return s;
}

/// Attaches labels to a score set by (enroll, test) lookup into a labeled
/// trial list.
inline ScoreSet attach_labels(
    ScoreSet s, const std::vector<std::pair<Trial, TrialLabel>>& keyed) {
  std::map<Trial, TrialLabel> lookup;
  for (const auto& [t, l] : keyed) lookup.emplace(t, l);
  std::vector<TrialLabel> labels;
  labels.reserve(s.trials.size());
  for (const Trial& t : s.trials) {
    auto it = lookup.find(t);
    if (it == lookup.end())
      throw Error(ErrorKind::kLabel,
                  "no label for trial " + t.enroll + " " + t.test);
    labels.push_back(it->second);
  }
  s.labels = std::move(labels);
  return s;
}

}  // namespace svback
