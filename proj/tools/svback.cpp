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

// svback: command-line front end chaining PLDA training, adaptation, scoring,
// diarized scoring, calibration, fusion, evaluation and synthetic data
// generation.  Exit status: 0 on success, 2 on usage errors, 1 on data errors.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "svback/adaptation.hpp"
#include "svback/calfuse.hpp"
#include "svback/diarization.hpp"
#include "svback/io.hpp"
#include "svback/metrics.hpp"
#include "svback/plda.hpp"
#include "svback/synth.hpp"

namespace svback::cli {
namespace {

std::optional<Preprocessor> load_preprocessor(const std::string& path) {
  if (path.empty()) return std::nullopt;
  return io::read_preprocessor(path);
}

EmbeddingArchive maybe_apply(const std::optional<Preprocessor>& p, EmbeddingArchive a) {
  return p ? p->apply(a) : a;
}

ScoreSet labeled_scores(const std::string& scores, const std::string& trials) {
  const TrialList t = io::read_trials(trials);
  require(t.labels.has_value(), ErrorKind::kLabel, trials + ": trial list has no labels");
  ScoreSet s = io::read_scores(scores);
  const bool fused = s.fused;
  s = attach_labels(std::move(s), t.keyed());
  s.fused = fused;
  return s;
}

// --- train-plda ---------------------------------------------------------------

struct TrainArgs {
  std::string archive, utt2spk, out, preprocessor_out;
  bool whiten = false, length_norm = false;
  EmOptions em;
};

void train_plda(const TrainArgs& a) {
  LabeledEmbeddings data = io::read_labeled(a.archive, a.utt2spk);
  if (a.whiten || a.length_norm) {
    Preprocessor p;
    if (a.whiten) {
      std::vector<Vector> xs;
      for (const Embedding& e : data.embeddings) xs.push_back(e.values);
      p = fit_preprocessor(xs, a.length_norm);
    } else {
      p.shift = Vector::Zero(data.dim());
      p.transform = Matrix::Identity(data.dim(), data.dim());
      p.apply_length_norm = true;
    }
    data = p.apply(data);
    require(!a.preprocessor_out.empty(), ErrorKind::kUsage,
            "--whiten/--length-norm need --preprocessor-out so scoring can reuse it");
    io::write_preprocessor(p, a.preprocessor_out);
  }
  std::vector<double> trace;
  const GaussianPLDA m = fit_plda_em(data, a.em, &trace);
  io::write_model(m, a.out);
  std::fprintf(stderr, "trained d=%ld PLDA on %zu embeddings; log-likelihood %.6f -> %.6f\n",
               static_cast<long>(m.dim()), data.embeddings.size(), trace.front(),
               trace.back());
}

// --- adapt ----------------------------------------------------------------------

struct AdaptArgs {
  std::string model, in_domain, preprocessor, out, method = "coral-plus";
  double gamma = 0.5;
  std::vector<double> shares{0.75, 0.25};
};

void adapt(const AdaptArgs& a) {
  const GaussianPLDA m = io::read_model(a.model);
  const EmbeddingArchive in =
      maybe_apply(load_preprocessor(a.preprocessor), io::read_embedding_archive(a.in_domain));
  const std::vector<Vector> xs = in.values();
  const DomainStats st = collect_domain_stats(xs);
  GaussianPLDA adapted;
  if (a.method == "coral")
    adapted = coral_align_model(m, st);
  else if (a.method == "coral-plus")
    adapted = coral_plus_adapt(m, st, a.gamma);
  else
    adapted = excess_variance_adapt(m, st, {a.shares.at(0), a.shares.at(1)});
  io::write_model(adapted, a.out);
}

// --- score ------------------------------------------------------------------------

struct ScoreArgs {
  std::string model, enroll, test, trials, preprocessor, out;
};

void score(const ScoreArgs& a) {
  const GaussianPLDA m = io::read_model(a.model);
  const auto pre = load_preprocessor(a.preprocessor);
  const EmbeddingArchive enroll = maybe_apply(pre, io::read_embedding_archive(a.enroll));
  const EmbeddingArchive test = maybe_apply(pre, io::read_embedding_archive(a.test));
  const TrialList t = io::read_trials(a.trials);
  io::write_scores(score_trials(m, enroll, test, t.trials), a.out);
}

// --- diarize ----------------------------------------------------------------------

struct DiarizeArgs {
  std::string model, enroll, cuts, trials, preprocessor, out, clusters_out, durations;
  double threshold = 0.0;
  double cut_length = 1.0;
  bool whole = false;
};

void write_plan(const DiarizeArgs& a) {
  std::vector<CutPlan> plans;
  const std::vector<std::string> lines = io::read_lines(a.durations);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (io::blank(lines[i])) continue;
    const auto f = io::split(lines[i], '\t');
    if (f.size() != 2 || f[0].empty())
      throw ParseError(a.durations, i + 1, "expected 'recording<TAB>seconds'");
    plans.push_back(uniform_cut_plan(io::parse_finite(f[1], a.durations, i + 1),
                                     a.cut_length, std::string(f[0])));
  }
  io::write_cut_plans(plans, a.out);
}

void diarize(const DiarizeArgs& a) {
  if (!a.durations.empty()) return write_plan(a);
  require(!a.model.empty() && !a.enroll.empty() && !a.cuts.empty() && !a.trials.empty(),
          ErrorKind::kUsage,
          "diarized scoring needs --model, --enroll, --cuts and --trials "
          "(or --durations to write a cut plan)");
  const GaussianPLDA m = io::read_model(a.model);
  const auto pre = load_preprocessor(a.preprocessor);
  const EmbeddingArchive enroll = maybe_apply(pre, io::read_embedding_archive(a.enroll));
  const auto recordings = io::group_cuts(maybe_apply(pre, io::read_embedding_archive(a.cuts)));
  const TrialList t = io::read_trials(a.trials);

  std::map<std::string, Clustering> clusterings;
  if (!a.whole)
    for (const auto& [rec, cuts] : recordings)
      clusterings.emplace(rec, ahc_cluster(affinity_matrix(m, cuts), a.threshold));

  ScoreSet out;
  for (const Trial& tr : t.trials) {
    const auto it = recordings.find(tr.test);
    if (it == recordings.end())
      throw Error(ErrorKind::kLookup, "no cuts for recording '" + tr.test + "'");
    const Vector& e = enroll.at(tr.enroll);
    double s;
    if (a.whole) {
      s = score_whole_segment(m, e, it->second);
    } else {
      const std::vector<Vector> means = cluster_means(it->second, clusterings.at(tr.test));
      s = -std::numeric_limits<double>::infinity();
      for (const Vector& c : means) s = std::max(s, plda_llr_score(m, e, c));
    }
    out.trials.push_back(tr);
    out.scores.push_back(s);
  }
  io::write_scores(out, a.out);

  if (!a.clusters_out.empty()) {
    io::Writer w(a.clusters_out);
    for (const auto& [rec, c] : clusterings)
      for (std::size_t i = 0; i < c.assignment.size(); ++i)
        w.stream() << rec << '#' << i << '\t' << c.assignment[i] << '\n';
    w.close();
  }
}

// --- calibrate / fuse ------------------------------------------------------------

struct CalibrateArgs {
  std::string scores, trials, model, model_out, out;
  double prior = 0.5;
};

void calibrate(const CalibrateArgs& a) {
  CalibrationModel c;
  if (!a.model.empty()) {
    const FusionPipeline p = io::read_fusion(a.model);
    require(p.fusion.weights.size() == 1, ErrorKind::kInvalidModel,
            a.model + ": not a single-system calibration");
    c = {p.fusion.weights[0], p.fusion.offset};
  } else {
    require(!a.trials.empty(), ErrorKind::kUsage,
            "calibrate needs --trials to train or --model to apply");
    c = train_calibration(labeled_scores(a.scores, a.trials), a.prior);
    if (!a.model_out.empty()) {
      FusionPipeline p;
      p.precalibration = {CalibrationModel{}};
      p.fusion = {{"calibration"}, {c.a}, c.b, a.prior, {0}};
      io::write_fusion(p, a.model_out);
    }
    std::fprintf(stderr, "calibration: a=%.6f b=%.6f\n", c.a, c.b);
  }
  if (!a.out.empty()) io::write_scores(apply_affine(c, io::read_scores(a.scores)), a.out);
}

struct FuseArgs {
  std::vector<std::string> scores;
  std::string trials, model, model_out, out;
  double prior = 0.5;
  double calibration_prior = 0.5;
  bool prune = false, single_pass = false, no_precalibration = false;
};

void fuse(const FuseArgs& a) {
  FusionPipeline p;
  std::vector<ScoreSet> systems;
  if (!a.model.empty()) {
    p = io::read_fusion(a.model);
    for (const std::string& s : a.scores) systems.push_back(io::read_scores(s));
  } else {
    require(!a.trials.empty(), ErrorKind::kUsage,
            "fuse needs --trials to train or --model to apply");
    for (const std::string& s : a.scores) systems.push_back(labeled_scores(s, a.trials));
    std::vector<std::string> names;
    for (const std::string& s : a.scores) names.push_back(std::filesystem::path(s).stem());
    FusionOptions opts;
    opts.p_eff = a.prior;
    opts.calibration_prior = a.calibration_prior;
    opts.precalibrate = !a.no_precalibration;
    opts.prune = a.prune;
    opts.single_pass = a.single_pass;
    p = train_fusion_pipeline(systems, opts, names);
    if (!a.model_out.empty()) io::write_fusion(p, a.model_out);
    for (std::size_t j = 0; j < p.fusion.names.size(); ++j)
      std::fprintf(stderr, "%s weight %.6f\n", p.fusion.names[j].c_str(), p.fusion.weights[j]);
    std::fprintf(stderr, "offset %.6f, %zu of %zu subsystems retained\n", p.fusion.offset,
                 p.fusion.retained.size(), p.fusion.names.size());
  }
  if (!a.out.empty()) io::write_scores(apply_fusion_pipeline(p, systems), a.out);
}

// --- evaluate -----------------------------------------------------------------------

struct EvaluateArgs {
  std::string scores, trials, preset, det_out;
  std::vector<double> priors;
};

void evaluate(const EvaluateArgs& a) {
  const ScoreSet s = labeled_scores(a.scores, a.trials);
  CostParams params =
      a.priors.empty() ? CostParams::preset(a.preset.empty() ? "cmn2" : a.preset)
                       : CostParams{a.priors};
  params.validate();
  const DetCurve curve = det_points(s);
  const auto [tar, non] = split_by_class(s);
  std::printf("trials %zu (target %zu, nontarget %zu)\n", s.size(), tar.size(), non.size());
  std::printf("EER %.4f%%\n", 100.0 * eer_from_curve(curve));
  for (double p : params.effective_priors)
    std::printf("P_eff %g: minDCF %.4f actDCF %.4f\n", p, min_dcf_from_curve(curve, p),
                actual_dcf(s, p));
  std::printf("C_primary: min %.4f act %.4f\n", c_primary(s, params, CostMode::kMin),
              c_primary(s, params, CostMode::kActual));
  if (!a.det_out.empty()) {
    io::Writer w(a.det_out);
    for (const DetPoint& p : curve.points)
      w.stream() << io::format_double(p.threshold) << '\t' << io::format_double(p.p_miss)
                 << '\t' << io::format_double(p.p_fa) << '\n';
    w.close();
  }
}

// --- synth ----------------------------------------------------------------------------

struct SynthArgs {
  std::string config, out, kind = "domain-shift";
  std::optional<std::uint64_t> seed;
};

void synthesize(const SynthArgs& a) {
  std::map<std::string, std::string> kv;
  if (!a.config.empty()) kv = io::read_config(a.config);
  synth::ExperimentConfig c = synth::ExperimentConfig::from_map(kv);
  if (a.seed) c.seed = *a.seed;
  if (a.kind == "domain-shift") {
    synth::write_domain_shift_dataset(synth::synth_domain_shift_experiment(c), a.out);
  } else {
    if (!c.multi_speaker) c.multi_speaker.emplace();
    synth::write_multispeaker_dataset(synth::synth_multispeaker_experiment(c), a.out);
  }
}

int main_impl(int argc, char** argv) {
  CLI::App app{"svback: speaker verification back-end toolkit"};
  app.require_subcommand(1);

  TrainArgs train;
  auto* t = app.add_subcommand("train-plda", "train a two-covariance PLDA model with EM");
  t->add_option("--train", train.archive, "training embedding archive")->required();
  t->add_option("--utt2spk", train.utt2spk, "key-to-speaker map")->required();
  t->add_option("--out", train.out, "output model file")->required();
  t->add_flag("--whiten", train.whiten, "center and whiten before training");
  t->add_flag("--length-norm", train.length_norm, "length-normalize before training");
  t->add_option("--preprocessor-out", train.preprocessor_out, "where to save the preprocessor");
  t->add_option("--iterations", train.em.iterations, "EM iterations")
      ->check(CLI::PositiveNumber);
  t->add_option("--variance-floor", train.em.variance_floor, "within-covariance floor")
      ->check(CLI::PositiveNumber);
  t->add_option("--tolerance", train.em.tolerance,
                "per-sample log-likelihood gain for early stopping (0 disables)");

  AdaptArgs ad;
  auto* adp = app.add_subcommand("adapt", "adapt a PLDA model to unlabeled in-domain data");
  adp->add_option("--model", ad.model)->required();
  adp->add_option("--in-domain", ad.in_domain, "unlabeled in-domain archive")->required();
  adp->add_option("--out", ad.out)->required();
  adp->add_option("--method", ad.method)
      ->check(CLI::IsMember({"coral", "coral-plus", "excess-variance"}));
  adp->add_option("--gamma", ad.gamma, "CORAL+ interpolation weight")
      ->check(CLI::Range(0.0, 1.0));
  adp->add_option("--shares", ad.shares, "excess-variance within,between shares")
      ->delimiter(',')
      ->expected(2);
  adp->add_option("--preprocessor", ad.preprocessor);

  ScoreArgs sc;
  auto* scp = app.add_subcommand("score", "score trials with a PLDA model");
  scp->add_option("--model", sc.model)->required();
  scp->add_option("--enroll", sc.enroll)->required();
  scp->add_option("--test", sc.test)->required();
  scp->add_option("--trials", sc.trials)->required();
  scp->add_option("--out", sc.out)->required();
  scp->add_option("--preprocessor", sc.preprocessor);

  DiarizeArgs di;
  auto* dip = app.add_subcommand(
      "diarize", "score multi-speaker test recordings via AHC, or write a cut plan");
  dip->add_option("--model", di.model);
  dip->add_option("--enroll", di.enroll);
  dip->add_option("--cuts", di.cuts, "cut archive keyed recording#index");
  dip->add_option("--trials", di.trials);
  dip->add_option("--out", di.out)->required();
  dip->add_option("--threshold", di.threshold, "AHC stopping threshold");
  dip->add_option("--cut-length", di.cut_length, "seconds per cut")->check(CLI::Range(0.5, 1e9));
  dip->add_option("--durations", di.durations, "recording<TAB>seconds; writes a cut plan");
  dip->add_option("--clusters-out", di.clusters_out);
  dip->add_flag("--whole", di.whole, "score the whole segment instead");
  dip->add_option("--preprocessor", di.preprocessor);

  CalibrateArgs ca;
  auto* cap = app.add_subcommand("calibrate", "train or apply affine score calibration");
  cap->add_option("--scores", ca.scores)->required();
  cap->add_option("--trials", ca.trials, "labeled trials (training)");
  cap->add_option("--prior", ca.prior, "effective prior")->check(CLI::Range(0.0, 1.0));
  cap->add_option("--model", ca.model, "apply a saved calibration");
  cap->add_option("--model-out", ca.model_out);
  cap->add_option("--out", ca.out, "calibrated score file");

  FuseArgs fu;
  auto* fup = app.add_subcommand("fuse", "train or apply linear score fusion");
  fup->add_option("--scores", fu.scores, "one score file per subsystem")->required();
  fup->add_option("--trials", fu.trials, "labeled trials (training)");
  fup->add_option("--prior", fu.prior, "fusion effective prior")->check(CLI::Range(0.0, 1.0));
  fup->add_option("--calibration-prior", fu.calibration_prior)->check(CLI::Range(0.0, 1.0));
  fup->add_flag("--prune", fu.prune, "drop subsystems with non-positive weights");
  fup->add_flag("--single-pass", fu.single_pass, "prune once instead of to a fixed point");
  fup->add_flag("--no-precalibration", fu.no_precalibration);
  fup->add_option("--model", fu.model, "apply a saved fusion");
  fup->add_option("--model-out", fu.model_out);
  fup->add_option("--out", fu.out, "fused score file");

  EvaluateArgs ev;
  auto* evp = app.add_subcommand("evaluate", "EER, minimum and actual detection costs");
  evp->add_option("--scores", ev.scores)->required();
  evp->add_option("--trials", ev.trials)->required();
  auto* priors = evp->add_option("--priors", ev.priors, "effective priors")->delimiter(',');
  evp->add_option("--preset", ev.preset)
      ->check(CLI::IsMember({"cmn2", "vast"}))
      ->excludes(priors);
  evp->add_option("--det-out", ev.det_out, "threshold<TAB>pmiss<TAB>pfa");

  SynthArgs sy;
  auto* syp = app.add_subcommand("synth", "generate a synthetic experiment on disk");
  syp->add_option("--config", sy.config, "key = value config file");
  syp->add_option("--out", sy.out)->required();
  syp->add_option("--kind", sy.kind)->check(CLI::IsMember({"domain-shift", "multi-speaker"}));
  syp->add_option("--seed", sy.seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (t->parsed()) train_plda(train);
  if (adp->parsed()) adapt(ad);
  if (scp->parsed()) score(sc);
  if (dip->parsed()) diarize(di);
  if (cap->parsed()) calibrate(ca);
  if (fup->parsed()) fuse(fu);
  if (evp->parsed()) evaluate(ev);
  if (syp->parsed()) synthesize(sy);
  return 0;
}

}  // namespace
}  // namespace svback::cli

int main(int argc, char** argv) {
  try {
    return svback::cli::main_impl(argc, argv);
  } catch (const svback::Error& e) {
    std::fprintf(stderr, "svback: %s\n", e.what());
    return e.kind() == svback::ErrorKind::kUsage ? 2 : 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "svback: %s\n", e.what());
    return 1;
  }
}
