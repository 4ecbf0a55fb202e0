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

// Synthetic experiment generators.  A ground-truth PLDA is drawn, out-of-domain
// training data is sampled from it, and in-domain data is the same generative
// process pushed through a fixed invertible linear map plus a mean offset.  The
// multi-speaker generator builds recordings of interleaved 1 s cuts from
// several speakers.  Everything is a pure function of the config; the random
// stream itself is whatever std::mt19937_64 + std::normal_distribution produce
// on the host standard library.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "svback/common.hpp"
#include "svback/diarization.hpp"
#include "svback/embedding.hpp"
#include "svback/io.hpp"
#include "svback/linalg.hpp"
#include "svback/plda.hpp"
#include "svback/scores.hpp"

namespace svback::synth {

struct DomainShift {
  double rotation_scale = 1.0;  // 0 = no rotation
  double scale_min = 0.5;       // diagonal scaling drawn log-uniformly
  double scale_max = 2.0;
  double mean_offset = 5.0;     // norm of the in-domain mean shift
};

struct MultiSpeakerConfig {
  int speakers_per_recording = 2;
  int cuts_per_speaker = 10;
  int recordings_dev = 40;
  int recordings_eval = 120;
  int nontargets_per_recording = 2;
  double cut_length = 1.0;
  double cut_noise_scale = 1.0;  // within-speaker noise multiplier per cut
};

struct ExperimentConfig {
  int dim = 50;
  int n_speakers_train = 300;
  int n_speakers_dev = 60;
  int n_speakers_eval = 60;
  int per_speaker = 10;
  int n_unlabeled = 3000;
  int nontargets_per_target = 10;  // 0 = every other-speaker test
  double between_scale = 1.0;
  double within_scale = 1.0;
  DomainShift domain_shift;
  std::uint64_t seed = 2018;
  std::optional<MultiSpeakerConfig> multi_speaker;

  void validate() const {
    auto pos = [](long v, const char* name) {
      require(v >= 1, ErrorKind::kConfig, std::string(name) + " must be >= 1");
    };
    pos(dim, "dim");
    pos(n_speakers_train, "n_speakers_train");
    pos(n_speakers_dev, "n_speakers_dev");
    pos(n_speakers_eval, "n_speakers_eval");
    pos(per_speaker, "per_speaker");
    pos(n_unlabeled, "n_unlabeled");
    require(nontargets_per_target >= 0, ErrorKind::kConfig,
            "nontargets_per_target must be >= 0");
    require(n_speakers_train >= 2, ErrorKind::kConfig,
            "n_speakers_train must be >= 2");
    require(n_speakers_dev >= 2 && n_speakers_eval >= 2, ErrorKind::kConfig,
            "dev and eval need at least 2 speakers for nontarget trials");
    require(per_speaker >= 2, ErrorKind::kConfig,
            "per_speaker must be >= 2 (one enrollment plus tests)");
    require(n_unlabeled >= 2, ErrorKind::kConfig, "n_unlabeled must be >= 2");
    require(between_scale > 0 && within_scale > 0, ErrorKind::kConfig,
            "covariance scales must be positive");
    const DomainShift& s = domain_shift;
    require(s.rotation_scale >= 0 && s.mean_offset >= 0, ErrorKind::kConfig,
            "rotation scale and mean offset must be non-negative");
    require(s.scale_min > 0 && s.scale_max >= s.scale_min, ErrorKind::kConfig,
            "scaling range must be positive and ordered");
    const long others = static_cast<long>(n_speakers_eval - 1) * (per_speaker - 1);
    require(nontargets_per_target <= others &&
                nontargets_per_target <=
                    static_cast<long>(n_speakers_dev - 1) * (per_speaker - 1),
            ErrorKind::kConfig,
            "nontargets_per_target exceeds the available nontarget tests");
    if (multi_speaker) {
      const MultiSpeakerConfig& m = *multi_speaker;
      pos(m.speakers_per_recording, "speakers_per_recording");
      pos(m.cuts_per_speaker, "cuts_per_speaker");
      pos(m.recordings_dev, "recordings_dev");
      pos(m.recordings_eval, "recordings_eval");
      require(m.nontargets_per_recording >= 0, ErrorKind::kConfig,
              "nontargets_per_recording must be >= 0");
      require(m.cut_length >= kMinCutSeconds, ErrorKind::kConfig,
              "cut_length must be at least 0.5 s");
      require(m.cut_noise_scale > 0, ErrorKind::kConfig,
              "cut_noise_scale must be positive");
      require(m.speakers_per_recording + m.nontargets_per_recording <=
                  n_speakers_eval && m.speakers_per_recording +
                  m.nontargets_per_recording <= n_speakers_dev,
              ErrorKind::kConfig,
              "speaker pool too small for speakers_per_recording + "
              "nontargets_per_recording");
    }
  }

  /// Reads `key = value` pairs.  Any multi-speaker key enables the
  /// multi-speaker section.  Unknown keys are rejected.
  static ExperimentConfig from_map(const std::map<std::string, std::string>& kv) {
    ExperimentConfig c;
    auto num = [](const std::string& key, const std::string& v) {
      double out = 0;
      if (!io::parse_double(v, out) || !std::isfinite(out))
        throw Error(ErrorKind::kConfig, "'" + key + "' is not a number: " + v);
      return out;
    };
    auto integer = [&](const std::string& key, const std::string& v) {
      const double d = num(key, v);
      if (d != std::floor(d))
        throw Error(ErrorKind::kConfig, "'" + key + "' must be an integer");
      return static_cast<int>(d);
    };
    for (const auto& [key, value] : kv) {
      auto ms = [&]() -> MultiSpeakerConfig& {
        if (!c.multi_speaker) c.multi_speaker.emplace();
        return *c.multi_speaker;
      };
      if (key == "dim") c.dim = integer(key, value);
      else if (key == "n_speakers_train") c.n_speakers_train = integer(key, value);
      else if (key == "n_speakers_dev") c.n_speakers_dev = integer(key, value);
      else if (key == "n_speakers_eval") c.n_speakers_eval = integer(key, value);
      else if (key == "per_speaker") c.per_speaker = integer(key, value);
      else if (key == "n_unlabeled") c.n_unlabeled = integer(key, value);
      else if (key == "nontargets_per_target") c.nontargets_per_target = integer(key, value);
      else if (key == "between_scale") c.between_scale = num(key, value);
      else if (key == "within_scale") c.within_scale = num(key, value);
      else if (key == "rotation_scale") c.domain_shift.rotation_scale = num(key, value);
      else if (key == "scale_min") c.domain_shift.scale_min = num(key, value);
      else if (key == "scale_max") c.domain_shift.scale_max = num(key, value);
      else if (key == "mean_offset") c.domain_shift.mean_offset = num(key, value);
      else if (key == "seed") {
        try {
          c.seed = std::stoull(value);
        } catch (const std::exception&) {
          throw Error(ErrorKind::kConfig, "'seed' must be an unsigned integer");
        }
      }
      else if (key == "speakers_per_recording") ms().speakers_per_recording = integer(key, value);
      else if (key == "cuts_per_speaker") ms().cuts_per_speaker = integer(key, value);
      else if (key == "recordings_dev") ms().recordings_dev = integer(key, value);
      else if (key == "recordings_eval") ms().recordings_eval = integer(key, value);
      else if (key == "nontargets_per_recording") ms().nontargets_per_recording = integer(key, value);
      else if (key == "cut_length") ms().cut_length = num(key, value);
      else if (key == "cut_noise_scale") ms().cut_noise_scale = num(key, value);
      else throw Error(ErrorKind::kConfig, "unknown config key '" + key + "'");
    }
    c.validate();
    return c;
  }

  nlohmann::json to_json() const {
    nlohmann::json j = {
        {"dim", dim},
        {"n_speakers_train", n_speakers_train},
        {"n_speakers_dev", n_speakers_dev},
        {"n_speakers_eval", n_speakers_eval},
        {"per_speaker", per_speaker},
        {"n_unlabeled", n_unlabeled},
        {"nontargets_per_target", nontargets_per_target},
        {"between_scale", between_scale},
        {"within_scale", within_scale},
        {"rotation_scale", domain_shift.rotation_scale},
        {"scale_min", domain_shift.scale_min},
        {"scale_max", domain_shift.scale_max},
        {"mean_offset", domain_shift.mean_offset},
        {"seed", seed},
    };
    if (multi_speaker) {
      const MultiSpeakerConfig& m = *multi_speaker;
      j["speakers_per_recording"] = m.speakers_per_recording;
      j["cuts_per_speaker"] = m.cuts_per_speaker;
      j["recordings_dev"] = m.recordings_dev;
      j["recordings_eval"] = m.recordings_eval;
      j["nontargets_per_recording"] = m.nontargets_per_recording;
      j["cut_length"] = m.cut_length;
      j["cut_noise_scale"] = m.cut_noise_scale;
    }
    return j;
  }
};

// ---------------------------------------------------------------------------
// Random building blocks

/// Independent stream per (seed, purpose) pair.
inline std::mt19937_64 stream(std::uint64_t seed, std::uint64_t purpose) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(purpose),
                    static_cast<std::uint32_t>(purpose >> 32)};
  return std::mt19937_64(seq);
}

enum Purpose : std::uint64_t {
  kModelStream = 1,
  kShiftStream,
  kTrainStream,
  kUnlabeledStream,
  kDevStream,
  kEvalStream,
  kEvalOodStream,
  kTrialStream,
  kMultiDevStream,
  kMultiEvalStream,
};

inline Matrix random_orthogonal(Eigen::Index d, std::mt19937_64& rng) {
  Matrix g(d, d);
  std::normal_distribution<double> n01;
  for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = n01(rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  // Sign fix makes the draw Haar-distributed.
  for (Eigen::Index i = 0; i < d; ++i)
    if (qr.matrixQR()(i, i) < 0) q.col(i) = -q.col(i);
  return q;
}

/// Covariance with the given eigenvalues in a random basis.
inline Matrix random_covariance(const Vector& eigenvalues, std::mt19937_64& rng) {
  const Matrix q = random_orthogonal(eigenvalues.size(), rng);
  return linalg::symmetrize(q * eigenvalues.asDiagonal() * q.transpose());
}

/// Ground-truth model: between-speaker eigenvalues decay geometrically from
/// 2 * between_scale, within-speaker eigenvalues are uniform in
/// [0.5, 1.5] * within_scale.
inline GaussianPLDA draw_true_model(const ExperimentConfig& c) {
  auto rng = stream(c.seed, kModelStream);
  const Eigen::Index d = c.dim;
  std::uniform_real_distribution<double> u(0.5, 1.5);
  std::normal_distribution<double> n01;
  Vector b(d), w(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    b(i) = 2.0 * c.between_scale *
           std::pow(0.1, static_cast<double>(i) / static_cast<double>(d));
    w(i) = c.within_scale * u(rng);
  }
  GaussianPLDA m;
  m.mu.resize(d);
  for (Eigen::Index i = 0; i < d; ++i) m.mu(i) = n01(rng);
  m.phi_b = random_covariance(b, rng);
  m.phi_w = random_covariance(w, rng);
  return m;
}

/// Domain-shift map x -> L (x - mu) + mu + m with L = R D, R a rotation by a
/// Cayley transform of a scaled random skew matrix and D a log-uniform
/// diagonal scaling.
struct ShiftMap {
  Matrix linear;
  Vector offset;
  Vector center;

  Vector apply(const Vector& x) const { return linear * (x - center) + center + offset; }
};

inline ShiftMap draw_shift(const ExperimentConfig& c, const Vector& center) {
  auto rng = stream(c.seed, kShiftStream);
  const Eigen::Index d = c.dim;
  const DomainShift& s = c.domain_shift;
  std::normal_distribution<double> n01;
  Matrix g(d, d);
  for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = n01(rng);
  const Matrix k = s.rotation_scale * (g - g.transpose()) /
                   (2.0 * std::sqrt(static_cast<double>(d)));
  const Matrix id = Matrix::Identity(d, d);
  const Matrix r = (id - k).partialPivLu().solve(id + k);
  std::uniform_real_distribution<double> lu(std::log(s.scale_min),
                                            std::log(s.scale_max));
  Vector diag(d);
  for (Eigen::Index i = 0; i < d; ++i)
    diag(i) = s.scale_min == s.scale_max ? s.scale_min : std::exp(lu(rng));
  Vector dir(d);
  for (Eigen::Index i = 0; i < d; ++i) dir(i) = n01(rng);
  ShiftMap m;
  m.linear = r * diag.asDiagonal();
  m.offset = s.mean_offset > 0 ? Vector(s.mean_offset * dir.normalized())
                               : Vector(Vector::Zero(d));
  m.center = center;
  return m;
}

/// Speaker-disjoint verification trial set: the first embedding of every
/// speaker is its enrollment (keyed by speaker), the rest are tests.
struct TrialSet {
  EmbeddingArchive enroll;
  EmbeddingArchive test;
  TrialList trials;

  ScoreSet labeled(ScoreSet s) const { return attach_labels(std::move(s), trials.keyed()); }
};

inline TrialSet make_trial_set(const LabeledEmbeddings& data,
                               int nontargets_per_target, std::mt19937_64& rng) {
  TrialSet ts;
  std::vector<std::string> test_speaker;
  for (const auto& [spk, members] : data.by_speaker()) {
    ts.enroll.add({spk, data.embeddings[members.front()].values});
    for (std::size_t j = 1; j < members.size(); ++j) {
      const Embedding& e = data.embeddings[members[j]];
      ts.test.add(e);
      test_speaker.push_back(spk);
    }
  }
  ts.trials.labels.emplace();
  const auto& tests = ts.test.entries();
  for (const Embedding& enr : ts.enroll.entries()) {
    std::vector<std::size_t> targets, others;
    for (std::size_t t = 0; t < tests.size(); ++t)
      (test_speaker[t] == enr.key ? targets : others).push_back(t);
    std::vector<std::size_t> chosen = others;
    if (nontargets_per_target > 0) {
      const std::size_t want = std::min(
          others.size(), targets.size() * static_cast<std::size_t>(nontargets_per_target));
      std::shuffle(chosen.begin(), chosen.end(), rng);
      chosen.resize(want);
      std::sort(chosen.begin(), chosen.end());
    }
    for (std::size_t t : targets) {
      ts.trials.trials.push_back({enr.key, tests[t].key});
      ts.trials.labels->push_back(TrialLabel::kTarget);
    }
    for (std::size_t t : chosen) {
      ts.trials.trials.push_back({enr.key, tests[t].key});
      ts.trials.labels->push_back(TrialLabel::kNontarget);
    }
  }
  return ts;
}

inline LabeledEmbeddings shifted(const LabeledEmbeddings& data, const ShiftMap& map) {
  LabeledEmbeddings out{{}, data.speaker_of};
  for (const Embedding& e : data.embeddings) out.embeddings.push_back({e.key, map.apply(e.values)});
  return out;
}

// ---------------------------------------------------------------------------
// Domain-shift experiment

struct DomainShiftDataset {
  ExperimentConfig config;
  GaussianPLDA true_model;
  ShiftMap shift;
  LabeledEmbeddings train;          // out-of-domain, labeled
  EmbeddingArchive unlabeled;       // in-domain, for adaptation
  TrialSet dev;                     // in-domain
  TrialSet eval;                    // in-domain
  TrialSet eval_unshifted;          // out-of-domain counterpart of eval
};

inline std::uint64_t sub_seed(const ExperimentConfig& c, Purpose p) {
  auto rng = stream(c.seed, p);
  return rng();
}

inline DomainShiftDataset synth_domain_shift_experiment(const ExperimentConfig& c) {
  c.validate();
  DomainShiftDataset ds;
  ds.config = c;
  ds.true_model = draw_true_model(c);
  ds.shift = draw_shift(c, ds.true_model.mu);
  ds.train = sample_embeddings(ds.true_model, c.n_speakers_train, c.per_speaker,
                               sub_seed(c, kTrainStream), "train");
  {
    const LabeledEmbeddings u = sample_embeddings(
        ds.true_model, c.n_unlabeled, 1, sub_seed(c, kUnlabeledStream), "unl");
    for (const Embedding& e : u.embeddings)
      ds.unlabeled.add({e.key, ds.shift.apply(e.values)});
  }
  auto trial_rng = stream(c.seed, kTrialStream);
  ds.dev = make_trial_set(
      shifted(sample_embeddings(ds.true_model, c.n_speakers_dev, c.per_speaker,
                                sub_seed(c, kDevStream), "dev"),
              ds.shift),
      c.nontargets_per_target, trial_rng);
  const LabeledEmbeddings eval_raw = sample_embeddings(
      ds.true_model, c.n_speakers_eval, c.per_speaker, sub_seed(c, kEvalStream), "eval");
  ds.eval = make_trial_set(shifted(eval_raw, ds.shift), c.nontargets_per_target, trial_rng);
  ds.eval_unshifted = make_trial_set(
      sample_embeddings(ds.true_model, c.n_speakers_eval, c.per_speaker,
                        sub_seed(c, kEvalOodStream), "evalood"),
      c.nontargets_per_target, trial_rng);
  return ds;
}

// ---------------------------------------------------------------------------
// Multi-speaker experiment

struct SynthRecording {
  std::string id;
  CutPlan plan;
  std::vector<Vector> cuts;
  std::vector<std::string> speakers;  // reference speaker per cut
};

struct MultiSpeakerSplit {
  std::vector<SynthRecording> recordings;
  EmbeddingArchive enroll;  // keyed by speaker
  TrialList trials;         // enroll speaker vs recording id

  std::vector<LabeledRecording> labeled_recordings() const {
    std::vector<LabeledRecording> out;
    for (const SynthRecording& r : recordings) out.push_back({r.cuts, r.speakers});
    return out;
  }
};

struct MultiSpeakerDataset {
  ExperimentConfig config;
  GaussianPLDA true_model;
  LabeledEmbeddings train;
  MultiSpeakerSplit dev;
  MultiSpeakerSplit eval;
};

inline MultiSpeakerSplit make_multispeaker_split(const GaussianPLDA& model,
                                                 const MultiSpeakerConfig& m,
                                                 int pool_size, int n_recordings,
                                                 const std::string& prefix,
                                                 std::mt19937_64& rng) {
  const Eigen::Index d = model.dim();
  const Matrix b_root = linalg::principal_sqrt(model.phi_b);
  const Matrix w_root = linalg::principal_sqrt(model.phi_w);
  auto normal = [&]() { return detail::standard_normal(d, rng); };

  MultiSpeakerSplit split;
  std::vector<Vector> speaker_means;
  std::vector<std::string> names;
  for (int s = 0; s < pool_size; ++s) {
    names.push_back(prefix + "spk" + std::to_string(s));
    speaker_means.push_back(model.mu + b_root * normal());
    split.enroll.add({names.back(), speaker_means.back() + w_root * normal()});
  }
  split.trials.labels.emplace();
  std::vector<int> pool(pool_size);
  for (int s = 0; s < pool_size; ++s) pool[s] = s;
  const int n_cuts = m.speakers_per_recording * m.cuts_per_speaker;
  for (int r = 0; r < n_recordings; ++r) {
    SynthRecording rec;
    rec.id = prefix + "rec" + std::to_string(r);
    std::shuffle(pool.begin(), pool.end(), rng);
    std::vector<int> turns;
    for (int k = 0; k < m.speakers_per_recording; ++k)
      turns.insert(turns.end(), m.cuts_per_speaker, pool[k]);
    std::shuffle(turns.begin(), turns.end(), rng);
    rec.plan = uniform_cut_plan(n_cuts * m.cut_length, m.cut_length, rec.id);
    for (int spk : turns) {
      rec.cuts.push_back(speaker_means[spk] + m.cut_noise_scale * (w_root * normal()));
      rec.speakers.push_back(names[spk]);
    }
    for (int k = 0; k < m.speakers_per_recording; ++k) {
      split.trials.trials.push_back({names[pool[k]], rec.id});
      split.trials.labels->push_back(TrialLabel::kTarget);
    }
    for (int k = 0; k < m.nontargets_per_recording; ++k) {
      split.trials.trials.push_back(
          {names[pool[m.speakers_per_recording + k]], rec.id});
      split.trials.labels->push_back(TrialLabel::kNontarget);
    }
    split.recordings.push_back(std::move(rec));
  }
  return split;
}

inline MultiSpeakerDataset synth_multispeaker_experiment(const ExperimentConfig& c) {
  c.validate();
  require(c.multi_speaker.has_value(), ErrorKind::kConfig,
          "multi-speaker experiment needs the multi-speaker section");
  MultiSpeakerDataset ds;
  ds.config = c;
  ds.true_model = draw_true_model(c);
  ds.train = sample_embeddings(ds.true_model, c.n_speakers_train, c.per_speaker,
                               sub_seed(c, kTrainStream), "train");
  auto dev_rng = stream(c.seed, kMultiDevStream);
  ds.dev = make_multispeaker_split(ds.true_model, *c.multi_speaker, c.n_speakers_dev,
                                   c.multi_speaker->recordings_dev, "dev", dev_rng);
  auto eval_rng = stream(c.seed, kMultiEvalStream);
  ds.eval = make_multispeaker_split(ds.true_model, *c.multi_speaker, c.n_speakers_eval,
                                    c.multi_speaker->recordings_eval, "eval", eval_rng);
  return ds;
}

// ---------------------------------------------------------------------------
// On-disk layout

namespace detail {

inline nlohmann::json matrix_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

inline nlohmann::json vector_json(const Vector& v) {
  return nlohmann::json(std::vector<double>(v.data(), v.data() + v.size()));
}

inline void write_trial_set(const TrialSet& t, const std::filesystem::path& dir,
                            const std::string& name) {
  io::write_embedding_archive(t.enroll, (dir / (name + "_enroll.ark")).string());
  io::write_embedding_archive(t.test, (dir / (name + "_test.ark")).string());
  io::write_trials(t.trials, (dir / (name + ".trials")).string());
}

inline void write_json(const nlohmann::json& j, const std::filesystem::path& p) {
  io::Writer w(p.string());
  w.stream() << j.dump(2) << '\n';
  w.close();
}

inline void write_multispeaker_split(const MultiSpeakerSplit& s,
                                     const std::filesystem::path& dir,
                                     const std::string& name) {
  EmbeddingArchive cuts;
  std::vector<CutPlan> plans;
  io::Writer ref((dir / (name + "_cuts.ref")).string());
  for (const SynthRecording& r : s.recordings) {
    for (std::size_t i = 0; i < r.cuts.size(); ++i) {
      const std::string key = r.id + "#" + std::to_string(i);
      cuts.add({key, r.cuts[i]});
      ref.stream() << key << '\t' << r.speakers[i] << '\n';
    }
    plans.push_back(r.plan);
  }
  ref.close();
  io::write_embedding_archive(cuts, (dir / (name + "_cuts.ark")).string());
  io::write_cut_plans(plans, (dir / (name + "_cuts.plan")).string());
  io::write_embedding_archive(s.enroll, (dir / (name + "_enroll.ark")).string());
  io::write_trials(s.trials, (dir / (name + ".trials")).string());
}

}  // namespace detail

/// Writes train.ark/.utt2spk, unlabeled.ark, {dev,eval,eval_unshifted}
/// enroll/test archives and trial lists, true_model.txt and manifest.json.
inline void write_domain_shift_dataset(const DomainShiftDataset& ds,
                                       const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  io::write_embedding_archive(EmbeddingArchive(ds.train.embeddings),
                              (dir / "train.ark").string());
  io::write_utt2spk(ds.train.speaker_of, ds.train.embeddings,
                    (dir / "train.utt2spk").string());
  io::write_embedding_archive(ds.unlabeled, (dir / "unlabeled.ark").string());
  detail::write_trial_set(ds.dev, dir, "dev");
  detail::write_trial_set(ds.eval, dir, "eval");
  detail::write_trial_set(ds.eval_unshifted, dir, "eval_unshifted");
  io::write_model(ds.true_model, (dir / "true_model.txt").string());
  nlohmann::json j;
  j["experiment"] = "domain-shift";
  j["config"] = ds.config.to_json();
  j["shift"] = {{"linear", detail::matrix_json(ds.shift.linear)},
                {"offset", detail::vector_json(ds.shift.offset)},
                {"center", detail::vector_json(ds.shift.center)}};
  j["true_model"] = {{"file", "true_model.txt"},
                     {"mu", detail::vector_json(ds.true_model.mu)},
                     {"phi_b", detail::matrix_json(ds.true_model.phi_b)},
                     {"phi_w", detail::matrix_json(ds.true_model.phi_w)}};
  detail::write_json(j, dir / "manifest.json");
}

/// Writes train.ark/.utt2spk, {dev,eval}_cuts.ark (keys recording#index),
/// _cuts.plan, _cuts.ref (reference speaker per cut), _enroll.ark, .trials,
/// true_model.txt and manifest.json.
inline void write_multispeaker_dataset(const MultiSpeakerDataset& ds,
                                       const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  io::write_embedding_archive(EmbeddingArchive(ds.train.embeddings),
                              (dir / "train.ark").string());
  io::write_utt2spk(ds.train.speaker_of, ds.train.embeddings,
                    (dir / "train.utt2spk").string());
  detail::write_multispeaker_split(ds.dev, dir, "dev");
  detail::write_multispeaker_split(ds.eval, dir, "eval");
  io::write_model(ds.true_model, (dir / "true_model.txt").string());
  nlohmann::json j;
  j["experiment"] = "multi-speaker";
  j["config"] = ds.config.to_json();
  j["true_model"] = {{"file", "true_model.txt"},
                     {"mu", detail::vector_json(ds.true_model.mu)},
                     {"phi_b", detail::matrix_json(ds.true_model.phi_b)},
                     {"phi_w", detail::matrix_json(ds.true_model.phi_w)}};
  detail::write_json(j, dir / "manifest.json");
}

}  // namespace svback::synth
