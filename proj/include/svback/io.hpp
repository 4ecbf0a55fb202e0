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

// Text file formats.  All readers are strict: any malformed record raises a
// ParseError naming the file and 1-based line, and nothing is returned.
//
//   archive    key<TAB>v1 v2 ... vd            (%.17g)
//   utt2spk    key<TAB>speaker
//   trials     enroll<TAB>test[<TAB>target|nontarget]
//   scores     enroll<TAB>test<TAB>score       (%.6f; optional "#fused" line)
//   cut plan   recording<TAB>index<TAB>start<TAB>end   (%.3f seconds)
//   model      "svback-plda 1", "dim d", "mu ...", "phi_b", d rows, "phi_w", d rows
//   config     key = value   ('#' starts a comment)

#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "svback/calfuse.hpp"
#include "svback/common.hpp"
#include "svback/diarization.hpp"
#include "svback/embedding.hpp"
#include "svback/plda.hpp"
#include "svback/scores.hpp"

namespace svback::io {

inline constexpr int kModelVersion = 1;
inline constexpr int kPreprocessorVersion = 1;
inline constexpr int kFusionVersion = 1;

// ---------------------------------------------------------------------------
// Low-level helpers

inline std::string format_double(double v, int significant = 17) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", significant, v);
  return buf;
}

inline std::string format_fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

inline std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open '" + path + "' for reading");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

class Writer {
 public:
  explicit Writer(const std::string& path) : path_(path), out_(path) {
    if (!out_) throw Error(ErrorKind::kIo, "cannot open '" + path + "' for writing");
  }
  std::ostream& stream() { return out_; }
  void close() {
    out_.close();
    if (!out_) throw Error(ErrorKind::kIo, "error writing '" + path_ + "'");
  }

 private:
  std::string path_;
  std::ofstream out_;
};

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

/// Whitespace-separated tokens.
inline std::vector<std::string_view> tokens(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    const std::size_t start = i;
    while (i < s.size() && s[i] != ' ' && s[i] != '\t') ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

inline bool parse_double(std::string_view tok, double& out) {
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return ec == std::errc() && ptr == tok.data() + tok.size();
}

inline double parse_finite(std::string_view tok, const std::string& path,
                           std::size_t line) {
  double v = 0.0;
  if (!parse_double(tok, v))
    throw ParseError(path, line, "non-numeric token '" + std::string(tok) + "'");
  if (!std::isfinite(v))
    throw ParseError(path, line, "non-finite value '" + std::string(tok) + "'");
  return v;
}

inline bool blank(const std::string& line) {
  return line.find_first_not_of(" \t") == std::string::npos;
}

// ---------------------------------------------------------------------------
// Embedding archives

inline EmbeddingArchive read_embedding_archive(const std::string& path) {
  const std::vector<std::string> lines = read_lines(path);
  EmbeddingArchive archive;
  std::unordered_map<std::string, std::size_t> first_line;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::size_t ln = i + 1;
    if (blank(lines[i])) continue;
    const std::size_t tab = lines[i].find('\t');
    if (tab == std::string::npos || tab == 0)
      throw ParseError(path, ln, "expected 'key<TAB>values'");
    std::string key = lines[i].substr(0, tab);
    const auto vals = tokens(std::string_view(lines[i]).substr(tab + 1));
    if (vals.empty()) throw ParseError(path, ln, "no values for key '" + key + "'");
    if (!archive.empty() && static_cast<Eigen::Index>(vals.size()) != archive.dim())
      throw ParseError(path, ln,
                       "ragged row: " + std::to_string(vals.size()) +
                           " values, expected " + std::to_string(archive.dim()));
    auto [it, inserted] = first_line.emplace(key, ln);
    if (!inserted)
      throw ParseError(path, ln,
                       "duplicate key '" + key + "' (first seen on line " +
                           std::to_string(it->second) + ")");
    Vector v(static_cast<Eigen::Index>(vals.size()));
    for (std::size_t j = 0; j < vals.size(); ++j)
      v(static_cast<Eigen::Index>(j)) = parse_finite(vals[j], path, ln);
    archive.add({std::move(key), std::move(v)});
  }
  return archive;
}

inline void write_embedding_archive(const EmbeddingArchive& archive,
                                    const std::string& path) {
  Writer w(path);
  for (const Embedding& e : archive.entries()) {
    w.stream() << e.key << '\t';
    for (Eigen::Index j = 0; j < e.values.size(); ++j)
      w.stream() << (j ? " " : "") << format_double(e.values(j));
    w.stream() << '\n';
  }
  w.close();
}

/// key<TAB>speaker lines.
inline std::map<std::string, std::string> read_utt2spk(const std::string& path) {
  const std::vector<std::string> lines = read_lines(path);
  std::map<std::string, std::string> out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (blank(lines[i])) continue;
    const auto f = split(lines[i], '\t');
    if (f.size() != 2 || f[0].empty() || f[1].empty())
      throw ParseError(path, i + 1, "expected 'key<TAB>speaker'");
    if (!out.emplace(std::string(f[0]), std::string(f[1])).second)
      throw ParseError(path, i + 1, "duplicate key '" + std::string(f[0]) + "'");
  }
  return out;
}

inline void write_utt2spk(const std::map<std::string, std::string>& m,
                          const std::vector<Embedding>& order,
                          const std::string& path) {
  Writer w(path);
  for (const Embedding& e : order) w.stream() << e.key << '\t' << m.at(e.key) << '\n';
  w.close();
}

inline LabeledEmbeddings read_labeled(const std::string& archive_path,
                                      const std::string& utt2spk_path) {
  EmbeddingArchive a = read_embedding_archive(archive_path);
  LabeledEmbeddings out;
  out.speaker_of = read_utt2spk(utt2spk_path);
  out.embeddings = a.entries();
  for (const Embedding& e : out.embeddings)
    if (!out.speaker_of.count(e.key))
      throw Error(ErrorKind::kLookup, "'" + e.key + "' from " + archive_path +
                                          " has no label in " + utt2spk_path);
  return out;
}

// ---------------------------------------------------------------------------
// Trials and scores


inline TrialLabel parse_label(std::string_view tok, const std::string& path,
                              std::size_t line) {
  if (tok == "target") return TrialLabel::kTarget;
  if (tok == "nontarget") return TrialLabel::kNontarget;
  throw ParseError(path, line, "unknown label '" + std::string(tok) + "'");
}

inline const char* label_token(TrialLabel l) {
  return l == TrialLabel::kTarget ? "target" : "nontarget";
}

inline TrialList read_trials(const std::string& path) {
  const std::vector<std::string> lines = read_lines(path);
  TrialList out;
  std::optional<bool> labeled;
  std::vector<TrialLabel> labels;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::size_t ln = i + 1;
    if (blank(lines[i])) continue;
    const auto f = split(lines[i], '\t');
    if (f.size() < 2 || f.size() > 3 || f[0].empty() || f[1].empty())
      throw ParseError(path, ln, "expected 'enroll<TAB>test[<TAB>label]'");
    const bool has = f.size() == 3;
    if (labeled && *labeled != has)
      throw ParseError(path, ln, "label column present on some lines only");
    labeled = has;
    out.trials.push_back({std::string(f[0]), std::string(f[1])});
    if (has) labels.push_back(parse_label(f[2], path, ln));
  }
  if (labeled.value_or(false)) out.labels = std::move(labels);
  return out;
}

inline void write_trials(const TrialList& t, const std::string& path) {
  Writer w(path);
  for (std::size_t i = 0; i < t.trials.size(); ++i) {
    w.stream() << t.trials[i].enroll << '\t' << t.trials[i].test;
    if (t.labels) w.stream() << '\t' << label_token((*t.labels)[i]);
    w.stream() << '\n';
  }
  w.close();
}

inline constexpr const char* kFusedTag = "#fused";

inline ScoreSet read_scores(const std::string& path) {
  const std::vector<std::string> lines = read_lines(path);
  ScoreSet out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::size_t ln = i + 1;
    if (blank(lines[i])) continue;
    if (lines[i] == kFusedTag) {
      out.fused = true;
      continue;
    }
    const auto f = split(lines[i], '\t');
    if (f.size() != 3 || f[0].empty() || f[1].empty())
      throw ParseError(path, ln, "expected 'enroll<TAB>test<TAB>score'");
    out.trials.push_back({std::string(f[0]), std::string(f[1])});
    out.scores.push_back(parse_finite(f[2], path, ln));
  }
  return out;
}

inline void write_scores(const ScoreSet& s, const std::string& path) {
  s.validate();
  Writer w(path);
  if (s.fused) w.stream() << kFusedTag << '\n';
  for (std::size_t i = 0; i < s.size(); ++i)
    w.stream() << s.trials[i].enroll << '\t' << s.trials[i].test << '\t'
               << format_fixed(s.scores[i], 6) << '\n';
  w.close();
}

// ---------------------------------------------------------------------------
// Models

namespace detail {

/// Line cursor used by the block-structured model readers.
class Cursor {
 public:
  Cursor(std::string path) : path_(std::move(path)), lines_(read_lines(path_)) {}

  std::vector<std::string_view> next(const char* what) {
    while (pos_ < lines_.size() && blank(lines_[pos_])) ++pos_;
    if (pos_ >= lines_.size())
      throw ParseError(path_, lines_.size() + 1,
                       std::string("unexpected end of file, expected ") + what);
    ++pos_;
    return tokens(lines_[pos_ - 1]);
  }
  std::size_t line() const { return pos_; }
  const std::string& path() const { return path_; }

  void expect_keyword(std::string_view kw) {
    auto t = next(std::string(kw).c_str());
    if (t.size() != 1 || t[0] != kw)
      throw ParseError(path_, pos_, "expected '" + std::string(kw) + "'");
  }

  void header(std::string_view magic, int version) {
    auto t = next("header");
    if (t.size() != 2 || t[0] != magic)
      throw ParseError(path_, pos_, "expected header '" + std::string(magic) +
                                        " <version>'");
    if (t[1] != std::to_string(version))
      throw Error(ErrorKind::kVersion,
                  path_ + ": unsupported " + std::string(magic) + " version '" +
                      std::string(t[1]) + "', expected " + std::to_string(version));
  }

  Eigen::Index dim() {
    auto t = next("dim");
    double d = 0;
    if (t.size() != 2 || t[0] != "dim" || !parse_double(t[1], d) || d < 1 ||
        d != std::floor(d))
      throw ParseError(path_, pos_, "expected 'dim <positive integer>'");
    return static_cast<Eigen::Index>(d);
  }

  Vector row(Eigen::Index d, std::string_view label = {}) {
    auto t = next("matrix row");
    std::size_t skip = 0;
    if (!label.empty()) {
      if (t.empty() || t[0] != label)
        throw ParseError(path_, pos_, "expected '" + std::string(label) + "'");
      skip = 1;
    }
    if (static_cast<Eigen::Index>(t.size() - skip) != d)
      throw ParseError(path_, pos_, "expected " + std::to_string(d) + " values");
    Vector v(d);
    for (Eigen::Index j = 0; j < d; ++j)
      v(j) = parse_finite(t[skip + static_cast<std::size_t>(j)], path_, pos_);
    return v;
  }

  Matrix matrix(Eigen::Index d) {
    Matrix m(d, d);
    for (Eigen::Index i = 0; i < d; ++i) m.row(i) = row(d).transpose();
    return m;
  }

 private:
  std::string path_;
  std::vector<std::string> lines_;
  std::size_t pos_ = 0;
};

inline void write_row(std::ostream& os, const Vector& v) {
  for (Eigen::Index j = 0; j < v.size(); ++j)
    os << (j ? " " : "") << format_double(v(j));
  os << '\n';
}

inline void write_matrix(std::ostream& os, const Matrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) write_row(os, m.row(i).transpose());
}

inline Matrix resymmetrize(const Matrix& m, const std::string& path,
                           const char* name) {
  if (linalg::max_asymmetry(m) > 1e-6)
    throw Error(ErrorKind::kInvalidModel,
                path + ": " + name + " is asymmetric beyond 1e-6");
  return linalg::symmetrize(m);
}

}  // namespace detail

inline void write_model(const GaussianPLDA& m, const std::string& path) {
  m.validate(1e-8);
  Writer w(path);
  auto& os = w.stream();
  os << "svback-plda " << kModelVersion << '\n' << "dim " << m.dim() << '\n';
  os << "mu ";
  detail::write_row(os, m.mu);
  os << "phi_b\n";
  detail::write_matrix(os, m.phi_b);
  os << "phi_w\n";
  detail::write_matrix(os, m.phi_w);
  w.close();
}

inline GaussianPLDA read_model(const std::string& path) {
  detail::Cursor c(path);
  c.header("svback-plda", kModelVersion);
  const Eigen::Index d = c.dim();
  GaussianPLDA m;
  m.mu = c.row(d, "mu");
  c.expect_keyword("phi_b");
  m.phi_b = detail::resymmetrize(c.matrix(d), path, "phi_b");
  c.expect_keyword("phi_w");
  m.phi_w = detail::resymmetrize(c.matrix(d), path, "phi_w");
  try {
    m.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::kInvalidModel, path + ": " + e.what());
  }
  return m;
}

inline void write_preprocessor(const Preprocessor& p, const std::string& path) {
  Writer w(path);
  auto& os = w.stream();
  os << "svback-preprocessor " << kPreprocessorVersion << '\n'
     << "dim " << p.dim() << '\n'
     << "length_norm " << (p.apply_length_norm ? 1 : 0) << '\n';
  os << "shift ";
  detail::write_row(os, p.shift);
  os << "transform\n";
  detail::write_matrix(os, p.transform);
  w.close();
}

inline Preprocessor read_preprocessor(const std::string& path) {
  detail::Cursor c(path);
  c.header("svback-preprocessor", kPreprocessorVersion);
  const Eigen::Index d = c.dim();
  Preprocessor p;
  auto ln = c.next("length_norm");
  if (ln.size() != 2 || ln[0] != "length_norm" || (ln[1] != "0" && ln[1] != "1"))
    throw ParseError(path, c.line(), "expected 'length_norm 0|1'");
  p.apply_length_norm = ln[1] == "1";
  p.shift = c.row(d, "shift");
  c.expect_keyword("transform");
  p.transform = c.matrix(d);
  return p;
}

/// Fusion pipeline file: prior, offset, then one line per subsystem with its
/// fusion weight, retained flag and pre-calibration (a, b).
inline void write_fusion(const FusionPipeline& p, const std::string& path) {
  Writer w(path);
  auto& os = w.stream();
  const FusionModel& f = p.fusion;
  os << "svback-fusion " << kFusionVersion << '\n'
     << "p_eff " << format_double(f.p_eff) << '\n'
     << "offset " << format_double(f.offset) << '\n'
     << "subsystems " << f.names.size() << '\n';
  for (std::size_t j = 0; j < f.names.size(); ++j) {
    const bool kept = std::find(f.retained.begin(), f.retained.end(), j) !=
                      f.retained.end();
    os << f.names[j] << ' ' << format_double(f.weights[j]) << ' ' << (kept ? 1 : 0)
       << ' ' << format_double(p.precalibration[j].a) << ' '
       << format_double(p.precalibration[j].b) << '\n';
  }
  w.close();
}

inline FusionPipeline read_fusion(const std::string& path) {
  detail::Cursor c(path);
  c.header("svback-fusion", kFusionVersion);
  FusionPipeline p;
  auto scalar = [&](std::string_view name) {
    auto t = c.next(std::string(name).c_str());
    if (t.size() != 2 || t[0] != name)
      throw ParseError(path, c.line(), "expected '" + std::string(name) + " <value>'");
    return parse_finite(t[1], path, c.line());
  };
  p.fusion.p_eff = scalar("p_eff");
  p.fusion.offset = scalar("offset");
  const double n = scalar("subsystems");
  if (n < 1 || n != std::floor(n))
    throw ParseError(path, c.line(), "subsystem count must be a positive integer");
  for (std::size_t j = 0; j < static_cast<std::size_t>(n); ++j) {
    auto t = c.next("subsystem line");
    if (t.size() != 5 || (t[2] != "0" && t[2] != "1"))
      throw ParseError(path, c.line(),
                       "expected 'name weight retained(0|1) cal_a cal_b'");
    p.fusion.names.emplace_back(t[0]);
    p.fusion.weights.push_back(parse_finite(t[1], path, c.line()));
    if (t[2] == "1") p.fusion.retained.push_back(j);
    p.precalibration.push_back({parse_finite(t[3], path, c.line()),
                                parse_finite(t[4], path, c.line())});
  }
  return p;
}

// ---------------------------------------------------------------------------
// Cut plans

struct CutRecord {
  std::string recording;
  int index = 0;
  Cut cut;
};

inline void write_cut_plans(const std::vector<CutPlan>& plans,
                            const std::string& path) {
  Writer w(path);
  for (const CutPlan& p : plans)
    for (std::size_t i = 0; i < p.cuts.size(); ++i)
      w.stream() << p.recording_id << '\t' << i << '\t'
                 << format_fixed(p.cuts[i].start, 3) << '\t'
                 << format_fixed(p.cuts[i].end, 3) << '\n';
  w.close();
}

inline std::vector<CutRecord> read_cut_plan(const std::string& path) {
  const std::vector<std::string> lines = read_lines(path);
  std::vector<CutRecord> out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::size_t ln = i + 1;
    if (blank(lines[i])) continue;
    const auto f = split(lines[i], '\t');
    if (f.size() != 4 || f[0].empty())
      throw ParseError(path, ln, "expected 'recording<TAB>index<TAB>start<TAB>end'");
    CutRecord r;
    r.recording = std::string(f[0]);
    const double idx = parse_finite(f[1], path, ln);
    if (idx < 0 || idx != std::floor(idx))
      throw ParseError(path, ln, "cut index must be a non-negative integer");
    r.index = static_cast<int>(idx);
    r.cut = {parse_finite(f[2], path, ln), parse_finite(f[3], path, ln)};
    if (!(r.cut.end > r.cut.start))
      throw ParseError(path, ln, "cut end must exceed start");
    out.push_back(std::move(r));
  }
  return out;
}

/// Groups a cut archive keyed "recording#index" into per-recording cut
/// lists ordered by index.
inline std::map<std::string, std::vector<Vector>> group_cuts(
    const EmbeddingArchive& cuts) {
  std::map<std::string, std::map<int, Vector>> tmp;
  for (const Embedding& e : cuts.entries()) {
    const std::size_t hash = e.key.rfind('#');
    double idx = -1;
    if (hash == std::string::npos || hash == 0 ||
        !parse_double(std::string_view(e.key).substr(hash + 1), idx) || idx < 0 ||
        idx != std::floor(idx))
      throw Error(ErrorKind::kInvalidData,
                  "cut key '" + e.key + "' is not of the form recording#index");
    tmp[e.key.substr(0, hash)][static_cast<int>(idx)] = e.values;
  }
  std::map<std::string, std::vector<Vector>> out;
  for (auto& [rec, m] : tmp) {
    std::vector<Vector>& v = out[rec];
    for (auto& [i, x] : m) v.push_back(std::move(x));
  }
  return out;
}

// ---------------------------------------------------------------------------
// key = value configuration

inline std::map<std::string, std::string> read_config(const std::string& path) {
  const std::vector<std::string> lines = read_lines(path);
  std::map<std::string, std::string> out;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
  };
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::string line = lines[i];
    if (const auto hash = line.find('#'); hash != std::string::npos)
      line.resize(hash);
    if (blank(line)) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError(path, i + 1, "expected 'key = value'");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ParseError(path, i + 1, "expected 'key = value'");
    if (!out.emplace(key, value).second)
      throw ParseError(path, i + 1, "duplicate key '" + key + "'");
  }
  return out;
}

}  // namespace svback::io
