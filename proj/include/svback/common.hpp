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

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace svback {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Failure categories surfaced by every stage of the back-end.  The CLI maps
/// kUsage to exit code 2 and everything else to exit code 1.
enum class ErrorKind {
  kDegenerateInput,
  kInsufficientData,
  kInsufficientSpeakers,
  kInvalidData,
  kInvalidModel,
  kShape,
  kLookup,
  kConditioning,
  kParameter,
  kLabel,
  kClass,
  kAlignment,
  kDomain,
  kParse,
  kVersion,
  kConfig,
  kTooShort,
  kIo,
  kUsage,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kDegenerateInput: return "degenerate-input";
    case ErrorKind::kInsufficientData: return "insufficient-data";
    case ErrorKind::kInsufficientSpeakers: return "insufficient-speakers";
    case ErrorKind::kInvalidData: return "invalid-data";
    case ErrorKind::kInvalidModel: return "invalid-model";
    case ErrorKind::kShape: return "shape";
    case ErrorKind::kLookup: return "lookup";
    case ErrorKind::kConditioning: return "conditioning";
    case ErrorKind::kParameter: return "parameter";
    case ErrorKind::kLabel: return "label";
    case ErrorKind::kClass: return "class";
    case ErrorKind::kAlignment: return "alignment";
    case ErrorKind::kDomain: return "domain";
    case ErrorKind::kParse: return "parse";
    case ErrorKind::kVersion: return "version";
    case ErrorKind::kConfig: return "config";
    case ErrorKind::kTooShort: return "too-short";
    case ErrorKind::kIo: return "io";
    case ErrorKind::kUsage: return "usage";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + " error: " + what),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Parse failures carry the 1-based line number of the offending record.
class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line,
             const std::string& what)
      : Error(ErrorKind::kParse,
              source + ":" + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

inline void require(bool condition, ErrorKind kind, const std::string& what) {
  if (!condition) throw Error(kind, what);
}

inline void require_dim(Eigen::Index got, Eigen::Index want,
                        const char* what) {
  if (got != want)
    throw Error(ErrorKind::kShape, std::string(what) + ": dimension " +
                                       std::to_string(got) + ", expected " +
                                       std::to_string(want));
}

}  // namespace svback
