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
#include <unordered_map>
#include <vector>

#include "svback/common.hpp"

namespace svback {

struct Embedding {
  std::string key;
  Vector values;
};

/// Ordered, keyed collection of equal-dimension embeddings.
class EmbeddingArchive {
 public:
  EmbeddingArchive() = default;

  explicit EmbeddingArchive(std::vector<Embedding> entries) {
    for (Embedding& e : entries) add(std::move(e));
  }

  /// Appends an entry; rejects duplicate or empty keys, ragged dimensions and
  /// non-finite values.
  void add(Embedding e) {
    require(!e.key.empty(), ErrorKind::kInvalidData, "empty embedding key");
    require(e.values.size() >= 1, ErrorKind::kInvalidData,
            "embedding '" + e.key + "' has dimension 0");
    require(e.values.allFinite(), ErrorKind::kInvalidData,
            "embedding '" + e.key + "' has non-finite entries");
    if (!entries_.empty() && e.values.size() != dim())
      throw Error(ErrorKind::kShape,
                  "embedding '" + e.key + "' has dimension " +
                      std::to_string(e.values.size()) + ", archive has " +
                      std::to_string(dim()));
    auto [it, inserted] = index_.emplace(e.key, entries_.size());
    require(inserted, ErrorKind::kInvalidData,
            "duplicate embedding key '" + e.key + "'");
    entries_.push_back(std::move(e));
  }

  const std::vector<Embedding>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  Eigen::Index dim() const {
    return entries_.empty() ? 0 : entries_.front().values.size();
  }

  bool contains(const std::string& key) const { return index_.count(key) > 0; }

  const Vector* find(const std::string& key) const {
    auto it = index_.find(key);
    return it == index_.end() ? nullptr : &entries_[it->second].values;
  }

  const Vector& at(const std::string& key) const {
    const Vector* v = find(key);
    if (v == nullptr)
      throw Error(ErrorKind::kLookup, "no embedding with key '" + key + "'");
    return *v;
  }

  std::vector<Vector> values() const {
    std::vector<Vector> out;
    out.reserve(entries_.size());
    for (const Embedding& e : entries_) out.push_back(e.values);
    return out;
  }

 private:
  std::vector<Embedding> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Training-set container: embeddings plus a key -> speaker label map.
struct LabeledEmbeddings {
  std::vector<Embedding> embeddings;
  std::map<std::string, std::string> speaker_of;

  Eigen::Index dim() const {
    return embeddings.empty() ? 0 : embeddings.front().values.size();
  }

  /// Speaker labels in order of first appearance, with the member indices.
  std::vector<std::pair<std::string, std::vector<std::size_t>>> by_speaker()
      const {
    std::vector<std::pair<std::string, std::vector<std::size_t>>> groups;
    std::unordered_map<std::string, std::size_t> slot;
    for (std::size_t i = 0; i < embeddings.size(); ++i) {
      auto it = speaker_of.find(embeddings[i].key);
      if (it == speaker_of.end())
        throw Error(ErrorKind::kLookup,
                    "embedding '" + embeddings[i].key + "' has no speaker label");
      auto [pos, inserted] = slot.emplace(it->second, groups.size());
      if (inserted) groups.push_back({it->second, {}});
      groups[pos->second].second.push_back(i);
    }
    return groups;
  }

  /// Checks keys, labels, dimensions and finiteness.
  void validate() const {
    require(!embeddings.empty(), ErrorKind::kInsufficientData,
            "no training embeddings");
    std::unordered_map<std::string, int> seen;
    for (const Embedding& e : embeddings) {
      require(!e.key.empty(), ErrorKind::kInvalidData, "empty embedding key");
      require(seen.emplace(e.key, 0).second, ErrorKind::kInvalidData,
              "duplicate embedding key '" + e.key + "'");
      require_dim(e.values.size(), dim(), "training embedding");
      require(e.values.allFinite(), ErrorKind::kInvalidData,
              "embedding '" + e.key + "' has non-finite entries");
      require(speaker_of.count(e.key) > 0, ErrorKind::kLookup,
              "embedding '" + e.key + "' has no speaker label");
    }
  }
};

}  // namespace svback
