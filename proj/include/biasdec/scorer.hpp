// Copyright (c) 2026 biasdec authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "biasdec/vocab.hpp"

namespace biasdec {

// One query against the model for prefix y_{1:n-1}: log-probabilities of
// y_n ("next") plus K-1 vectors for positions n+1 .. n+K-1, all conditioned
// on the same prefix. Every vector is a normalized distribution
// (logsumexp == 0 within 1e-6).
struct StepScores {
  std::vector<double> next;
  std::vector<std::vector<double>> future;
};

// Model contract consumed by decoding. Implementations must be pure:
// equal prefixes return bitwise-equal scores.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual int vocab_size() const = 0;
  // K: one next-token vector plus K-1 future vectors per query.
  virtual int k_steps() const = 0;
  virtual StepScores score(const TokenSeq& prefix) const = 0;
};

// Top-mu token ids by log-probability, descending, ties broken by
// ascending token id. Throws ConfigError unless 1 <= mu <= V.
std::vector<int> topk(std::span<const double> scores, int mu);

// Validates vector sizes, finiteness (-inf allowed, NaN/+inf not) and
// normalization. `where` names the offending prefix in error messages.
void validate_step_scores(const StepScores& s, int vocab_size, int k,
                          const std::string& where);

StepScores uniform_scores(int vocab_size, int k);

std::string format_prefix(const TokenSeq& prefix);

// Deterministic table-driven model: exact-prefix lookup with a configurable
// fallback. Doubles as the recorded-logits replay reader, since a recording
// is just a table of (prefix, scores) rows.
//
// JSON format:
//   { "vocab_size": V, "K": k, "fallback": "error" | "uniform",
//     "entries": [ { "prefix": [ids...], "next": [...], "future": [[...]] } ] }
class ScenarioModel : public Scorer {
 public:
  enum class Fallback { kError, kUniform };

  ScenarioModel(int vocab_size, int k, Fallback fallback = Fallback::kError);

  // Rejects duplicate prefixes and malformed or unnormalized vectors.
  void add_entry(TokenSeq prefix, StepScores scores);

  static ScenarioModel load(const std::string& path);
  static ScenarioModel from_json(const nlohmann::json& j);
  nlohmann::ordered_json to_json() const;
  void save(const std::string& path) const;

  int vocab_size() const override { return vocab_size_; }
  int k_steps() const override { return k_; }
  StepScores score(const TokenSeq& prefix) const override;

  Fallback fallback() const { return fallback_; }
  size_t entry_count() const { return entries_.size(); }

 private:
  struct TokenSeqHash {
    size_t operator()(const TokenSeq& s) const;
  };

  int vocab_size_;
  int k_;
  Fallback fallback_;
  std::vector<std::pair<TokenSeq, StepScores>> entries_;  // insertion order
  std::unordered_map<TokenSeq, int, TokenSeqHash> index_;
};

}  // namespace biasdec
