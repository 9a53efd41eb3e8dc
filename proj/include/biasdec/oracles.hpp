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

// Brute-force reference implementations. Everything here recomputes its
// answer from first principles, independent of the incremental decode and
// alignment code it cross-checks, and is shared by the test suites and the
// `oracle-check` CLI command.

#pragma once

#include <string>
#include <vector>

#include "biasdec/bias_trie.hpp"
#include "biasdec/decode.hpp"
#include "biasdec/scorer.hpp"

namespace biasdec::oracles {

// Procedural random model: scores are derived by hashing (seed, prefix),
// so arbitrarily deep prefixes cost no memory. eos_weight mixes extra
// probability mass onto EOS so random decodes terminate.
class HashedModel : public Scorer {
 public:
  HashedModel(int vocab_size, int k, int eos_id, uint64_t seed,
              double eos_weight = 0.25);

  int vocab_size() const override { return vocab_size_; }
  int k_steps() const override { return k_; }
  StepScores score(const TokenSeq& prefix) const override;

 private:
  int vocab_size_;
  int k_;
  int eos_id_;
  uint64_t seed_;
  double eos_weight_;
};

// Fully materialized random table over every prefix reachable without EOS
// in at most max_len - 1 emitted tokens. Same shape as a recorded-logits
// capture of a tiny model.
ScenarioModel random_table_model(int vocab_size, int k, int max_len,
                                 int bos_id, int eos_id, uint64_t seed,
                                 double eos_weight = 0.2);

// Exhaustive search over complete sequences (<= max_len emitted tokens,
// last one EOS) maximizing the summed log-probability.
struct BruteBest {
  TokenSeq tokens;  // BOS-prefixed, ends with EOS
  double base_lp = 0.0;
  bool found = false;
};
BruteBest brute_force_best(const Scorer& model, int bos_id, int eos_id,
                           int max_len);

// Closed-form reward accounting recomputed from a final token sequence.
// For every start position the maximal trie match is walked once; a
// position's bonus is committed iff some match covers it and reaches a
// terminal at or after it. Under naive_with_revocation a finished
// hypothesis must satisfy biased - base == lambda * committed_positions;
// under plain naive it is lambda * rewarded_positions.
struct ReplayLedger {
  int rewarded_positions = 0;
  int committed_positions = 0;
  std::vector<CompletedWord> completed;  // sorted by (end_pos, word)
};
ReplayLedger replay_reward_ledger(const BiasTrie& trie,
                                  const TokenSeq& tokens);

// Plain recursive edit distance, no DP table.
int brute_force_alignment_cost(const std::vector<std::string>& ref,
                               const std::vector<std::string>& hyp);

struct SuiteResult {
  std::string name;
  int cases = 0;
  int failures = 0;
  std::string detail;  // first failure, empty when clean
  bool passed() const { return failures == 0 && cases > 0; }
};

// Beam search with beam >= V^max_len equals exhaustive enumeration.
SuiteResult exhaustive_beam_suite(int cases, uint64_t seed);
// Revocation bookkeeping matches the closed-form replay on every finished
// hypothesis, and completed words agree.
SuiteResult revocation_suite(int cases, uint64_t seed);
// Incremental traversal liveness matches the suffix-scan indicator.
SuiteResult indicator_suite(int cases, uint64_t seed);
// DP alignment is cost-minimal (exhaustive <= 4-word pairs) and its ops
// replay both sequences.
SuiteResult alignment_suite();
// With mu == V the kstep gate always passes: kstep must equal naive
// token-for-token and score-for-score.
SuiteResult kstep_gate_saturation_suite(int cases, uint64_t seed);

std::vector<SuiteResult> run_all_suites(int cases, uint64_t seed);

}  // namespace biasdec::oracles
