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

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "biasdec/bias_trie.hpp"
#include "biasdec/scorer.hpp"

namespace biasdec {

// none:                  plain search, no rewards, no traversal tracking.
// naive:                 +lambda whenever the token extends or starts a
//                        trie path; bonuses are never taken back.
// naive_with_revocation: as naive, but bonuses of a partial match are
//                        subtracted again when the match dies before
//                        reaching a terminal. Meant for beam search: under
//                        greedy search revocation can only repair the
//                        score, never the emitted tokens.
// kstep:                 reward gated by the K-step lookahead: the token
//                        must extend a trie path whose continuations
//                        intersect the top-mu tokens of the future-step
//                        distribution. Terminal nodes pass unconditionally.
enum class BiasMode { kNone, kNaive, kNaiveWithRevocation, kKStep };

std::string_view to_string(BiasMode mode);
std::optional<BiasMode> bias_mode_from_string(std::string_view s);

struct BiasConfig {
  double lambda = 3.0;  // per-token reward, log alpha - log beta
  int mu = 10;          // lookahead pool size for the kstep gate
  int k = 2;            // prediction depth; kstep consults k-1 future vectors
  BiasMode mode = BiasMode::kNone;
  int beam_size = 1;
  int max_len = 64;  // emitted-token cap, EOS included
};

// Throws ConfigError. kstep additionally requires k >= 2 and a scorer
// that produces exactly k step vectors.
void validate(const BiasConfig& cfg, const Scorer& model);

struct SpecialTokens {
  int bos = 0;
  int eos = 0;
};

// One live partial match. Covers token positions start_pos .. <current>.
// Traversals never split: each start position yields at most one.
struct Traversal {
  int node = 0;
  int start_pos = 0;
};

// Reward ledger state of one emitted token position.
//   kNoBonus:   position earned nothing.
//   kPending:   +lambda granted, no covering traversal has completed yet.
//   kCommitted: a covering traversal reached a terminal; bonus is final.
//   kRevoked:   every covering traversal died first; lambda was subtracted.
// A bonus is granted at most once per position no matter how many
// traversals advanced on it, and a revoked position can never be
// re-committed (commitment needs a live covering traversal).
enum class BonusState : uint8_t { kNoBonus = 0, kPending, kCommitted, kRevoked };

struct CompletedWord {
  int word = 0;     // index into the bias word list
  int end_pos = 0;  // index of the word's last token in `tokens`
  bool operator==(const CompletedWord&) const = default;
};

struct Hypothesis {
  std::vector<int> tokens;  // BOS-prefixed
  double base_lp = 0.0;
  double biased_score = 0.0;
  bool finished = false;
  double revoked_total = 0.0;
  std::vector<Traversal> traversals;
  std::vector<BonusState> bonus;  // parallel to tokens
  std::vector<CompletedWord> completed;
};

Hypothesis initial_hypothesis(int bos_id);

struct StepReward {
  double reward = 0.0;
  std::vector<Traversal> traversals;  // successor set if cand is consumed
};

// Reward earned by extending h with cand, together with the traversal set
// the extension would carry. Pure; does not modify h.
StepReward step_reward(const BiasTrie& trie, const Hypothesis& h, int cand,
                       const StepScores& s, const BiasConfig& cfg);

// Subtracts the pending bonus of every position covered by a dead
// traversal and by no member of h.traversals. Committed positions are
// untouched. Callers enable this only under naive_with_revocation.
void revoke(Hypothesis& h, std::span<const Traversal> dead, double lambda);

// lambda * (number of pending positions the traversal covers).
double traversal_pending_bonus(const Hypothesis& h, const Traversal& t,
                               double lambda);

// Successor set after consuming `token` at position new_pos: survivors of
// `actives` plus a fresh root attempt. Mirrors indicator_bruteforce.
std::vector<Traversal> advance_traversals(const BiasTrie& trie,
                                          std::span<const Traversal> actives,
                                          int token, int new_pos);

struct DecodeResult {
  std::vector<int> tokens;
  double base_lp = 0.0;
  double biased_score = 0.0;
  int scorer_calls = 0;  // score() invocations of the whole decode
  bool reached_eos = false;
  std::vector<CompletedWord> completed_bias_words;
};

// gate_result: 1/0 under kstep when the candidate touched the trie,
// -1 otherwise. revoked: bonus subtracted while applying this candidate.
struct StepTraceRow {
  int step = 0;
  int candidate = 0;
  double base_lp = 0.0;
  double reward = 0.0;
  int gate_result = -1;
  double revoked = 0.0;
};

DecodeResult greedy_decode(const Scorer& model, const BiasTrie& trie,
                           SpecialTokens specials, const BiasConfig& cfg,
                           std::vector<StepTraceRow>* trace = nullptr);

DecodeResult beam_decode(const Scorer& model, const BiasTrie& trie,
                         SpecialTokens specials, const BiasConfig& cfg,
                         std::vector<StepTraceRow>* trace = nullptr);

// Final beam in retention order plus the index of the returned hypothesis.
// Finished hypotheses stay in the beam and compete for retention; the
// search stops when every retained hypothesis has finished or max_len is
// reached. Each DecodeResult carries the run-wide scorer_calls.
struct BeamOutcome {
  std::vector<DecodeResult> beam;
  int best_index = -1;
  int scorer_calls = 0;
};

BeamOutcome beam_decode_full(const Scorer& model, const BiasTrie& trie,
                             SpecialTokens specials, const BiasConfig& cfg,
                             std::vector<StepTraceRow>* trace = nullptr);

// Relative extra decode cost: sum(results' calls) / baseline calls - 1.
double cost_delta(std::span<const DecodeResult> results,
                  const DecodeResult& baseline);
double cost_delta(std::span<const DecodeResult> results,
                  std::span<const DecodeResult> baseline);

}  // namespace biasdec
