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

#include "biasdec/decode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <unordered_map>

#include "biasdec/errors.hpp"

namespace biasdec {

std::string_view to_string(BiasMode mode) {
  switch (mode) {
    case BiasMode::kNone:
      return "none";
    case BiasMode::kNaive:
      return "naive";
    case BiasMode::kNaiveWithRevocation:
      return "naive_with_revocation";
    case BiasMode::kKStep:
      return "kstep";
  }
  return "?";
}

std::optional<BiasMode> bias_mode_from_string(std::string_view s) {
  if (s == "none") return BiasMode::kNone;
  if (s == "naive") return BiasMode::kNaive;
  if (s == "naive_with_revocation") return BiasMode::kNaiveWithRevocation;
  if (s == "kstep") return BiasMode::kKStep;
  return std::nullopt;
}

void validate(const BiasConfig& cfg, const Scorer& model) {
  if (!(cfg.lambda >= 0.0) || !std::isfinite(cfg.lambda)) {
    throw ConfigError("lambda must be a finite non-negative real");
  }
  if (cfg.mu < 1) throw ConfigError("mu must be >= 1");
  if (cfg.k < 1) throw ConfigError("k must be >= 1");
  if (cfg.beam_size < 1) throw ConfigError("beam_size must be >= 1");
  if (cfg.max_len < 1) throw ConfigError("max_len must be >= 1");
  if (cfg.mode == BiasMode::kKStep) {
    if (cfg.k < 2) throw ConfigError("kstep mode requires k >= 2");
    if (model.k_steps() != cfg.k) {
      throw ConfigError("kstep mode with k = " + std::to_string(cfg.k) +
                        " needs a scorer with K = " + std::to_string(cfg.k) +
                        ", got K = " + std::to_string(model.k_steps()));
    }
  }
}

Hypothesis initial_hypothesis(int bos_id) {
  Hypothesis h;
  h.tokens.push_back(bos_id);
  h.bonus.push_back(BonusState::kNoBonus);
  return h;
}

std::vector<Traversal> advance_traversals(const BiasTrie& trie,
                                          std::span<const Traversal> actives,
                                          int token, int new_pos) {
  std::vector<Traversal> out;
  for (const Traversal& t : actives) {
    auto next = trie.advance(TrieCursor{t.node, 0}, token);
    if (next) out.push_back(Traversal{next->node, t.start_pos});
  }
  auto root = trie.advance(TrieCursor{0, 0}, token);
  if (root) out.push_back(Traversal{root->node, new_pos});
  return out;
}

void revoke(Hypothesis& h, std::span<const Traversal> dead, double lambda) {
  const int last = static_cast<int>(h.tokens.size()) - 1;
  for (const Traversal& d : dead) {
    for (int p = d.start_pos; p <= last; ++p) {
      if (h.bonus[p] != BonusState::kPending) continue;
      bool covered = false;
      for (const Traversal& live : h.traversals) {
        if (live.start_pos <= p) {
          covered = true;
          break;
        }
      }
      if (covered) continue;
      h.bonus[p] = BonusState::kRevoked;
      h.biased_score -= lambda;
      h.revoked_total += lambda;
    }
  }
}

double traversal_pending_bonus(const Hypothesis& h, const Traversal& t,
                               double lambda) {
  int pending = 0;
  for (int p = t.start_pos; p < static_cast<int>(h.tokens.size()); ++p) {
    if (h.bonus[p] == BonusState::kPending) ++pending;
  }
  return lambda * pending;
}

namespace {

// Per-(hypothesis, step) successor index: token -> traversals the token
// would carry, i.e. survivors of the active set plus a fresh root start.
struct SuccessorIndex {
  std::map<int, std::vector<Traversal>> by_token;

  static SuccessorIndex build(const BiasTrie& trie, const Hypothesis& h,
                              int new_pos) {
    SuccessorIndex idx;
    for (const Traversal& t : h.traversals) {
      for (const auto& [token, child] : trie.children(t.node)) {
        idx.by_token[token].push_back(Traversal{child, t.start_pos});
      }
    }
    for (const auto& [token, child] : trie.children(0)) {
      idx.by_token[token].push_back(Traversal{child, new_pos});
    }
    return idx;
  }
};

// Lookahead gate. confirmed(node, 1) asks: can the match at `node` keep
// growing along tokens the model itself ranks in the top mu of each
// future step, or is the node already a terminal? Future steps are
// consulted lazily and conjunctively along trie paths.
class KStepGate {
 public:
  KStepGate(const BiasTrie& trie, const StepScores& s, int mu, int k)
      : trie_(trie), scores_(s), mu_(mu), k_(k) {
    if (static_cast<int>(s.future.size()) != k - 1) {
      throw ConfigError("kstep scores carry " +
                        std::to_string(s.future.size()) +
                        " future vectors, expected " + std::to_string(k - 1));
    }
    top_.resize(s.future.size());
  }

  bool confirmed(int node, int step) {
    if (trie_.is_terminal(TrieCursor{node, 0})) return true;
    if (step > k_ - 1) return true;
    auto key = std::make_pair(node, step);
    auto memo = memo_.find(key);
    if (memo != memo_.end()) return memo->second;
    bool ok = false;
    const auto& children = trie_.children(node);
    for (int token : top_mu(step - 1)) {
      auto it = children.find(token);
      if (it != children.end() && confirmed(it->second, step + 1)) {
        ok = true;
        break;
      }
    }
    memo_.emplace(key, ok);
    return ok;
  }

 private:
  const std::vector<int>& top_mu(int future_index) {
    auto& slot = top_[future_index];
    if (slot.empty()) slot = topk(scores_.future[future_index], mu_);
    return slot;
  }

  const BiasTrie& trie_;
  const StepScores& scores_;
  int mu_;
  int k_;
  std::vector<std::vector<int>> top_;
  std::map<std::pair<int, int>, bool> memo_;
};

struct RewardOutcome {
  double reward = 0.0;
  int gate = -1;
};

RewardOutcome reward_for(const SuccessorIndex& succ, int cand,
                         const BiasConfig& cfg, KStepGate* gate) {
  RewardOutcome out;
  if (cfg.mode == BiasMode::kNone) return out;
  auto it = succ.by_token.find(cand);
  if (it == succ.by_token.end()) return out;
  if (cfg.mode == BiasMode::kKStep) {
    out.gate = 0;
    for (const Traversal& t : it->second) {
      if (gate->confirmed(t.node, 1)) {
        out.gate = 1;
        out.reward = cfg.lambda;
        break;
      }
    }
    return out;
  }
  out.reward = cfg.lambda;
  return out;
}

struct ExtendOutcome {
  Hypothesis hyp;
  double reward = 0.0;
  int gate = -1;
  double revoked_now = 0.0;
};

ExtendOutcome extend(const Hypothesis& h, int cand, double lp,
                     const SuccessorIndex& succ, KStepGate* gate,
                     const BiasTrie& trie, const BiasConfig& cfg, int eos_id) {
  ExtendOutcome out;
  out.hyp = h;
  Hypothesis& n = out.hyp;
  const int pos = static_cast<int>(n.tokens.size());
  const double before_revoke_marker = n.revoked_total;

  n.tokens.push_back(cand);
  n.base_lp += lp;
  n.biased_score += lp;

  RewardOutcome r = reward_for(succ, cand, cfg, gate);
  out.reward = r.reward;
  out.gate = r.gate;
  n.biased_score += r.reward;
  n.bonus.push_back(r.reward > 0.0 ? BonusState::kPending
                                   : BonusState::kNoBonus);

  std::vector<Traversal> dead;
  if (cfg.mode == BiasMode::kNaiveWithRevocation) {
    auto it = succ.by_token.find(cand);
    for (const Traversal& t : n.traversals) {
      bool survived = false;
      if (it != succ.by_token.end()) {
        for (const Traversal& s : it->second) {
          if (s.start_pos == t.start_pos) {
            survived = true;
            break;
          }
        }
      }
      if (!survived) dead.push_back(t);
    }
  }

  if (cfg.mode == BiasMode::kNone) {
    n.traversals.clear();
  } else {
    auto it = succ.by_token.find(cand);
    n.traversals = (it != succ.by_token.end()) ? it->second
                                               : std::vector<Traversal>{};
  }

  // Commit before revoking: a terminal hit this step shields positions a
  // dying traversal also covered.
  for (const Traversal& t : n.traversals) {
    auto word = trie.is_terminal(TrieCursor{t.node, 0});
    if (!word) continue;
    for (int p = t.start_pos; p <= pos; ++p) {
      if (n.bonus[p] == BonusState::kPending) n.bonus[p] = BonusState::kCommitted;
    }
    CompletedWord done{*word, pos};
    if (std::find(n.completed.begin(), n.completed.end(), done) ==
        n.completed.end()) {
      n.completed.push_back(done);
    }
  }

  if (cfg.mode == BiasMode::kNaiveWithRevocation && !dead.empty()) {
    revoke(n, dead, cfg.lambda);
  }

  if (cand == eos_id) {
    n.finished = true;
    if (cfg.mode == BiasMode::kNaiveWithRevocation) {
      // EOS kills every traversal; nothing pending may survive.
      std::vector<Traversal> rest = n.traversals;
      n.traversals.clear();
      revoke(n, rest, cfg.lambda);
    }
    n.traversals.clear();
  }

  out.revoked_now = n.revoked_total - before_revoke_marker;
  return out;
}

void check_scores(const StepScores& s, const Scorer& model,
                  const TokenSeq& prefix) {
  if (static_cast<int>(s.next.size()) != model.vocab_size()) {
    throw ModelError("scorer returned " + std::to_string(s.next.size()) +
                     " next scores for prefix " + format_prefix(prefix));
  }
  for (double x : s.next) {
    if (std::isnan(x) || x == std::numeric_limits<double>::infinity()) {
      throw ModelError("non-finite score from model at prefix " +
                       format_prefix(prefix));
    }
  }
}

// Token ids ranked by biased per-step score, ties by ascending id.
std::vector<int> top_candidates(const std::vector<double>& ps, int count) {
  std::vector<int> ids(ps.size());
  std::iota(ids.begin(), ids.end(), 0);
  count = std::min<int>(count, static_cast<int>(ps.size()));
  std::partial_sort(ids.begin(), ids.begin() + count, ids.end(),
                    [&](int a, int b) {
                      if (ps[a] != ps[b]) return ps[a] > ps[b];
                      return a < b;
                    });
  ids.resize(count);
  return ids;
}

DecodeResult to_result(const Hypothesis& h, int scorer_calls) {
  DecodeResult r;
  r.tokens = h.tokens;
  r.base_lp = h.base_lp;
  r.biased_score = h.biased_score;
  r.scorer_calls = scorer_calls;
  r.reached_eos = h.finished;
  r.completed_bias_words = h.completed;
  return r;
}

}  // namespace

StepReward step_reward(const BiasTrie& trie, const Hypothesis& h, int cand,
                       const StepScores& s, const BiasConfig& cfg) {
  StepReward out;
  if (cfg.mode == BiasMode::kNone) return out;
  const int new_pos = static_cast<int>(h.tokens.size());
  out.traversals = advance_traversals(trie, h.traversals, cand, new_pos);
  if (out.traversals.empty()) return out;
  if (cfg.mode == BiasMode::kKStep) {
    KStepGate gate(trie, s, cfg.mu, cfg.k);
    for (const Traversal& t : out.traversals) {
      if (gate.confirmed(t.node, 1)) {
        out.reward = cfg.lambda;
        break;
      }
    }
    return out;
  }
  out.reward = cfg.lambda;
  return out;
}

DecodeResult greedy_decode(const Scorer& model, const BiasTrie& trie,
                           SpecialTokens specials, const BiasConfig& cfg,
                           std::vector<StepTraceRow>* trace) {
  validate(cfg, model);
  const int v = model.vocab_size();
  Hypothesis h = initial_hypothesis(specials.bos);
  int calls = 0;
  int step = 0;

  while (!h.finished && step < cfg.max_len) {
    ++step;
    StepScores s = model.score(h.tokens);
    ++calls;
    check_scores(s, model, h.tokens);

    SuccessorIndex succ =
        SuccessorIndex::build(trie, h, static_cast<int>(h.tokens.size()));
    std::optional<KStepGate> gate;
    if (cfg.mode == BiasMode::kKStep) {
      gate.emplace(trie, s, cfg.mu, cfg.k);
    }

    int best = 0;
    double best_ps = -std::numeric_limits<double>::infinity();
    for (int cand = 0; cand < v; ++cand) {
      double ps =
          s.next[cand] +
          reward_for(succ, cand, cfg, gate ? &*gate : nullptr).reward;
      if (ps > best_ps) {
        best_ps = ps;
        best = cand;
      }
    }

    ExtendOutcome ext = extend(h, best, s.next[best], succ,
                               gate ? &*gate : nullptr, trie, cfg,
                               specials.eos);
    h = std::move(ext.hyp);
    if (trace) {
      trace->push_back(StepTraceRow{step, best, h.base_lp, ext.reward,
                                    ext.gate, ext.revoked_now});
    }
  }
  return to_result(h, calls);
}

BeamOutcome beam_decode_full(const Scorer& model, const BiasTrie& trie,
                             SpecialTokens specials, const BiasConfig& cfg,
                             std::vector<StepTraceRow>* trace) {
  validate(cfg, model);
  const int v = model.vocab_size();
  const int j = cfg.beam_size;

  struct Candidate {
    Hypothesis hyp;
    int parent = 0;
    int token = -1;  // -1: carried over, already finished
    double reward = 0.0;
    int gate = -1;
    double revoked_now = 0.0;
  };

  std::vector<Hypothesis> beam{initial_hypothesis(specials.bos)};
  int calls = 0;

  for (int step = 1; step <= cfg.max_len; ++step) {
    bool any_live = false;
    for (const Hypothesis& h : beam) {
      if (!h.finished) any_live = true;
    }
    if (!any_live) break;

    std::vector<Candidate> pool;
    for (size_t hi = 0; hi < beam.size(); ++hi) {
      Hypothesis& h = beam[hi];
      if (h.finished) {
        Candidate kept;
        kept.hyp = h;
        kept.parent = static_cast<int>(hi);
        pool.push_back(std::move(kept));
        continue;
      }
      StepScores s = model.score(h.tokens);
      ++calls;
      check_scores(s, model, h.tokens);

      SuccessorIndex succ =
          SuccessorIndex::build(trie, h, static_cast<int>(h.tokens.size()));
      std::optional<KStepGate> gate;
      if (cfg.mode == BiasMode::kKStep) {
        gate.emplace(trie, s, cfg.mu, cfg.k);
      }

      std::vector<double> ps(v);
      for (int cand = 0; cand < v; ++cand) {
        ps[cand] = s.next[cand] +
                   reward_for(succ, cand, cfg, gate ? &*gate : nullptr).reward;
      }
      for (int cand : top_candidates(ps, j)) {
        ExtendOutcome ext = extend(h, cand, s.next[cand], succ,
                                   gate ? &*gate : nullptr, trie, cfg,
                                   specials.eos);
        Candidate c;
        c.hyp = std::move(ext.hyp);
        c.parent = static_cast<int>(hi);
        c.token = cand;
        c.reward = ext.reward;
        c.gate = ext.gate;
        c.revoked_now = ext.revoked_now;
        pool.push_back(std::move(c));
      }
    }

    std::stable_sort(pool.begin(), pool.end(),
                     [](const Candidate& a, const Candidate& b) {
                       if (a.hyp.biased_score != b.hyp.biased_score) {
                         return a.hyp.biased_score > b.hyp.biased_score;
                       }
                       if (a.parent != b.parent) return a.parent < b.parent;
                       return a.token < b.token;
                     });
    if (static_cast<int>(pool.size()) > j) pool.resize(j);

    beam.clear();
    for (Candidate& c : pool) {
      if (trace && c.token >= 0) {
        trace->push_back(StepTraceRow{step, c.token, c.hyp.base_lp, c.reward,
                                      c.gate, c.revoked_now});
      }
      beam.push_back(std::move(c.hyp));
    }
  }

  BeamOutcome out;
  out.scorer_calls = calls;
  int best = -1;
  for (size_t i = 0; i < beam.size(); ++i) {
    if (beam[i].finished) {
      best = static_cast<int>(i);
      break;
    }
  }
  if (best < 0) best = 0;  // length cap hit with nothing finished
  out.best_index = best;
  out.beam.reserve(beam.size());
  for (const Hypothesis& h : beam) {
    out.beam.push_back(to_result(h, calls));
  }
  return out;
}

DecodeResult beam_decode(const Scorer& model, const BiasTrie& trie,
                         SpecialTokens specials, const BiasConfig& cfg,
                         std::vector<StepTraceRow>* trace) {
  BeamOutcome out = beam_decode_full(model, trie, specials, cfg, trace);
  return out.beam[out.best_index];
}

double cost_delta(std::span<const DecodeResult> results,
                  const DecodeResult& baseline) {
  if (baseline.scorer_calls <= 0) {
    throw ConfigError("cost_delta baseline has no scorer calls");
  }
  long long total = 0;
  for (const DecodeResult& r : results) total += r.scorer_calls;
  return static_cast<double>(total) /
             static_cast<double>(baseline.scorer_calls) -
         1.0;
}

double cost_delta(std::span<const DecodeResult> results,
                  std::span<const DecodeResult> baseline) {
  long long total = 0;
  long long base = 0;
  for (const DecodeResult& r : results) total += r.scorer_calls;
  for (const DecodeResult& r : baseline) base += r.scorer_calls;
  if (base <= 0) throw ConfigError("cost_delta baseline has no scorer calls");
  return static_cast<double>(total) / static_cast<double>(base) - 1.0;
}

}  // namespace biasdec
