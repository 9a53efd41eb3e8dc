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

#include "biasdec/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>

#include "biasdec/errors.hpp"
#include "biasdec/metrics.hpp"
#include "biasdec/rng.hpp"

namespace biasdec::oracles {

namespace {

constexpr double kTol = 1e-9;

uint64_t hash_prefix(uint64_t seed, const TokenSeq& prefix) {
  uint64_t h = seed ^ UINT64_C(0x9e3779b97f4a7c15);
  for (int t : prefix) {
    SplitMix64 mix{h ^ (static_cast<uint64_t>(t) + UINT64_C(0x1234))};
    h = mix.next();
  }
  return h;
}

// Random categorical distribution as log-probs, exactly normalized up to
// rounding. eos_weight > 0 mixes extra mass onto eos_id.
std::vector<double> random_logprobs_from(uint64_t stream, int vocab_size,
                                         int eos_id, double eos_weight) {
  SplitMix64 rng{stream};
  std::vector<double> p(vocab_size);
  double sum = 0.0;
  for (double& v : p) {
    v = 1.0 - rng.unit();  // (0, 1], never log(0)
    sum += v;
  }
  for (double& v : p) v /= sum;
  if (eos_weight > 0.0) {
    for (int i = 0; i < vocab_size; ++i) p[i] *= 1.0 - eos_weight;
    p[eos_id] += eos_weight;
  }
  for (double& v : p) v = std::log(v);
  return p;
}

std::string format_case(int case_index, const char* fmt, ...)
    __attribute__((format(printf, 2, 3)));

std::string format_case(int case_index, const char* fmt, ...) {
  char body[512];
  va_list ap;
  va_start(ap, fmt);
  vsnprintf(body, sizeof(body), fmt, ap);
  va_end(ap);
  char out[600];
  snprintf(out, sizeof(out), "case %d: %s", case_index, body);
  return out;
}

std::string join_tokens(const TokenSeq& t) {
  std::string s = "[";
  for (size_t i = 0; i < t.size(); ++i) {
    if (i) s += ' ';
    s += std::to_string(t[i]);
  }
  s += ']';
  return s;
}

// Random token-level trie: up to max_words paths of 1..max_path_len tokens
// drawn from [token_lo, token_hi].
BiasTrie random_raw_trie(SplitMix64& rng, int max_words, int max_path_len,
                         int token_lo, int token_hi) {
  BiasTrie trie;
  int n_words = 1 + static_cast<int>(rng.bounded(
                        static_cast<uint64_t>(max_words)));
  int span = token_hi - token_lo + 1;
  for (int w = 0; w < n_words; ++w) {
    int len = 1 + static_cast<int>(rng.bounded(
                      static_cast<uint64_t>(max_path_len)));
    TokenSeq path(len);
    for (int& t : path)
      t = token_lo + static_cast<int>(rng.bounded(
                         static_cast<uint64_t>(span)));
    trie.insert_path(path, w);
  }
  return trie;
}

std::vector<CompletedWord> sorted_completed(std::vector<CompletedWord> v) {
  std::sort(v.begin(), v.end(), [](const CompletedWord& a,
                                   const CompletedWord& b) {
    if (a.end_pos != b.end_pos) return a.end_pos < b.end_pos;
    return a.word < b.word;
  });
  return v;
}

// Checks one decode result against the replay ledger. Returns an empty
// string on success, a description on mismatch.
std::string check_against_replay(const BiasTrie& trie, const DecodeResult& r,
                                 const BiasConfig& cfg) {
  ReplayLedger ledger = replay_reward_ledger(trie, r.tokens);
  int paid = cfg.mode == BiasMode::kNaiveWithRevocation
                 ? ledger.committed_positions
                 : ledger.rewarded_positions;
  double expected = cfg.lambda * paid;
  double got = r.biased_score - r.base_lp;
  if (std::fabs(got - expected) > kTol) {
    char buf[256];
    snprintf(buf, sizeof(buf),
             "reward delta %.12f, replay expects %.12f (%d positions) for %s",
             got, expected, paid, join_tokens(r.tokens).c_str());
    return buf;
  }
  if (sorted_completed(r.completed_bias_words) != ledger.completed)
    return "completed bias words disagree with replay for " +
           join_tokens(r.tokens);
  return "";
}

int brute_align(const std::vector<std::string>& ref,
                const std::vector<std::string>& hyp, size_t i, size_t j) {
  if (i == ref.size()) return static_cast<int>(hyp.size() - j);
  if (j == hyp.size()) return static_cast<int>(ref.size() - i);
  int diag = (ref[i] == hyp[j] ? 0 : 1) + brute_align(ref, hyp, i + 1, j + 1);
  int del = 1 + brute_align(ref, hyp, i + 1, j);
  int ins = 1 + brute_align(ref, hyp, i, j + 1);
  return std::min(diag, std::min(del, ins));
}

}  // namespace

HashedModel::HashedModel(int vocab_size, int k, int eos_id, uint64_t seed,
                         double eos_weight)
    : vocab_size_(vocab_size),
      k_(k),
      eos_id_(eos_id),
      seed_(seed),
      eos_weight_(eos_weight) {
  if (vocab_size < 2) throw ConfigError("hashed model needs vocab_size >= 2");
  if (k < 1) throw ConfigError("hashed model needs k >= 1");
  if (eos_id < 0 || eos_id >= vocab_size)
    throw ConfigError("hashed model eos id out of range");
}

StepScores HashedModel::score(const TokenSeq& prefix) const {
  uint64_t h = hash_prefix(seed_, prefix);
  StepScores s;
  s.next = random_logprobs_from(h, vocab_size_, eos_id_, eos_weight_);
  s.future.resize(static_cast<size_t>(k_) - 1);
  for (int j = 0; j + 1 < k_; ++j)
    s.future[static_cast<size_t>(j)] =
        random_logprobs_from(h + static_cast<uint64_t>(j) + 1, vocab_size_,
                             eos_id_, 0.0);
  return s;
}

ScenarioModel random_table_model(int vocab_size, int k, int max_len,
                                 int bos_id, int eos_id, uint64_t seed,
                                 double eos_weight) {
  ScenarioModel model(vocab_size, k, ScenarioModel::Fallback::kError);
  std::vector<TokenSeq> frontier{{bos_id}};
  for (int depth = 0; depth < max_len; ++depth) {
    std::vector<TokenSeq> next_frontier;
    for (const TokenSeq& prefix : frontier) {
      uint64_t h = hash_prefix(seed, prefix);
      StepScores s;
      s.next = random_logprobs_from(h, vocab_size, eos_id, eos_weight);
      s.future.resize(static_cast<size_t>(k) - 1);
      for (int j = 0; j + 1 < k; ++j)
        s.future[static_cast<size_t>(j)] = random_logprobs_from(
            h + static_cast<uint64_t>(j) + 1, vocab_size, eos_id, 0.0);
      model.add_entry(prefix, s);
      if (depth + 1 >= max_len) continue;
      for (int v = 0; v < vocab_size; ++v) {
        if (v == eos_id) continue;
        TokenSeq ext = prefix;
        ext.push_back(v);
        next_frontier.push_back(std::move(ext));
      }
    }
    frontier = std::move(next_frontier);
  }
  return model;
}

BruteBest brute_force_best(const Scorer& model, int bos_id, int eos_id,
                           int max_len) {
  BruteBest best;
  const int vocab = model.vocab_size();
  TokenSeq prefix{bos_id};
  // Left-to-right accumulation, same association order as the decoder, so
  // equal sequences produce bit-identical sums.
  std::function<void(int, double)> dfs = [&](int emitted, double acc) {
    StepScores s = model.score(prefix);
    for (int v = 0; v < vocab; ++v) {
      double lp = acc + s.next[static_cast<size_t>(v)];
      if (v == eos_id) {
        if (!best.found || lp > best.base_lp) {
          best.found = true;
          best.base_lp = lp;
          best.tokens = prefix;
          best.tokens.push_back(v);
        }
      } else if (emitted + 1 < max_len) {
        prefix.push_back(v);
        dfs(emitted + 1, lp);
        prefix.pop_back();
      }
    }
  };
  dfs(0, 0.0);
  return best;
}

ReplayLedger replay_reward_ledger(const BiasTrie& trie,
                                  const TokenSeq& tokens) {
  const size_t n = tokens.size();
  std::vector<char> rewarded(n, 0);
  std::vector<char> committed(n, 0);
  ReplayLedger ledger;
  for (size_t start = 1; start < n; ++start) {
    TrieCursor cur;
    int last_terminal = -1;
    for (size_t p = start; p < n; ++p) {
      auto next = trie.advance(cur, tokens[p]);
      if (!next) break;
      cur = *next;
      rewarded[p] = 1;
      if (auto word = trie.is_terminal(cur)) {
        last_terminal = static_cast<int>(p);
        ledger.completed.push_back({*word, static_cast<int>(p)});
      }
    }
    for (int q = static_cast<int>(start); q <= last_terminal; ++q)
      committed[static_cast<size_t>(q)] = 1;
  }
  ledger.rewarded_positions =
      static_cast<int>(std::count(rewarded.begin(), rewarded.end(), 1));
  ledger.committed_positions =
      static_cast<int>(std::count(committed.begin(), committed.end(), 1));
  ledger.completed = sorted_completed(std::move(ledger.completed));
  ledger.completed.erase(
      std::unique(ledger.completed.begin(), ledger.completed.end()),
      ledger.completed.end());
  return ledger;
}

int brute_force_alignment_cost(const std::vector<std::string>& ref,
                               const std::vector<std::string>& hyp) {
  return brute_align(ref, hyp, 0, 0);
}

SuiteResult exhaustive_beam_suite(int cases, uint64_t seed) {
  SuiteResult res{"exhaustive_beam", cases, 0, ""};
  BiasTrie empty_trie;
  for (int c = 0; c < cases; ++c) {
    SplitMix64 rng{derive_seed(seed, "exhaustive_beam:" + std::to_string(c))};
    const int vocab = 3 + static_cast<int>(rng.bounded(3));    // 3..5
    const int max_len = 3 + static_cast<int>(rng.bounded(4));  // 3..6
    const int bos = 0;
    const int eos = vocab - 1;
    ScenarioModel model =
        random_table_model(vocab, 1, max_len, bos, eos, rng.next(), 0.2);

    BiasConfig cfg;
    cfg.mode = BiasMode::kNone;
    cfg.lambda = 0.0;
    cfg.mu = 1;
    cfg.k = 1;
    cfg.max_len = max_len;
    cfg.beam_size = 1;
    for (int i = 0; i < max_len; ++i) cfg.beam_size *= vocab;

    DecodeResult got = beam_decode(model, empty_trie, {bos, eos}, cfg);
    BruteBest want = brute_force_best(model, bos, eos, max_len);
    std::string err;
    if (!want.found) {
      err = "brute force found no complete sequence";
    } else if (!got.reached_eos) {
      err = "beam returned an unfinished hypothesis";
    } else if (got.tokens != want.tokens) {
      err = "beam " + join_tokens(got.tokens) + " vs brute " +
            join_tokens(want.tokens);
    } else if (std::fabs(got.base_lp - want.base_lp) > kTol) {
      char buf[128];
      snprintf(buf, sizeof(buf), "base_lp %.12f vs brute %.12f", got.base_lp,
               want.base_lp);
      err = buf;
    } else if (std::fabs(got.biased_score - got.base_lp) > kTol) {
      err = "biased score drifted from base under lambda = 0";
    }
    if (!err.empty()) {
      ++res.failures;
      if (res.detail.empty()) res.detail = format_case(c, "%s", err.c_str());
    }
  }
  return res;
}

SuiteResult revocation_suite(int cases, uint64_t seed) {
  SuiteResult res{"revocation_replay", cases, 0, ""};
  int finished_seen = 0;
  for (int c = 0; c < cases; ++c) {
    SplitMix64 rng{derive_seed(seed, "revocation:" + std::to_string(c))};
    const int vocab = 12;
    const int bos = 0;
    const int eos = 1;
    HashedModel model(vocab, 1, eos, rng.next(), 0.25);
    BiasTrie trie = random_raw_trie(rng, 8, 3, 2, vocab - 1);

    BiasConfig cfg;
    cfg.lambda = 0.5 * (1 + static_cast<int>(rng.bounded(8)));  // 0.5..4
    cfg.mu = 1;
    cfg.k = 1;
    cfg.max_len = 6 + static_cast<int>(rng.bounded(3));  // 6..8
    cfg.beam_size = 1 + static_cast<int>(rng.bounded(4));

    std::string err;
    for (BiasMode mode :
         {BiasMode::kNaiveWithRevocation, BiasMode::kNaive}) {
      cfg.mode = mode;
      BeamOutcome out = beam_decode_full(model, trie, {bos, eos}, cfg);
      for (const DecodeResult& r : out.beam) {
        if (!r.reached_eos) continue;
        ++finished_seen;
        err = check_against_replay(trie, r, cfg);
        if (!err.empty()) break;
      }
      if (err.empty()) {
        DecodeResult g = greedy_decode(model, trie, {bos, eos}, cfg);
        if (g.reached_eos) {
          ++finished_seen;
          err = check_against_replay(trie, g, cfg);
        }
      }
      if (!err.empty()) break;
    }
    if (!err.empty()) {
      ++res.failures;
      if (res.detail.empty()) res.detail = format_case(c, "%s", err.c_str());
    }
  }
  if (res.failures == 0 && finished_seen < cases) {
    ++res.failures;
    res.detail = "too few finished hypotheses to be meaningful";
  }
  return res;
}

SuiteResult indicator_suite(int cases, uint64_t seed) {
  SuiteResult res{"indicator_traversals", cases, 0, ""};
  for (int c = 0; c < cases; ++c) {
    SplitMix64 rng{derive_seed(seed, "indicator:" + std::to_string(c))};
    BiasTrie trie = random_raw_trie(rng, 8, 3, 2, 11);
    const int len = 12;
    TokenSeq seq(len);
    for (int& t : seq) t = 2 + static_cast<int>(rng.bounded(10));

    std::vector<Traversal> actives;
    TokenSeq prefix;
    for (int p = 0; p < len; ++p) {
      prefix.push_back(seq[static_cast<size_t>(p)]);
      actives =
          advance_traversals(trie, actives, seq[static_cast<size_t>(p)], p);
      bool incremental = !actives.empty();
      bool brute = trie.indicator_bruteforce(prefix);
      if (incremental != brute) {
        ++res.failures;
        if (res.detail.empty())
          res.detail = format_case(
              c, "position %d: incremental %d vs suffix scan %d on %s", p,
              incremental ? 1 : 0, brute ? 1 : 0, join_tokens(prefix).c_str());
        break;
      }
    }
  }
  return res;
}

SuiteResult alignment_suite() {
  const std::vector<std::string> alphabet{"a", "b", "c"};
  std::vector<std::vector<std::string>> pool{{}};
  for (size_t begin = 0, len = 1; len <= 4; ++len) {
    size_t end = pool.size();
    for (size_t i = begin; i < end; ++i)
      for (const std::string& w : alphabet) {
        auto ext = pool[i];
        ext.push_back(w);
        pool.push_back(std::move(ext));
      }
    begin = end;
  }

  SuiteResult res{"alignment_bruteforce", 0, 0, ""};
  for (const auto& ref : pool) {
    for (const auto& hyp : pool) {
      ++res.cases;
      AlignedPair got = align(ref, hyp);
      int want = brute_force_alignment_cost(ref, hyp);
      std::string err;
      if (got.cost != want) {
        err = "cost " + std::to_string(got.cost) + " vs brute " +
              std::to_string(want);
      } else {
        // Replay the ops: they must consume both sequences in order and
        // their error count must equal the reported cost.
        size_t i = 0, j = 0;
        int errors = 0;
        for (const AlignedOp& op : got.ops) {
          switch (op.op) {
            case EditOp::kMatch:
              if (i >= ref.size() || j >= hyp.size() || ref[i] != hyp[j] ||
                  op.ref_index != static_cast<int>(i) ||
                  op.hyp_index != static_cast<int>(j))
                err = "bad match op";
              ++i, ++j;
              break;
            case EditOp::kSubstitute:
              if (i >= ref.size() || j >= hyp.size() || ref[i] == hyp[j])
                err = "bad substitute op";
              ++i, ++j, ++errors;
              break;
            case EditOp::kDelete:
              if (i >= ref.size() || op.hyp_index != -1) err = "bad delete op";
              ++i, ++errors;
              break;
            case EditOp::kInsert:
              if (j >= hyp.size() || op.ref_index != -1) err = "bad insert op";
              ++j, ++errors;
              break;
          }
          if (!err.empty()) break;
        }
        if (err.empty() && (i != ref.size() || j != hyp.size()))
          err = "ops do not cover both sequences";
        if (err.empty() && errors != got.cost)
          err = "op error count disagrees with cost";
      }
      if (!err.empty()) {
        ++res.failures;
        if (res.detail.empty())
          res.detail = format_case(res.cases - 1, "%s", err.c_str());
      }
    }
  }
  return res;
}

SuiteResult kstep_gate_saturation_suite(int cases, uint64_t seed) {
  SuiteResult res{"kstep_saturation", cases, 0, ""};
  for (int c = 0; c < cases; ++c) {
    SplitMix64 rng{derive_seed(seed, "kstep_sat:" + std::to_string(c))};
    const int vocab = 8;
    const int bos = 0;
    const int eos = 1;
    HashedModel model(vocab, 2, eos, rng.next(), 0.25);
    BiasTrie trie = random_raw_trie(rng, 6, 3, 2, vocab - 1);

    BiasConfig cfg;
    cfg.lambda = 3.0;
    cfg.mu = vocab;  // saturated gate: top-mu covers the whole vocabulary
    cfg.k = 2;
    cfg.max_len = 8;

    std::string err;
    for (int beam : {1, 3}) {
      cfg.beam_size = beam;
      cfg.mode = BiasMode::kKStep;
      DecodeResult gated = beam == 1
                               ? greedy_decode(model, trie, {bos, eos}, cfg)
                               : beam_decode(model, trie, {bos, eos}, cfg);
      cfg.mode = BiasMode::kNaive;
      DecodeResult naive = beam == 1
                               ? greedy_decode(model, trie, {bos, eos}, cfg)
                               : beam_decode(model, trie, {bos, eos}, cfg);
      if (gated.tokens != naive.tokens) {
        err = format_case(c, "beam %d tokens differ: %s vs %s", beam,
                          join_tokens(gated.tokens).c_str(),
                          join_tokens(naive.tokens).c_str());
      } else if (std::fabs(gated.biased_score - naive.biased_score) > kTol ||
                 std::fabs(gated.base_lp - naive.base_lp) > kTol) {
        err = format_case(c, "beam %d scores differ: %.12f vs %.12f", beam,
                          gated.biased_score, naive.biased_score);
      }
      if (!err.empty()) break;
    }
    if (!err.empty()) {
      ++res.failures;
      if (res.detail.empty()) res.detail = err;
    }
  }
  return res;
}

std::vector<SuiteResult> run_all_suites(int cases, uint64_t seed) {
  return {
      exhaustive_beam_suite(cases, seed),
      revocation_suite(cases, seed + 1),
      indicator_suite(cases, seed + 2),
      alignment_suite(),
      kstep_gate_saturation_suite(cases, seed + 3),
  };
}

}  // namespace biasdec::oracles
