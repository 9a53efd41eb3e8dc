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

#include <cmath>
#include <vector>

#include "biasdec/bias_trie.hpp"
#include "biasdec/decode.hpp"
#include "biasdec/errors.hpp"
#include "biasdec/oracles.hpp"
#include "biasdec/scorer.hpp"
#include "support/corpus.hpp"
#include "doctest.h"

namespace {

using biasdec::BeamOutcome;
using biasdec::BiasConfig;
using biasdec::BiasMode;
using biasdec::BiasTrie;
using biasdec::ConfigError;
using biasdec::DecodeResult;
using biasdec::ScenarioModel;
using biasdec::SpecialTokens;
using biasdec::StepScores;
using biasdec::StepTraceRow;
using biasdec::TokenSeq;
using biasdec::testsupport::DemoScenario;
using biasdec::testsupport::make_demo_scenario;

constexpr double kTol = 1e-9;

// Adds a constant to every log-score. Leaves the model unnormalized but
// must not change which tokens any decode picks.
class ShiftScorer : public biasdec::Scorer {
 public:
  ShiftScorer(const biasdec::Scorer& inner, double shift)
      : inner_(inner), shift_(shift) {}
  int vocab_size() const override { return inner_.vocab_size(); }
  int k_steps() const override { return inner_.k_steps(); }
  StepScores score(const TokenSeq& prefix) const override {
    StepScores s = inner_.score(prefix);
    for (double& x : s.next) x += shift_;
    for (auto& f : s.future)
      for (double& x : f) x += shift_;
    return s;
  }

 private:
  const biasdec::Scorer& inner_;
  double shift_;
};

// Model for the shared-suffix case: greedy picks 0 1 3 </s> under every
// mode; tokens 0 and 1 start trie paths, 3 leaves both.
ScenarioModel overlap_model() {
  ScenarioModel m(6, 2, ScenarioModel::Fallback::kUniform);
  auto log_all = [](std::vector<double> p) {
    for (double& x : p) x = std::log(x);
    return p;
  };
  StepScores s;
  s.future = {log_all({1.0 / 6, 1.0 / 6, 1.0 / 6, 1.0 / 6, 1.0 / 6, 1.0 / 6})};
  s.next = log_all({.5, .1, .1, .1, .1, .1});
  m.add_entry({4}, s);
  s.next = log_all({.1, .6, .1, .1, .05, .05});
  m.add_entry({4, 0}, s);
  s.next = log_all({.005, .005, .005, .8, .005, .18});
  m.add_entry({4, 0, 1}, s);
  s.next = log_all({.01, .01, .01, .01, .01, .95});
  m.add_entry({4, 0, 1, 3}, s);
  return m;
}

}  // namespace

TEST_SUITE("decode") {

TEST_CASE("config validation rejects bad values") {
  DemoScenario d = make_demo_scenario();
  BiasConfig cfg = d.config(BiasMode::kNaive);

  BiasConfig bad = cfg;
  bad.lambda = -1.0;
  CHECK_THROWS_AS(biasdec::validate(bad, d.model), ConfigError);
  bad = cfg;
  bad.mu = 0;
  CHECK_THROWS_AS(biasdec::validate(bad, d.model), ConfigError);
  bad = cfg;
  bad.beam_size = 0;
  CHECK_THROWS_AS(biasdec::validate(bad, d.model), ConfigError);
  bad = cfg;
  bad.max_len = 0;
  CHECK_THROWS_AS(biasdec::validate(bad, d.model), ConfigError);

  // Lookahead depth must match what the scorer provides.
  bad = d.config(BiasMode::kKStep);
  bad.k = 3;
  CHECK_THROWS_WITH_AS(biasdec::validate(bad, d.model),
                       doctest::Contains("needs a scorer with K = 3"),
                       ConfigError);
  bad.k = 1;
  CHECK_THROWS_WITH_AS(biasdec::validate(bad, d.model),
                       doctest::Contains("requires k >= 2"), ConfigError);
  // Other modes may run with any k; only the gate needs lookahead.
  BiasConfig naive_k3 = d.config(BiasMode::kNaive);
  naive_k3.k = 3;
  CHECK_NOTHROW(biasdec::validate(naive_k3, d.model));
}

TEST_CASE("greedy unbiased decode follows the model argmax") {
  DemoScenario d = make_demo_scenario();
  DecodeResult r = biasdec::greedy_decode(d.model, d.trie(), d.specials,
                                          d.config(BiasMode::kNone));
  CHECK(r.tokens == TokenSeq{4, 0, 3, 5});
  CHECK(d.vocab.detokenize(r.tokens) == "Bonlan");
  double base = std::log(.5) + std::log(.6) + std::log(.95);
  CHECK(r.base_lp == doctest::Approx(base).epsilon(kTol));
  CHECK(r.biased_score == doctest::Approx(base).epsilon(kTol));
  CHECK(r.scorer_calls == 3);
  CHECK(r.reached_eos);
  CHECK(r.completed_bias_words.empty());
}

TEST_CASE("greedy naive biasing starts the wrong word and keeps the bonus") {
  DemoScenario d = make_demo_scenario();
  DecodeResult r = biasdec::greedy_decode(d.model, d.trie(), d.specials,
                                          d.config(BiasMode::kNaive));
  // "Bon" outscores "Bu" once both get the flat reward, and the path never
  // reaches "Bonham"; naive scoring still keeps the dangling reward.
  CHECK(r.tokens == TokenSeq{4, 0, 3, 5});
  CHECK(d.vocab.detokenize(r.tokens) == "Bonlan");
  double base = std::log(.5) + std::log(.6) + std::log(.95);
  CHECK(r.base_lp == doctest::Approx(base).epsilon(kTol));
  CHECK(r.biased_score == doctest::Approx(base + 3.0).epsilon(kTol));
  CHECK(r.completed_bias_words.empty());
}

TEST_CASE("greedy revocation takes the dangling bonus back") {
  DemoScenario d = make_demo_scenario();
  std::vector<StepTraceRow> trace;
  DecodeResult r =
      biasdec::greedy_decode(d.model, d.trie(), d.specials,
                             d.config(BiasMode::kNaiveWithRevocation), &trace);
  CHECK(r.tokens == TokenSeq{4, 0, 3, 5});
  double base = std::log(.5) + std::log(.6) + std::log(.95);
  CHECK(r.biased_score == doctest::Approx(base).epsilon(kTol));
  CHECK(r.completed_bias_words.empty());
  // The reward appears at step 1 and is revoked at step 2.
  REQUIRE(trace.size() == 3);
  CHECK(trace[0].reward == 3.0);
  CHECK(trace[1].revoked == 3.0);
  CHECK(trace[2].reward == 0.0);
}

TEST_CASE("greedy lookahead gate rescues the right word") {
  DemoScenario d = make_demo_scenario();
  std::vector<StepTraceRow> trace;
  DecodeResult r = biasdec::greedy_decode(d.model, d.trie(), d.specials,
                                          d.config(BiasMode::kKStep), &trace);
  CHECK(r.tokens == TokenSeq{4, 1, 3, 5});
  CHECK(d.vocab.detokenize(r.tokens) == "Bulan");
  double base = std::log(.4) + std::log(.9) + std::log(.95);
  CHECK(r.base_lp == doctest::Approx(base).epsilon(kTol));
  CHECK(r.biased_score == doctest::Approx(base + 6.0).epsilon(kTol));
  REQUIRE(r.completed_bias_words.size() == 1);
  CHECK(r.completed_bias_words[0].word == 0);  // "Bulan"
  CHECK(r.completed_bias_words[0].end_pos == 2);
  // Gate: open for "Bu" (future backs "lan"), open for "lan" (terminal),
  // not consulted for EOS.
  REQUIRE(trace.size() == 3);
  CHECK(trace[0].candidate == 1);
  CHECK(trace[0].gate_result == 1);
  CHECK(trace[1].candidate == 3);
  CHECK(trace[1].gate_result == 1);
  CHECK(trace[2].candidate == 5);
  CHECK(trace[2].gate_result == -1);
  CHECK(trace[2].reward == 0.0);
}

TEST_CASE("the gate rejects a start whose continuation the model buries") {
  // At the word start the lookahead backs "lan" and EOS only, so the
  // "Bon" start (continuation "ham") gets no reward while "Bu" does.
  DemoScenario d = make_demo_scenario();
  BiasTrie trie = d.trie();
  biasdec::Hypothesis h = biasdec::initial_hypothesis(4);
  StepScores s = d.model.score({4});
  BiasConfig cfg = d.config(BiasMode::kKStep);

  biasdec::StepReward bon = biasdec::step_reward(trie, h, 0, s, cfg);
  CHECK(bon.reward == 0.0);
  CHECK(bon.traversals.size() == 1);
  biasdec::StepReward bu = biasdec::step_reward(trie, h, 1, s, cfg);
  CHECK(bu.reward == 3.0);
  // step_reward is pure: same inputs, same answer, hypothesis untouched.
  for (int i = 0; i < 10; ++i) {
    biasdec::StepReward again = biasdec::step_reward(trie, h, 1, s, cfg);
    CHECK(again.reward == bu.reward);
  }
  CHECK(h.tokens == TokenSeq{4});
  CHECK(h.traversals.empty());
}

TEST_CASE("beam search with revocation prefers the completed word") {
  DemoScenario d = make_demo_scenario();
  BeamOutcome out = biasdec::beam_decode_full(
      d.model, d.trie(), d.specials,
      d.config(BiasMode::kNaiveWithRevocation, 2));
  CHECK(out.scorer_calls == 6);
  REQUIRE(out.beam.size() == 2);
  CHECK(out.best_index == 0);

  const DecodeResult& best = out.beam[0];
  CHECK(best.tokens == TokenSeq{4, 1, 3, 5});
  double base = std::log(.4) + std::log(.9) + std::log(.95);
  CHECK(best.base_lp == doctest::Approx(base).epsilon(kTol));
  CHECK(best.biased_score == doctest::Approx(base + 6.0).epsilon(kTol));
  CHECK(best.reached_eos);
  REQUIRE(best.completed_bias_words.size() == 1);
  CHECK(best.completed_bias_words[0].word == 0);

  // The runner-up kept restarting a path and lost its bonus at EOS.
  const DecodeResult& second = out.beam[1];
  CHECK(second.tokens == TokenSeq{4, 1, 3, 0, 5});
  CHECK(second.reached_eos);
}

TEST_CASE("a finished hypothesis is carried without rescoring") {
  DemoScenario d = make_demo_scenario();
  // Same run as above: step 4 scores only the one live hypothesis.
  BeamOutcome with_live = biasdec::beam_decode_full(
      d.model, d.trie(), d.specials,
      d.config(BiasMode::kNaiveWithRevocation, 2));
  CHECK(with_live.scorer_calls == 6);  // 1 + 2 + 2 + 1
  // Unbiased beam finishes everything by step 3: 1 + 2 + 2 calls.
  BeamOutcome none = biasdec::beam_decode_full(d.model, d.trie(), d.specials,
                                               d.config(BiasMode::kNone, 2));
  CHECK(none.scorer_calls == 5);
  CHECK(none.beam[none.best_index].tokens == TokenSeq{4, 1, 3, 5});
}

TEST_CASE("beam with j = 1 equals greedy in every mode") {
  DemoScenario d = make_demo_scenario();
  for (BiasMode mode : {BiasMode::kNone, BiasMode::kNaive,
                        BiasMode::kNaiveWithRevocation, BiasMode::kKStep}) {
    CAPTURE(biasdec::to_string(mode));
    DecodeResult g =
        biasdec::greedy_decode(d.model, d.trie(), d.specials, d.config(mode));
    DecodeResult b = biasdec::beam_decode(d.model, d.trie(), d.specials,
                                          d.config(mode, 1));
    CHECK(g.tokens == b.tokens);
    CHECK(g.base_lp == b.base_lp);
    CHECK(g.biased_score == b.biased_score);
    CHECK(g.scorer_calls == b.scorer_calls);
    CHECK(g.completed_bias_words == b.completed_bias_words);
  }
}

TEST_CASE("zero reward and empty lists disable biasing exactly") {
  DemoScenario d = make_demo_scenario();
  BiasTrie trie = d.trie();
  BiasTrie empty;

  for (int j : {1, 2}) {
    CAPTURE(j);
    DecodeResult none = biasdec::beam_decode(d.model, trie, d.specials,
                                             d.config(BiasMode::kNone, j));

    // lambda = 0: same tokens and scores whatever the mode.
    for (BiasMode mode : {BiasMode::kNaive, BiasMode::kNaiveWithRevocation,
                          BiasMode::kKStep}) {
      CAPTURE(biasdec::to_string(mode));
      BiasConfig cfg = d.config(mode, j);
      cfg.lambda = 0.0;
      DecodeResult r = biasdec::beam_decode(d.model, trie, d.specials, cfg);
      CHECK(r.tokens == none.tokens);
      CHECK(r.base_lp == none.base_lp);
      CHECK(r.biased_score == none.biased_score);
      CHECK(r.scorer_calls == none.scorer_calls);
    }

    // Empty trie: nothing to reward, every mode degenerates to none.
    for (BiasMode mode : {BiasMode::kNaive, BiasMode::kNaiveWithRevocation,
                          BiasMode::kKStep}) {
      CAPTURE(biasdec::to_string(mode));
      DecodeResult r = biasdec::beam_decode(d.model, empty, d.specials,
                                            d.config(mode, j));
      CHECK(r.tokens == none.tokens);
      CHECK(r.base_lp == none.base_lp);
      CHECK(r.biased_score == none.biased_score);
      CHECK(r.completed_bias_words.empty());
    }
  }
}

TEST_CASE("a committed inner word survives revocation of the outer path") {
  // Trie holds the paths [0 1 2] and [1]. The decode takes 0 then 1 and
  // then leaves: the inner word [1] committed at position 2, so only the
  // position-1 reward is revoked.
  ScenarioModel m = overlap_model();
  BiasTrie trie;
  trie.insert_path({0, 1, 2}, 0);
  trie.insert_path({1}, 1);
  SpecialTokens specials{4, 5};
  BiasConfig cfg;
  cfg.lambda = 3.0;
  cfg.mu = 2;
  cfg.k = 2;
  cfg.max_len = 6;
  double base = std::log(.5) + std::log(.6) + std::log(.8) + std::log(.95);

  cfg.mode = BiasMode::kNaiveWithRevocation;
  DecodeResult r = biasdec::greedy_decode(m, trie, specials, cfg);
  CHECK(r.tokens == TokenSeq{4, 0, 1, 3, 5});
  CHECK(r.base_lp == doctest::Approx(base).epsilon(kTol));
  CHECK(r.biased_score == doctest::Approx(base + 3.0).epsilon(kTol));
  REQUIRE(r.completed_bias_words.size() == 1);
  CHECK(r.completed_bias_words[0].word == 1);
  CHECK(r.completed_bias_words[0].end_pos == 2);

  // Naive keeps both rewards.
  cfg.mode = BiasMode::kNaive;
  DecodeResult n = biasdec::greedy_decode(m, trie, specials, cfg);
  CHECK(n.tokens == TokenSeq{4, 0, 1, 3, 5});
  CHECK(n.biased_score == doctest::Approx(base + 6.0).epsilon(kTol));
}

TEST_CASE("revocation accounting matches the closed-form replay") {
  DemoScenario d = make_demo_scenario();
  BiasTrie trie = d.trie();
  // The authored table only covers beams up to 2; wider beams wander off
  // the planned prefixes on purpose.
  for (BiasMode mode : {BiasMode::kNaive, BiasMode::kNaiveWithRevocation}) {
    for (int j : {1, 2}) {
      CAPTURE(biasdec::to_string(mode));
      CAPTURE(j);
      BiasConfig cfg = d.config(mode, j);
      BeamOutcome out =
          biasdec::beam_decode_full(d.model, trie, d.specials, cfg);
      for (const DecodeResult& r : out.beam) {
        if (!r.reached_eos) continue;
        auto ledger = biasdec::oracles::replay_reward_ledger(trie, r.tokens);
        int positions = mode == BiasMode::kNaiveWithRevocation
                            ? ledger.committed_positions
                            : ledger.rewarded_positions;
        CHECK(r.biased_score - r.base_lp ==
              doctest::Approx(cfg.lambda * static_cast<double>(positions))
                  .epsilon(kTol));
      }
    }
  }
}

TEST_CASE("replay accounting holds for wide beams on an unbounded model") {
  // Keep lambda below the typical token cost so finishing stays
  // competitive and the beam actually produces complete hypotheses.
  biasdec::oracles::HashedModel model(8, 1, 1, 424242, 0.35);
  BiasTrie trie;
  trie.insert_path({2, 3}, 0);
  trie.insert_path({4}, 1);
  trie.insert_path({5, 2}, 2);
  for (BiasMode mode : {BiasMode::kNaive, BiasMode::kNaiveWithRevocation}) {
    for (int j : {3, 4}) {
      CAPTURE(biasdec::to_string(mode));
      CAPTURE(j);
      BiasConfig cfg;
      cfg.mode = mode;
      cfg.lambda = 1.0;
      cfg.beam_size = j;
      cfg.max_len = 8;
      BeamOutcome out =
          biasdec::beam_decode_full(model, trie, {0, 1}, cfg);
      int finished = 0;
      for (const DecodeResult& r : out.beam) {
        if (!r.reached_eos) continue;
        ++finished;
        auto ledger = biasdec::oracles::replay_reward_ledger(trie, r.tokens);
        int positions = mode == BiasMode::kNaiveWithRevocation
                            ? ledger.committed_positions
                            : ledger.rewarded_positions;
        CHECK(r.biased_score - r.base_lp ==
              doctest::Approx(cfg.lambda * static_cast<double>(positions))
                  .epsilon(kTol));
      }
      CHECK(finished > 0);
    }
  }
}

TEST_CASE("shifting every model score never changes the tokens") {
  ScenarioModel base_model =
      biasdec::testsupport::make_fixed_length_model(6, 4, 11);
  ShiftScorer shifted(base_model, -2.5);
  BiasTrie trie;
  trie.insert_path({2, 3}, 0);
  trie.insert_path({4}, 1);
  SpecialTokens specials{0, 1};
  for (BiasMode mode : {BiasMode::kNone, BiasMode::kNaive,
                        BiasMode::kNaiveWithRevocation, BiasMode::kKStep}) {
    for (int j : {1, 2, 3}) {
      CAPTURE(biasdec::to_string(mode));
      CAPTURE(j);
      BiasConfig cfg;
      cfg.lambda = 3.0;
      cfg.mu = 2;
      cfg.k = 2;
      cfg.mode = mode;
      cfg.beam_size = j;
      cfg.max_len = 4;
      DecodeResult plain =
          biasdec::beam_decode(base_model, trie, specials, cfg);
      DecodeResult moved = biasdec::beam_decode(shifted, trie, specials, cfg);
      CHECK(plain.tokens == moved.tokens);
      CHECK(plain.scorer_calls == moved.scorer_calls);
      double steps = static_cast<double>(plain.tokens.size() - 1);
      CHECK(moved.base_lp ==
            doctest::Approx(plain.base_lp - 2.5 * steps).epsilon(1e-9));
    }
  }
}

TEST_CASE("candidate ties break toward the smaller token id") {
  // Uniform next scores, no trie: token 0 always wins.
  ScenarioModel m(4, 1, ScenarioModel::Fallback::kUniform);
  BiasTrie empty;
  BiasConfig cfg;
  cfg.mode = BiasMode::kNone;
  cfg.max_len = 3;
  cfg.k = 1;
  DecodeResult r = biasdec::greedy_decode(m, empty, SpecialTokens{3, 2}, cfg);
  CHECK(r.tokens == TokenSeq{3, 0, 0, 0});
  CHECK_FALSE(r.reached_eos);
}

TEST_CASE("the length cap leaves hypotheses unfinished but scored") {
  DemoScenario d = make_demo_scenario();
  BiasConfig cfg = d.config(BiasMode::kNaiveWithRevocation);
  cfg.max_len = 1;  // cut off right after the first word piece
  DecodeResult r = biasdec::greedy_decode(d.model, d.trie(), d.specials, cfg);
  CHECK(r.tokens == TokenSeq{4, 0});
  CHECK_FALSE(r.reached_eos);
  // No EOS, no final revocation sweep: the pending reward is still in.
  CHECK(r.biased_score ==
        doctest::Approx(r.base_lp + 3.0).epsilon(kTol));
}

TEST_CASE("trace rows carry cumulative base scores and step rewards") {
  DemoScenario d = make_demo_scenario();
  std::vector<StepTraceRow> trace;
  biasdec::greedy_decode(d.model, d.trie(), d.specials,
                         d.config(BiasMode::kNaive), &trace);
  REQUIRE(trace.size() == 3);
  CHECK(trace[0].step == 1);
  CHECK(trace[0].candidate == 0);
  CHECK(trace[0].base_lp == doctest::Approx(std::log(.5)).epsilon(kTol));
  CHECK(trace[0].reward == 3.0);
  CHECK(trace[0].gate_result == -1);  // gate only runs in lookahead mode
  CHECK(trace[1].base_lp ==
        doctest::Approx(std::log(.5) + std::log(.6)).epsilon(kTol));
  CHECK(trace[2].candidate == 5);
}

TEST_CASE("built tries never reward BOS or EOS tokens") {
  DemoScenario d = make_demo_scenario();
  BiasTrie trie = d.trie();
  // Word forms tokenize without the specials, so no root edge uses them.
  CHECK(trie.continuations(biasdec::TrieCursor{}) == std::vector<int>{0, 1});
}

}  // TEST_SUITE
