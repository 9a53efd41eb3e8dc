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

#include <string>
#include <unordered_set>
#include <vector>

#include "biasdec/errors.hpp"
#include "biasdec/metrics.hpp"
#include "biasdec/oracles.hpp"
#include "biasdec/rng.hpp"
#include "doctest.h"

namespace {

using biasdec::AlignedPair;
using biasdec::BucketCounts;
using biasdec::EditOp;
using biasdec::EvalReport;
using Words = std::vector<std::string>;
using BiasSet = std::unordered_set<std::string>;

// Every ref index consumed once in order, every hyp index once in order,
// and the op mix matches the cost.
void check_ops_shape(const Words& ref, const Words& hyp,
                     const AlignedPair& a) {
  int next_ref = 0;
  int next_hyp = 0;
  int errors = 0;
  for (const auto& op : a.ops) {
    switch (op.op) {
      case EditOp::kMatch:
        REQUIRE(op.ref_index == next_ref++);
        REQUIRE(op.hyp_index == next_hyp++);
        REQUIRE(ref[op.ref_index] == hyp[op.hyp_index]);
        break;
      case EditOp::kSubstitute:
        REQUIRE(op.ref_index == next_ref++);
        REQUIRE(op.hyp_index == next_hyp++);
        REQUIRE(ref[op.ref_index] != hyp[op.hyp_index]);
        ++errors;
        break;
      case EditOp::kDelete:
        REQUIRE(op.ref_index == next_ref++);
        REQUIRE(op.hyp_index == -1);
        ++errors;
        break;
      case EditOp::kInsert:
        REQUIRE(op.ref_index == -1);
        REQUIRE(op.hyp_index == next_hyp++);
        ++errors;
        break;
    }
  }
  REQUIRE(next_ref == static_cast<int>(ref.size()));
  REQUIRE(next_hyp == static_cast<int>(hyp.size()));
  REQUIRE(errors == a.cost);
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("normalize_text lowercases and strips edge punctuation") {
  CHECK(biasdec::normalize_text("Go to Bonham St.") ==
        Words{"go", "to", "bonham", "st"});
  CHECK(biasdec::normalize_text("  (Hello),   WORLD!! ") ==
        Words{"hello", "world"});
  CHECK(biasdec::normalize_text("it's o'clock") == Words{"it's", "o'clock"});
  CHECK(biasdec::normalize_text("--- ... !!!") == Words{});
  CHECK(biasdec::normalize_text("") == Words{});
  CHECK(biasdec::normalize_text("a\tb\nc") == Words{"a", "b", "c"});
}

TEST_CASE("align computes edit distance with the expected ops") {
  SUBCASE("identical") {
    AlignedPair a = biasdec::align({"a", "b"}, {"a", "b"});
    CHECK(a.cost == 0);
    CHECK(a.ops.size() == 2);
  }
  SUBCASE("one word split into two") {
    Words ref{"bonham"};
    Words hyp{"bon", "ham"};
    AlignedPair a = biasdec::align(ref, hyp);
    CHECK(a.cost == 2);
    check_ops_shape(ref, hyp, a);
  }
  SUBCASE("empty hypothesis is all deletions") {
    Words ref{"x", "y", "z"};
    AlignedPair a = biasdec::align(ref, {});
    CHECK(a.cost == 3);
    check_ops_shape(ref, {}, a);
  }
  SUBCASE("empty reference is all insertions") {
    AlignedPair a = biasdec::align({}, {"x", "y"});
    CHECK(a.cost == 2);
    check_ops_shape({}, {"x", "y"}, a);
  }
  SUBCASE("classic substitution plus deletion") {
    Words ref{"go", "to", "bonham", "street"};
    Words hyp{"go", "two", "bonham"};
    AlignedPair a = biasdec::align(ref, hyp);
    CHECK(a.cost == 2);
    check_ops_shape(ref, hyp, a);
  }
}

TEST_CASE("align cost matches a brute-force search on short inputs") {
  const Words pool{"a", "b", "c"};
  biasdec::SplitMix64 rng(88);
  for (int it = 0; it < 300; ++it) {
    Words ref, hyp;
    for (uint64_t i = rng.bounded(5); i > 0; --i)
      ref.push_back(pool[rng.bounded(pool.size())]);
    for (uint64_t i = rng.bounded(5); i > 0; --i)
      hyp.push_back(pool[rng.bounded(pool.size())]);
    AlignedPair a = biasdec::align(ref, hyp);
    CAPTURE(it);
    CHECK(a.cost == biasdec::oracles::brute_force_alignment_cost(ref, hyp));
    check_ops_shape(ref, hyp, a);
  }
}

TEST_CASE("bucket rates are null without reference words") {
  BucketCounts b;
  CHECK_FALSE(b.rate().has_value());
  b.ins = 2;
  CHECK_FALSE(b.rate().has_value());  // inserted-only bucket has no rate
  b.ref_words = 4;
  CHECK(b.rate() == doctest::Approx(0.5));
}

TEST_CASE("evaluate rejects mismatched input sizes") {
  CHECK_THROWS_AS(biasdec::evaluate({{"a"}}, {}, {}), biasdec::InputError);
  CHECK_THROWS_AS(biasdec::evaluate({{"a"}}, {{"a"}}, {}),
                  biasdec::InputError);
}

TEST_CASE("a deleted everything hypothesis scores rate one") {
  EvalReport rep = biasdec::evaluate({{"a", "b"}}, {{}}, {BiasSet{}});
  CHECK(rep.wer.del == 2);
  CHECK(rep.wer.rate() == doctest::Approx(1.0));
  CHECK(rep.uwer.rate() == doctest::Approx(1.0));
  CHECK_FALSE(rep.bwer.rate().has_value());
}

TEST_CASE("substitutions and deletions split by the reference word") {
  // ref "bonham" is a bias word: its substitution lands in the bias
  // bucket, the surrounding words in the other.
  EvalReport rep = biasdec::evaluate({{"go", "bonham", "street"}},
                                     {{"go", "bonam", "street"}},
                                     {BiasSet{"bonham"}});
  CHECK(rep.wer.errors() == 1);
  CHECK(rep.bwer.sub == 1);
  CHECK(rep.bwer.ref_words == 1);
  CHECK(rep.bwer.rate() == doctest::Approx(1.0));
  CHECK(rep.uwer.errors() == 0);
  CHECK(rep.uwer.ref_words == 2);
  CHECK(rep.uwer.rate() == doctest::Approx(0.0));

  // Dropping the bias word entirely charges a bias-bucket deletion.
  EvalReport dropped = biasdec::evaluate({{"go", "bonham"}}, {{"go"}},
                                         {BiasSet{"bonham"}});
  CHECK(dropped.bwer.del == 1);
  CHECK(dropped.bwer.rate() == doctest::Approx(1.0));
  CHECK(dropped.uwer.errors() == 0);
}

TEST_CASE("insertions split by the hypothesis word") {
  // Hallucinating a bias word charges the bias bucket even though the
  // reference contains none.
  EvalReport rep = biasdec::evaluate({{"go", "home"}},
                                     {{"go", "bonham", "home"}},
                                     {BiasSet{"bonham"}});
  CHECK(rep.wer.ins == 1);
  CHECK(rep.bwer.ins == 1);
  CHECK(rep.bwer.ref_words == 0);
  CHECK_FALSE(rep.bwer.rate().has_value());
  CHECK(rep.uwer.ins == 0);
  CHECK(rep.uwer.rate() == doctest::Approx(0.0));

  // A plain inserted word charges the unbiased bucket.
  EvalReport rep2 = biasdec::evaluate({{"go", "home"}},
                                      {{"go", "now", "home"}},
                                      {BiasSet{"bonham"}});
  CHECK(rep2.bwer.ins == 0);
  CHECK(rep2.uwer.ins == 1);
}

TEST_CASE("the two buckets always add up to the totals") {
  const Words pool{"a", "b", "c", "d", "e"};
  biasdec::SplitMix64 rng(99);
  for (int it = 0; it < 300; ++it) {
    std::vector<Words> refs, hyps;
    std::vector<BiasSet> bias;
    uint64_t utts = 1 + rng.bounded(3);
    for (uint64_t u = 0; u < utts; ++u) {
      Words ref, hyp;
      for (uint64_t i = rng.bounded(6); i > 0; --i)
        ref.push_back(pool[rng.bounded(pool.size())]);
      for (uint64_t i = rng.bounded(6); i > 0; --i)
        hyp.push_back(pool[rng.bounded(pool.size())]);
      BiasSet set;
      for (const auto& w : pool)
        if (rng.bounded(2)) set.insert(w);
      refs.push_back(std::move(ref));
      hyps.push_back(std::move(hyp));
      bias.push_back(std::move(set));
    }
    EvalReport rep = biasdec::evaluate(refs, hyps, bias);
    CAPTURE(it);
    CHECK(rep.wer.sub == rep.bwer.sub + rep.uwer.sub);
    CHECK(rep.wer.ins == rep.bwer.ins + rep.uwer.ins);
    CHECK(rep.wer.del == rep.bwer.del + rep.uwer.del);
    CHECK(rep.wer.ref_words == rep.bwer.ref_words + rep.uwer.ref_words);

    long long total_cost = 0;
    for (size_t u = 0; u < refs.size(); ++u)
      total_cost += biasdec::align(refs[u], hyps[u]).cost;
    CHECK(rep.wer.errors() == total_cost);
  }
}

TEST_CASE("report serialization is stable") {
  EvalReport rep = biasdec::evaluate({{"go", "bonham", "street"}},
                                     {{"go", "bonam", "street"}},
                                     {BiasSet{"bonham"}});
  nlohmann::ordered_json j = rep.to_json();
  CHECK(j["wer"]["errors"] == 1);
  CHECK(j["wer"]["ref_words"] == 3);
  CHECK(j["bwer"]["sub"] == 1);
  CHECK(j["bwer"]["rate"] == doctest::Approx(1.0));
  CHECK(j["uwer"]["rate"] == doctest::Approx(0.0));

  CHECK(rep.to_tsv() ==
        "wer\tbwer\tuwer\twer_errors\twer_ref\tbwer_sub\tbwer_ins\tbwer_del\t"
        "bwer_ref\tuwer_sub\tuwer_ins\tuwer_del\tuwer_ref\n"
        "0.333333\t1.000000\t0.000000\t1\t3\t1\t0\t0\t1\t0\t0\t0\t2\n");

  // No reference words at all: the rate column degrades to NA.
  EvalReport empty_bias = biasdec::evaluate({{"go"}}, {{"go"}}, {BiasSet{}});
  CHECK(empty_bias.to_json()["bwer"]["rate"].is_null());
  CHECK(empty_bias.to_tsv().find("\tNA\t") != std::string::npos);
}

}  // TEST_SUITE
