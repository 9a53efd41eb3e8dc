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

#include "biasdec/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>

#include "biasdec/errors.hpp"

namespace biasdec {

std::vector<std::string> normalize_text(const std::string& text) {
  std::vector<std::string> words;
  size_t i = 0;
  const size_t n = text.size();
  while (i < n) {
    while (i < n && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    size_t start = i;
    while (i < n && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i == start) break;
    size_t lo = start;
    size_t hi = i;  // one past end
    while (lo < hi && std::ispunct(static_cast<unsigned char>(text[lo]))) ++lo;
    while (hi > lo && std::ispunct(static_cast<unsigned char>(text[hi - 1]))) {
      --hi;
    }
    if (lo == hi) continue;
    std::string w;
    w.reserve(hi - lo);
    for (size_t p = lo; p < hi; ++p) {
      w += static_cast<char>(std::tolower(static_cast<unsigned char>(text[p])));
    }
    words.push_back(std::move(w));
  }
  return words;
}

AlignedPair align(const std::vector<std::string>& ref,
                  const std::vector<std::string>& hyp) {
  const int n = static_cast<int>(ref.size());
  const int m = static_cast<int>(hyp.size());
  std::vector<std::vector<int>> d(n + 1, std::vector<int>(m + 1, 0));
  for (int i = 0; i <= n; ++i) d[i][0] = i;
  for (int j = 0; j <= m; ++j) d[0][j] = j;
  for (int i = 1; i <= n; ++i) {
    for (int j = 1; j <= m; ++j) {
      int diag = d[i - 1][j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      d[i][j] = std::min({diag, d[i - 1][j] + 1, d[i][j - 1] + 1});
    }
  }

  AlignedPair out;
  out.cost = d[n][m];
  int i = n;
  int j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 && ref[i - 1] == hyp[j - 1] &&
        d[i][j] == d[i - 1][j - 1]) {
      out.ops.push_back({EditOp::kMatch, i - 1, j - 1});
      --i, --j;
    } else if (i > 0 && j > 0 && ref[i - 1] != hyp[j - 1] &&
               d[i][j] == d[i - 1][j - 1] + 1) {
      out.ops.push_back({EditOp::kSubstitute, i - 1, j - 1});
      --i, --j;
    } else if (i > 0 && d[i][j] == d[i - 1][j] + 1) {
      out.ops.push_back({EditOp::kDelete, i - 1, -1});
      --i;
    } else {
      out.ops.push_back({EditOp::kInsert, -1, j - 1});
      --j;
    }
  }
  std::reverse(out.ops.begin(), out.ops.end());
  return out;
}

std::optional<double> BucketCounts::rate() const {
  if (ref_words == 0) return std::nullopt;
  return static_cast<double>(errors()) / static_cast<double>(ref_words);
}

namespace {

nlohmann::ordered_json bucket_json(const BucketCounts& b) {
  nlohmann::ordered_json j;
  auto r = b.rate();
  if (r) {
    j["rate"] = *r;
  } else {
    j["rate"] = nullptr;
  }
  j["errors"] = b.errors();
  j["sub"] = b.sub;
  j["ins"] = b.ins;
  j["del"] = b.del;
  j["ref_words"] = b.ref_words;
  return j;
}

std::string rate_or_na(const BucketCounts& b) {
  auto r = b.rate();
  if (!r) return "NA";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", *r);
  return buf;
}

}  // namespace

nlohmann::ordered_json EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["wer"] = bucket_json(wer);
  j["bwer"] = bucket_json(bwer);
  j["uwer"] = bucket_json(uwer);
  return j;
}

std::string EvalReport::to_tsv() const {
  std::string out =
      "wer\tbwer\tuwer\twer_errors\twer_ref\tbwer_sub\tbwer_ins\tbwer_del\t"
      "bwer_ref\tuwer_sub\tuwer_ins\tuwer_del\tuwer_ref\n";
  out += rate_or_na(wer) + '\t' + rate_or_na(bwer) + '\t' + rate_or_na(uwer);
  for (long long v :
       {wer.errors(), wer.ref_words, bwer.sub, bwer.ins, bwer.del,
        bwer.ref_words, uwer.sub, uwer.ins, uwer.del, uwer.ref_words}) {
    out += '\t' + std::to_string(v);
  }
  out += '\n';
  return out;
}

EvalReport evaluate(
    const std::vector<std::vector<std::string>>& refs,
    const std::vector<std::vector<std::string>>& hyps,
    const std::vector<std::unordered_set<std::string>>& bias_lists) {
  if (refs.size() != hyps.size() || refs.size() != bias_lists.size()) {
    throw InputError("evaluate: got " + std::to_string(refs.size()) +
                     " refs, " + std::to_string(hyps.size()) + " hyps, " +
                     std::to_string(bias_lists.size()) + " bias lists");
  }
  EvalReport rep;
  for (size_t u = 0; u < refs.size(); ++u) {
    const auto& ref = refs[u];
    const auto& hyp = hyps[u];
    const auto& bias = bias_lists[u];
    auto in_bias = [&](const std::string& w) { return bias.count(w) > 0; };

    for (const std::string& w : ref) {
      ++rep.wer.ref_words;
      ++(in_bias(w) ? rep.bwer : rep.uwer).ref_words;
    }
    AlignedPair a = align(ref, hyp);
    for (const AlignedOp& op : a.ops) {
      switch (op.op) {
        case EditOp::kMatch:
          break;
        case EditOp::kSubstitute:
          ++rep.wer.sub;
          ++(in_bias(ref[op.ref_index]) ? rep.bwer : rep.uwer).sub;
          break;
        case EditOp::kDelete:
          ++rep.wer.del;
          ++(in_bias(ref[op.ref_index]) ? rep.bwer : rep.uwer).del;
          break;
        case EditOp::kInsert:
          ++rep.wer.ins;
          ++(in_bias(hyp[op.hyp_index]) ? rep.bwer : rep.uwer).ins;
          break;
      }
    }
  }
  return rep;
}

}  // namespace biasdec
