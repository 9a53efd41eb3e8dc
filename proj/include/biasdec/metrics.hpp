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
#include <string>
#include <unordered_set>
#include <vector>

#include "json.hpp"

namespace biasdec {

// Lowercase (ASCII), strip leading/trailing punctuation per word, split on
// whitespace, drop empties.
std::vector<std::string> normalize_text(const std::string& text);

enum class EditOp : uint8_t { kMatch, kSubstitute, kInsert, kDelete };

struct AlignedOp {
  EditOp op;
  int ref_index = -1;  // -1 for insertions
  int hyp_index = -1;  // -1 for deletions
};

struct AlignedPair {
  std::vector<AlignedOp> ops;
  int cost = 0;
};

// Levenshtein word alignment, unit costs. When several alignments are
// minimal the backtrace prefers match > substitute > delete > insert.
AlignedPair align(const std::vector<std::string>& ref,
                  const std::vector<std::string>& hyp);

struct BucketCounts {
  long long sub = 0;
  long long ins = 0;
  long long del = 0;
  long long ref_words = 0;

  long long errors() const { return sub + ins + del; }
  // Empty when ref_words == 0: the rate is undefined, counts still stand.
  std::optional<double> rate() const;
};

// wer covers every word; bwer the words on the utterance's bias list and
// uwer the rest. Substitutions and deletions follow the reference word;
// insertions count against bwer only when the inserted hypothesis word is
// itself on the bias list.
struct EvalReport {
  BucketCounts wer;
  BucketCounts bwer;
  BucketCounts uwer;

  nlohmann::ordered_json to_json() const;
  std::string to_tsv() const;  // header line + one data line
};

// Corpus-level evaluation: error counts aggregate across utterances before
// any division. All three vectors must have equal length.
EvalReport evaluate(
    const std::vector<std::vector<std::string>>& refs,
    const std::vector<std::vector<std::string>>& hyps,
    const std::vector<std::unordered_set<std::string>>& bias_lists);

}  // namespace biasdec
