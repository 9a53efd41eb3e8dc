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

#include <string>
#include <unordered_set>
#include <vector>

#include "json.hpp"

namespace biasdec {

// Rare words of a transcript collection: everything not on the common-word
// list, deduplicated and sorted. Words are normalized forms.
struct RareWordPool {
  std::vector<std::string> words;
  std::string source;
};

RareWordPool extract_rare(const std::vector<std::vector<std::string>>& transcripts,
                          const std::unordered_set<std::string>& common,
                          std::string source = "");

// Per-utterance biasing list: the rare words that truly occur in the
// reference plus n sampled distractors.
struct UtteranceBiasList {
  std::string id;
  std::vector<std::string> true_rare;
  std::vector<std::string> distractors;
  uint64_t seed = 0;       // per-utterance seed the draw used
  bool truncated = false;  // pool ran out before n distractors

  std::vector<std::string> full() const;  // true_rare then distractors

  nlohmann::ordered_json to_json(int n_requested) const;
  static UtteranceBiasList from_json(const nlohmann::json& j);
};

// true_rare = reference words not in `common`, first occurrence order.
// Distractors are drawn without replacement from pool \ true_rare with a
// partial Fisher-Yates shuffle seeded by derive_seed(global_seed, utt_id),
// so the n=10 list is a prefix-consistent subset of the n=100 list.
// n larger than the eligible pool truncates and sets the flag.
UtteranceBiasList make_bias_list(const std::string& utt_id,
                                 const std::vector<std::string>& ref_words,
                                 const RareWordPool& pool,
                                 const std::unordered_set<std::string>& common,
                                 int n_distractors, uint64_t global_seed);

}  // namespace biasdec
