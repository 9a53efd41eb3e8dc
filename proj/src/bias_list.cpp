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

#include "biasdec/bias_list.hpp"

#include <algorithm>

#include "biasdec/errors.hpp"
#include "biasdec/rng.hpp"

namespace biasdec {

RareWordPool extract_rare(
    const std::vector<std::vector<std::string>>& transcripts,
    const std::unordered_set<std::string>& common, std::string source) {
  if (common.empty()) {
    throw ConfigError("extract_rare: the common-word set is empty");
  }
  std::unordered_set<std::string> seen;
  RareWordPool pool;
  pool.source = std::move(source);
  for (const auto& words : transcripts) {
    for (const std::string& w : words) {
      if (common.count(w)) continue;
      if (seen.insert(w).second) pool.words.push_back(w);
    }
  }
  std::sort(pool.words.begin(), pool.words.end());
  return pool;
}

std::vector<std::string> UtteranceBiasList::full() const {
  std::vector<std::string> out = true_rare;
  out.insert(out.end(), distractors.begin(), distractors.end());
  return out;
}

nlohmann::ordered_json UtteranceBiasList::to_json(int n_requested) const {
  nlohmann::ordered_json j;
  j["id"] = id;
  j["bias"] = full();
  j["true_rare"] = true_rare;
  j["n"] = n_requested;
  j["seed"] = seed;
  return j;
}

UtteranceBiasList UtteranceBiasList::from_json(const nlohmann::json& j) {
  UtteranceBiasList out;
  try {
    out.id = j.at("id").get<std::string>();
    auto bias = j.at("bias").get<std::vector<std::string>>();
    out.true_rare = j.at("true_rare").get<std::vector<std::string>>();
    if (j.contains("seed")) out.seed = j.at("seed").get<uint64_t>();
    if (bias.size() < out.true_rare.size() ||
        !std::equal(out.true_rare.begin(), out.true_rare.end(), bias.begin())) {
      throw FormatError("bias list for '" + out.id +
                        "' does not start with its true_rare words");
    }
    out.distractors.assign(bias.begin() + out.true_rare.size(), bias.end());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad bias-list record: ") + e.what());
  }
  return out;
}

UtteranceBiasList make_bias_list(const std::string& utt_id,
                                 const std::vector<std::string>& ref_words,
                                 const RareWordPool& pool,
                                 const std::unordered_set<std::string>& common,
                                 int n_distractors, uint64_t global_seed) {
  if (n_distractors < 0) {
    throw ConfigError("n_distractors must be non-negative");
  }
  UtteranceBiasList out;
  out.id = utt_id;
  out.seed = derive_seed(global_seed, utt_id);

  std::unordered_set<std::string> rare_seen;
  for (const std::string& w : ref_words) {
    if (common.count(w)) continue;
    if (rare_seen.insert(w).second) out.true_rare.push_back(w);
  }

  std::vector<std::string> eligible;
  eligible.reserve(pool.words.size());
  for (const std::string& w : pool.words) {
    if (!rare_seen.count(w)) eligible.push_back(w);
  }

  // Partial Fisher-Yates: draw i only depends on draws 0..i-1, so the list
  // for a smaller n is a prefix of the list for a larger one.
  const size_t want = std::min<size_t>(n_distractors, eligible.size());
  out.truncated = want < static_cast<size_t>(n_distractors);
  SplitMix64 rng(out.seed);
  for (size_t i = 0; i < want; ++i) {
    size_t pick = i + rng.bounded(eligible.size() - i);
    std::swap(eligible[i], eligible[pick]);
    out.distractors.push_back(eligible[i]);
  }
  return out;
}

}  // namespace biasdec
