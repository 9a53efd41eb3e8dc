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

// Experiment harness: config loading, corpus IO, and the drivers behind
// the CLI subcommands. Kept in the library so tests can call the exact
// code paths the binary runs.

#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "biasdec/bias_list.hpp"
#include "biasdec/decode.hpp"
#include "biasdec/metrics.hpp"
#include "biasdec/scorer.hpp"
#include "biasdec/vocab.hpp"

namespace biasdec {

struct Utterance {
  std::string id;
  std::string text;
};

struct SweepAxes {
  std::vector<int> n{10, 50, 100};
  std::vector<int> j{1};
  std::vector<BiasMode> modes{BiasMode::kNaive, BiasMode::kKStep};
};

// Config file: single JSON object. Paths are resolved relative to the
// config file's directory and must exist when set. Optional paths are
// empty strings when absent.
//
//   {
//     "vocab": "vocab.txt",              required
//     "scenarios": "scenarios.jsonl",    required, {"id", "scenario"} lines
//     "refs": "refs.jsonl",              required, {"id", "text"} lines
//     "bias_words": "bias_words.txt",    optional, one word per line
//     "bias_lists": "bias_lists.jsonl",  optional, per-utterance lists
//     "common_words": "common.txt",      optional, one word per line
//     "train_transcripts": "train.txt",  optional, one transcript per line
//     "hyps": "hyps.jsonl",              optional, eval input override
//     "decode": {"lambda": 3.0, "mu": 10, "k": 2, "mode": "kstep",
//                "beam_size": 1, "max_len": 64},
//     "sweep": {"n": [10,50,100], "j": [1], "modes": ["naive","kstep"]},
//     "n_distractors": 100,
//     "seed": 7
//   }
//
// Unknown keys are rejected so typos cannot silently fall back to
// defaults.
struct ExperimentConfig {
  std::string vocab;
  std::string scenarios;
  std::string refs;
  std::string bias_words;
  std::string bias_lists;
  std::string common_words;
  std::string train_transcripts;
  std::string hyps;
  BiasConfig decode;
  SweepAxes sweep;
  int n_distractors = 100;
  uint64_t seed = 0;

  static ExperimentConfig load(const std::string& path);
  // Canonical serialization hash, recorded in run_record.json.
  uint64_t content_hash() const;
};

struct RunOptions {
  std::string out_dir = "out";
  int jobs = 1;
  bool trace = false;
  std::optional<uint64_t> seed_override;  // --seed beats config.seed

  uint64_t effective_seed(const ExperimentConfig& cfg) const {
    return seed_override ? *seed_override : cfg.seed;
  }
};

// Corpus IO. All throw FormatError naming path and line on bad input.
std::vector<Utterance> load_refs_jsonl(const std::string& path);
std::vector<std::pair<std::string, ScenarioModel>> load_scenarios_jsonl(
    const std::string& path);
std::vector<UtteranceBiasList> load_bias_lists_jsonl(const std::string& path);
// One entry per non-blank line, surrounding whitespace trimmed.
std::vector<std::string> load_word_lines(const std::string& path);

struct HypRecord {
  std::string id;
  std::string hyp;
  double base_lp = 0.0;
  double biased_score = 0.0;
  int scorer_calls = 0;
  std::vector<CompletedWord> completed_bias_words;
};
std::vector<HypRecord> load_hyps_jsonl(const std::string& path);

// One decoded utterance. `bias_words` is the verbatim word list the trie
// was built from (also used for metrics membership after normalization).
struct UttResult {
  std::string id;
  DecodeResult result;
  std::string hyp_text;
  std::vector<std::string> bias_words;
  std::vector<StepTraceRow> trace;
};

// Decodes refs[i] against the scenario with the same id, biasing each
// utterance with bias_words_per_utt[i]. Parallel over utterances when
// jobs > 1; output order and content are independent of jobs. Errors carry
// the utterance id.
std::vector<UttResult> decode_corpus(
    const Vocabulary& vocab,
    const std::vector<std::pair<std::string, ScenarioModel>>& scenarios,
    const std::vector<Utterance>& refs,
    const std::vector<std::vector<std::string>>& bias_words_per_utt,
    const BiasConfig& cfg, int jobs, bool want_trace);

// Subcommand drivers. Return the process exit code (0 on success); all
// validation problems throw ConfigError/FormatError/InputError instead of
// encoding failure in the return value.
int run_build_trie(const ExperimentConfig& cfg, const RunOptions& opt);
int run_gen_biaslist(const ExperimentConfig& cfg, const RunOptions& opt);
int run_decode(const ExperimentConfig& cfg, const RunOptions& opt);
int run_eval(const ExperimentConfig& cfg, const RunOptions& opt);
int run_sweep(const ExperimentConfig& cfg, const RunOptions& opt);

// Sweep internals, exposed for tests.
struct SweepCellResult {
  BiasMode mode = BiasMode::kNone;
  int n = 0;
  int j = 1;
  bool failed = false;
  std::string error;
  EvalReport report;
  double mean_scorer_calls = 0.0;
  double delta_c = 0.0;
  double wall_ms = 0.0;
};

// CSV row order is modes outer, then n, then j. Failed cells keep their
// axis columns and leave every metric column empty.
std::string sweep_csv(const std::vector<SweepCellResult>& cells);

}  // namespace biasdec
