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

#include <cstdio>
#include <functional>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "biasdec/errors.hpp"
#include "biasdec/experiment.hpp"
#include "biasdec/oracles.hpp"

namespace {

// Exit codes: 0 success, 2 validation problem (bad flags, bad config, bad
// input files), 3 runtime failure (model errors, IO mid-run, oracle
// mismatches).
constexpr int kOk = 0;
constexpr int kValidationError = 2;
constexpr int kRuntimeError = 3;

struct CommonFlags {
  std::string config;
  biasdec::RunOptions opt;
  uint64_t seed_value = 0;
};

void add_common_flags(CLI::App* cmd, CommonFlags* flags, bool need_config) {
  auto* config =
      cmd->add_option("--config", flags->config, "Experiment config JSON");
  if (need_config) config->required();
  cmd->add_option("--out", flags->opt.out_dir, "Output directory")
      ->capture_default_str();
  cmd->add_option("--seed", flags->seed_value,
                  "Override the config's global seed")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--jobs", flags->opt.jobs, "Worker threads")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_flag("--trace", flags->opt.trace,
                "Write per-step decode traces (CSV per utterance)");
}

int run_config_command(
    const CommonFlags& flags, const CLI::App* cmd,
    const std::function<int(const biasdec::ExperimentConfig&,
                            const biasdec::RunOptions&)>& fn) {
  biasdec::ExperimentConfig cfg =
      biasdec::ExperimentConfig::load(flags.config);
  biasdec::RunOptions opt = flags.opt;
  if (cmd->count("--seed")) opt.seed_override = flags.seed_value;
  return fn(cfg, opt);
}

int run_oracle_check(int cases, uint64_t seed) {
  auto suites = biasdec::oracles::run_all_suites(cases, seed);
  int failed = 0;
  for (const auto& s : suites) {
    if (s.passed()) {
      printf("ok   %-22s (%d cases)\n", s.name.c_str(), s.cases);
    } else {
      ++failed;
      printf("FAIL %-22s (%d cases, %d failures) %s\n", s.name.c_str(),
             s.cases, s.failures, s.detail.c_str());
    }
  }
  return failed == 0 ? kOk : kRuntimeError;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Trie-based contextual biasing for autoregressive decoding: "
      "reward shaping, reward revocation, lookahead gating, and a "
      "bias-aware WER harness"};
  app.require_subcommand(1);

  CommonFlags flags;
  int oracle_cases = 100;
  uint64_t oracle_seed = 2026;

  auto* build_trie = app.add_subcommand(
      "build-trie", "Tokenize the bias words and dump the trie as CSV");
  add_common_flags(build_trie, &flags, true);

  auto* gen_biaslist = app.add_subcommand(
      "gen-biaslist",
      "Build per-utterance bias lists: true rare words plus distractors");
  add_common_flags(gen_biaslist, &flags, true);

  auto* decode = app.add_subcommand(
      "decode", "Decode every utterance against its scenario model");
  add_common_flags(decode, &flags, true);

  auto* eval = app.add_subcommand(
      "eval", "Score hypotheses against references (WER, B-WER, U-WER)");
  add_common_flags(eval, &flags, true);

  auto* sweep = app.add_subcommand(
      "sweep", "Run the full (mode, n, j) grid and emit plot-ready CSV");
  add_common_flags(sweep, &flags, true);

  auto* oracle_check = app.add_subcommand(
      "oracle-check", "Cross-check the engine against brute-force oracles");
  oracle_check->add_option("--cases", oracle_cases, "Cases per suite")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  oracle_check->add_option("--seed", oracle_seed, "Suite seed")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kValidationError;
  }

  try {
    if (build_trie->parsed())
      return run_config_command(flags, build_trie, biasdec::run_build_trie);
    if (gen_biaslist->parsed())
      return run_config_command(flags, gen_biaslist,
                                biasdec::run_gen_biaslist);
    if (decode->parsed())
      return run_config_command(flags, decode, biasdec::run_decode);
    if (eval->parsed())
      return run_config_command(flags, eval, biasdec::run_eval);
    if (sweep->parsed())
      return run_config_command(flags, sweep, biasdec::run_sweep);
    if (oracle_check->parsed())
      return run_oracle_check(oracle_cases, oracle_seed);
  } catch (const biasdec::FormatError& e) {
    fprintf(stderr, "error: %s\n", e.what());
    return kValidationError;
  } catch (const biasdec::ConfigError& e) {
    fprintf(stderr, "error: %s\n", e.what());
    return kValidationError;
  } catch (const biasdec::InputError& e) {
    fprintf(stderr, "error: %s\n", e.what());
    return kValidationError;
  } catch (const biasdec::TokenizeError& e) {
    fprintf(stderr, "error: %s\n", e.what());
    return kValidationError;
  } catch (const std::exception& e) {
    fprintf(stderr, "error: %s\n", e.what());
    return kRuntimeError;
  }
  return kOk;
}
