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

#include "biasdec/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <thread>

#include "json.hpp"

#include "biasdec/bias_trie.hpp"
#include "biasdec/errors.hpp"
#include "biasdec/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace biasdec {

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open file '" + path + "'");
  std::string data((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return data;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw InputError("failed writing '" + path + "'");
}

// Calls fn(line_number, line) for every non-blank line.
void for_each_line(const std::string& path,
                   const std::function<void(int, const std::string&)>& fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open file '" + path + "'");
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    bool blank = line.find_first_not_of(" \t") == std::string::npos;
    if (blank) continue;
    fn(lineno, line);
  }
}

json parse_json_line(const std::string& path, int lineno,
                     const std::string& line) {
  try {
    return json::parse(line);
  } catch (const json::exception& e) {
    throw FormatError(path + " line " + std::to_string(lineno) + ": " +
                      e.what());
  }
}

[[noreturn]] void rethrow_with_context(const std::string& context) {
  auto wrap = [&](const char* what) { return context + ": " + what; };
  try {
    throw;
  } catch (const FormatError& e) {
    throw FormatError(wrap(e.what()));
  } catch (const ConfigError& e) {
    throw ConfigError(wrap(e.what()));
  } catch (const TokenizeError& e) {
    throw TokenizeError(wrap(e.what()));
  } catch (const InputError& e) {
    throw InputError(wrap(e.what()));
  } catch (const ModelError& e) {
    throw ModelError(wrap(e.what()));
  } catch (const std::exception& e) {
    throw Error(wrap(e.what()));
  }
}

// Deterministic regardless of jobs: workers pull indices from a counter
// and write into per-index slots; the caller consumes slots in order.
void parallel_for(int n, int jobs, const std::function<void(int)>& fn) {
  jobs = std::max(1, std::min(jobs, n));
  if (jobs <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(static_cast<size_t>(jobs));
  std::vector<std::thread> workers;
  workers.reserve(static_cast<size_t>(jobs));
  for (int w = 0; w < jobs; ++w) {
    workers.emplace_back([&, w] {
      try {
        for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
      } catch (...) {
        errors[static_cast<size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& t : workers) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::string resolve_path(const fs::path& base_dir, const std::string& value) {
  fs::path p(value);
  if (p.is_absolute()) return p.lexically_normal().string();
  return (base_dir / p).lexically_normal().string();
}

std::string get_string_field(const json& j, const char* key,
                             const std::string& where) {
  const auto& v = j.at(key);
  if (!v.is_string())
    throw ConfigError(where + ": '" + key + "' must be a string");
  return v.get<std::string>();
}

std::string rate_or_na(const std::optional<double>& rate, const char* fmt) {
  if (!rate) return "NA";
  char buf[64];
  snprintf(buf, sizeof(buf), fmt, *rate);
  return buf;
}

std::string format_double(double v, const char* fmt) {
  char buf[64];
  snprintf(buf, sizeof(buf), fmt, v);
  return buf;
}

std::unordered_set<std::string> normalized_set(
    const std::vector<std::string>& words) {
  std::unordered_set<std::string> out;
  for (const auto& w : words)
    for (const auto& n : normalize_text(w)) out.insert(n);
  return out;
}

std::string sanitize_id(const std::string& id) {
  std::string out = id;
  for (char& c : out) {
    bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
              (c >= '0' && c <= '9') || c == '.' || c == '_' || c == '-';
    if (!ok) c = '_';
  }
  return out;
}

std::string hyps_to_jsonl(const std::vector<UttResult>& results) {
  std::string out;
  for (const auto& r : results) {
    ordered_json rec;
    rec["id"] = r.id;
    rec["hyp"] = r.hyp_text;
    rec["base_lp"] = r.result.base_lp;
    rec["biased_score"] = r.result.biased_score;
    rec["scorer_calls"] = r.result.scorer_calls;
    json completed = json::array();
    for (const auto& c : r.result.completed_bias_words)
      completed.push_back(json::array({c.word, c.end_pos}));
    rec["completed_bias_words"] = completed;
    out += rec.dump();
    out += '\n';
  }
  return out;
}

std::string trace_to_csv(const std::vector<StepTraceRow>& rows) {
  std::string out = "step,candidate,base_lp,reward,gate_result,revoked\n";
  char buf[192];
  for (const auto& r : rows) {
    snprintf(buf, sizeof(buf), "%d,%d,%.9f,%.9f,%d,%.9f\n", r.step,
             r.candidate, r.base_lp, r.reward, r.gate_result, r.revoked);
    out += buf;
  }
  return out;
}

void write_traces(const std::vector<UttResult>& results,
                  const fs::path& out_dir) {
  fs::path trace_dir = out_dir / "trace";
  fs::create_directories(trace_dir);
  for (const auto& r : results)
    write_file((trace_dir / (sanitize_id(r.id) + ".csv")).string(),
               trace_to_csv(r.trace));
}

std::unordered_set<std::string> load_common_set(const std::string& path) {
  return normalized_set(load_word_lines(path));
}

std::vector<std::vector<std::string>> load_transcript_words(
    const std::string& path) {
  std::vector<std::vector<std::string>> out;
  for_each_line(path, [&](int, const std::string& line) {
    out.push_back(normalize_text(line));
  });
  return out;
}

// Joins per-utterance bias lists onto refs. Every ref id must be present.
std::vector<std::vector<std::string>> bias_words_for_refs(
    const std::vector<Utterance>& refs,
    const std::vector<UtteranceBiasList>& lists, const std::string& path) {
  std::unordered_map<std::string, const UtteranceBiasList*> by_id;
  for (const auto& l : lists) by_id.emplace(l.id, &l);
  std::vector<std::vector<std::string>> out;
  out.reserve(refs.size());
  std::string missing;
  for (const auto& u : refs) {
    auto it = by_id.find(u.id);
    if (it == by_id.end()) {
      if (!missing.empty()) missing += ", ";
      missing += u.id;
      out.emplace_back();
      continue;
    }
    out.push_back(it->second->full());
  }
  if (!missing.empty())
    throw InputError(path + ": no bias list for ids: " + missing);
  return out;
}

struct LoadedCorpus {
  Vocabulary vocab;
  std::vector<std::pair<std::string, ScenarioModel>> scenarios;
  std::vector<Utterance> refs;
};

LoadedCorpus load_corpus(const ExperimentConfig& cfg) {
  LoadedCorpus c{Vocabulary::load(cfg.vocab),
                 load_scenarios_jsonl(cfg.scenarios),
                 load_refs_jsonl(cfg.refs)};
  return c;
}

// Bias words per utterance for decode/eval: per-utterance lists when
// configured, else the global word list for every utterance, else empty.
std::vector<std::vector<std::string>> select_bias_words(
    const ExperimentConfig& cfg, const std::vector<Utterance>& refs) {
  if (!cfg.bias_lists.empty())
    return bias_words_for_refs(refs, load_bias_lists_jsonl(cfg.bias_lists),
                               cfg.bias_lists);
  if (!cfg.bias_words.empty()) {
    auto words = load_word_lines(cfg.bias_words);
    return std::vector<std::vector<std::string>>(refs.size(), words);
  }
  return std::vector<std::vector<std::string>>(refs.size());
}

EvalReport evaluate_utterances(
    const std::vector<Utterance>& refs, const std::vector<std::string>& hyps,
    const std::vector<std::vector<std::string>>& bias_words_per_utt) {
  std::vector<std::vector<std::string>> ref_words;
  std::vector<std::vector<std::string>> hyp_words;
  std::vector<std::unordered_set<std::string>> bias_sets;
  ref_words.reserve(refs.size());
  hyp_words.reserve(refs.size());
  bias_sets.reserve(refs.size());
  for (size_t i = 0; i < refs.size(); ++i) {
    ref_words.push_back(normalize_text(refs[i].text));
    hyp_words.push_back(normalize_text(hyps[i]));
    bias_sets.push_back(normalized_set(bias_words_per_utt[i]));
  }
  return evaluate(ref_words, hyp_words, bias_sets);
}

std::string bias_lists_to_jsonl(const std::vector<UtteranceBiasList>& lists,
                                int n_requested) {
  std::string out;
  for (const auto& l : lists) {
    out += l.to_json(n_requested).dump();
    out += '\n';
  }
  return out;
}

}  // namespace

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  if (!fs::exists(path))
    throw ConfigError("config file '" + path + "' does not exist");
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError(path + ": config must be an object");

  static const std::vector<std::string> known{
      "vocab",        "scenarios",  "refs",          "bias_words",
      "bias_lists",   "common_words", "train_transcripts", "hyps",
      "decode",       "sweep",      "n_distractors", "seed"};
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw ConfigError(path + ": unknown config key '" + key + "'");
  }

  ExperimentConfig cfg;
  fs::path base = fs::path(path).parent_path();
  try {
    auto path_field = [&](const char* key, bool required) -> std::string {
      if (!j.contains(key)) {
        if (required)
          throw ConfigError(path + ": missing required key '" +
                            std::string(key) + "'");
        return "";
      }
      std::string v = get_string_field(j, key, path);
      if (v.empty())
        throw ConfigError(path + ": '" + std::string(key) + "' is empty");
      return resolve_path(base, v);
    };
    cfg.vocab = path_field("vocab", true);
    cfg.scenarios = path_field("scenarios", true);
    cfg.refs = path_field("refs", true);
    cfg.bias_words = path_field("bias_words", false);
    cfg.bias_lists = path_field("bias_lists", false);
    cfg.common_words = path_field("common_words", false);
    cfg.train_transcripts = path_field("train_transcripts", false);
    cfg.hyps = path_field("hyps", false);

    if (j.contains("decode")) {
      const json& d = j.at("decode");
      if (!d.is_object())
        throw ConfigError(path + ": 'decode' must be an object");
      for (const auto& [key, value] : d.items()) {
        (void)value;
        static const std::vector<std::string> dk{"lambda", "mu",        "k",
                                                 "mode",   "beam_size", "max_len"};
        if (std::find(dk.begin(), dk.end(), key) == dk.end())
          throw ConfigError(path + ": unknown decode key '" + key + "'");
      }
      if (d.contains("lambda")) cfg.decode.lambda = d.at("lambda").get<double>();
      if (d.contains("mu")) cfg.decode.mu = d.at("mu").get<int>();
      if (d.contains("k")) cfg.decode.k = d.at("k").get<int>();
      if (d.contains("beam_size"))
        cfg.decode.beam_size = d.at("beam_size").get<int>();
      if (d.contains("max_len")) cfg.decode.max_len = d.at("max_len").get<int>();
      if (d.contains("mode")) {
        std::string m = get_string_field(d, "mode", path);
        auto mode = bias_mode_from_string(m);
        if (!mode)
          throw ConfigError(path + ": unknown decode mode '" + m + "'");
        cfg.decode.mode = *mode;
      }
    }

    if (j.contains("sweep")) {
      const json& s = j.at("sweep");
      if (!s.is_object())
        throw ConfigError(path + ": 'sweep' must be an object");
      for (const auto& [key, value] : s.items()) {
        (void)value;
        static const std::vector<std::string> sk{"n", "j", "modes"};
        if (std::find(sk.begin(), sk.end(), key) == sk.end())
          throw ConfigError(path + ": unknown sweep key '" + key + "'");
      }
      if (s.contains("n")) {
        cfg.sweep.n = s.at("n").get<std::vector<int>>();
        for (int n : cfg.sweep.n)
          if (n < 0) throw ConfigError(path + ": sweep n values must be >= 0");
      }
      if (s.contains("j")) {
        cfg.sweep.j = s.at("j").get<std::vector<int>>();
        for (int v : cfg.sweep.j)
          if (v < 1) throw ConfigError(path + ": sweep j values must be >= 1");
      }
      if (s.contains("modes")) {
        cfg.sweep.modes.clear();
        for (const auto& m : s.at("modes")) {
          auto mode = bias_mode_from_string(m.get<std::string>());
          if (!mode)
            throw ConfigError(path + ": unknown sweep mode '" +
                              m.get<std::string>() + "'");
          cfg.sweep.modes.push_back(*mode);
        }
      }
      if (cfg.sweep.n.empty() || cfg.sweep.j.empty() ||
          cfg.sweep.modes.empty())
        throw ConfigError(path + ": sweep axes must be non-empty");
    }

    if (j.contains("n_distractors")) {
      cfg.n_distractors = j.at("n_distractors").get<int>();
      if (cfg.n_distractors < 0)
        throw ConfigError(path + ": n_distractors must be >= 0");
    }
    if (j.contains("seed")) cfg.seed = j.at("seed").get<uint64_t>();
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }

  for (const std::string* p :
       {&cfg.vocab, &cfg.scenarios, &cfg.refs, &cfg.bias_words,
        &cfg.bias_lists, &cfg.common_words, &cfg.train_transcripts}) {
    if (!p->empty() && !fs::exists(*p))
      throw ConfigError(path + ": referenced path '" + *p +
                        "' does not exist");
  }
  // cfg.hyps may point at a product of a later step; checked at use.
  return cfg;
}

uint64_t ExperimentConfig::content_hash() const {
  ordered_json j;
  j["vocab"] = vocab;
  j["scenarios"] = scenarios;
  j["refs"] = refs;
  j["bias_words"] = bias_words;
  j["bias_lists"] = bias_lists;
  j["common_words"] = common_words;
  j["train_transcripts"] = train_transcripts;
  j["hyps"] = hyps;
  j["decode"] = {{"lambda", decode.lambda},
                 {"mu", decode.mu},
                 {"k", decode.k},
                 {"mode", std::string(to_string(decode.mode))},
                 {"beam_size", decode.beam_size},
                 {"max_len", decode.max_len}};
  std::vector<std::string> mode_names;
  for (BiasMode m : sweep.modes) mode_names.emplace_back(to_string(m));
  j["sweep"] = {{"n", sweep.n}, {"j", sweep.j}, {"modes", mode_names}};
  j["n_distractors"] = n_distractors;
  j["seed"] = seed;
  return fnv1a64(j.dump());
}

std::vector<Utterance> load_refs_jsonl(const std::string& path) {
  std::vector<Utterance> out;
  std::unordered_set<std::string> seen;
  for_each_line(path, [&](int lineno, const std::string& line) {
    json j = parse_json_line(path, lineno, line);
    std::string where = path + " line " + std::to_string(lineno);
    try {
      Utterance u{j.at("id").get<std::string>(),
                  j.at("text").get<std::string>()};
      if (!seen.insert(u.id).second)
        throw FormatError(where + ": duplicate id '" + u.id + "'");
      out.push_back(std::move(u));
    } catch (const json::exception& e) {
      throw FormatError(where + ": " + e.what());
    }
  });
  return out;
}

std::vector<std::pair<std::string, ScenarioModel>> load_scenarios_jsonl(
    const std::string& path) {
  std::vector<std::pair<std::string, ScenarioModel>> out;
  std::unordered_set<std::string> seen;
  for_each_line(path, [&](int lineno, const std::string& line) {
    json j = parse_json_line(path, lineno, line);
    std::string where = path + " line " + std::to_string(lineno);
    try {
      std::string id = j.at("id").get<std::string>();
      if (!seen.insert(id).second)
        throw FormatError(where + ": duplicate id '" + id + "'");
      out.emplace_back(std::move(id), ScenarioModel::from_json(j.at("scenario")));
    } catch (const json::exception& e) {
      throw FormatError(where + ": " + e.what());
    } catch (const FormatError&) {
      throw;
    } catch (const Error& e) {
      throw FormatError(where + ": " + e.what());
    }
  });
  return out;
}

std::vector<UtteranceBiasList> load_bias_lists_jsonl(const std::string& path) {
  std::vector<UtteranceBiasList> out;
  std::unordered_set<std::string> seen;
  for_each_line(path, [&](int lineno, const std::string& line) {
    json j = parse_json_line(path, lineno, line);
    std::string where = path + " line " + std::to_string(lineno);
    try {
      out.push_back(UtteranceBiasList::from_json(j));
    } catch (const Error& e) {
      throw FormatError(where + ": " + e.what());
    }
    if (!seen.insert(out.back().id).second)
      throw FormatError(where + ": duplicate id '" + out.back().id + "'");
  });
  return out;
}

std::vector<std::string> load_word_lines(const std::string& path) {
  std::vector<std::string> out;
  for_each_line(path, [&](int, const std::string& line) {
    size_t b = line.find_first_not_of(" \t");
    size_t e = line.find_last_not_of(" \t");
    out.push_back(line.substr(b, e - b + 1));
  });
  return out;
}

std::vector<HypRecord> load_hyps_jsonl(const std::string& path) {
  std::vector<HypRecord> out;
  std::unordered_set<std::string> seen;
  for_each_line(path, [&](int lineno, const std::string& line) {
    json j = parse_json_line(path, lineno, line);
    std::string where = path + " line " + std::to_string(lineno);
    try {
      HypRecord r;
      r.id = j.at("id").get<std::string>();
      r.hyp = j.at("hyp").get<std::string>();
      r.base_lp = j.at("base_lp").get<double>();
      r.biased_score = j.at("biased_score").get<double>();
      r.scorer_calls = j.at("scorer_calls").get<int>();
      for (const auto& c : j.at("completed_bias_words")) {
        if (!c.is_array() || c.size() != 2)
          throw FormatError(where + ": completed_bias_words entries must be "
                            "[word, end_pos] pairs");
        r.completed_bias_words.push_back(
            {c.at(0).get<int>(), c.at(1).get<int>()});
      }
      if (!seen.insert(r.id).second)
        throw FormatError(where + ": duplicate id '" + r.id + "'");
      out.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw FormatError(where + ": " + e.what());
    }
  });
  return out;
}

std::vector<UttResult> decode_corpus(
    const Vocabulary& vocab,
    const std::vector<std::pair<std::string, ScenarioModel>>& scenarios,
    const std::vector<Utterance>& refs,
    const std::vector<std::vector<std::string>>& bias_words_per_utt,
    const BiasConfig& cfg, int jobs, bool want_trace) {
  if (bias_words_per_utt.size() != refs.size())
    throw InputError("bias word lists and references differ in count");
  std::unordered_map<std::string, const ScenarioModel*> by_id;
  for (const auto& [id, model] : scenarios) by_id.emplace(id, &model);
  std::string missing;
  for (const auto& u : refs) {
    if (by_id.count(u.id)) continue;
    if (!missing.empty()) missing += ", ";
    missing += u.id;
  }
  if (!missing.empty())
    throw InputError("no scenario for ids: " + missing);

  SpecialTokens specials{vocab.bos_id(), vocab.eos_id()};
  std::vector<UttResult> results(refs.size());
  parallel_for(static_cast<int>(refs.size()), jobs, [&](int i) {
    const Utterance& u = refs[static_cast<size_t>(i)];
    try {
      const ScenarioModel& model = *by_id.at(u.id);
      validate(cfg, model);
      BiasTrie trie =
          BiasTrie::build(vocab, bias_words_per_utt[static_cast<size_t>(i)]);
      UttResult r;
      r.id = u.id;
      r.bias_words = bias_words_per_utt[static_cast<size_t>(i)];
      std::vector<StepTraceRow>* trace = want_trace ? &r.trace : nullptr;
      r.result = cfg.beam_size == 1
                     ? greedy_decode(model, trie, specials, cfg, trace)
                     : beam_decode(model, trie, specials, cfg, trace);
      r.hyp_text = vocab.detokenize(r.result.tokens);
      results[static_cast<size_t>(i)] = std::move(r);
    } catch (...) {
      rethrow_with_context("utterance '" + u.id + "'");
    }
  });
  return results;
}

int run_build_trie(const ExperimentConfig& cfg, const RunOptions& opt) {
  Vocabulary vocab = Vocabulary::load(cfg.vocab);
  std::vector<std::string> words;
  if (!cfg.bias_words.empty()) {
    words = load_word_lines(cfg.bias_words);
  } else if (!cfg.bias_lists.empty()) {
    std::unordered_set<std::string> seen;
    for (const auto& l : load_bias_lists_jsonl(cfg.bias_lists))
      for (const auto& w : l.full())
        if (seen.insert(w).second) words.push_back(w);
  } else {
    throw ConfigError("build-trie needs 'bias_words' or 'bias_lists'");
  }
  BiasTrie trie = BiasTrie::build(vocab, words);
  fs::create_directories(opt.out_dir);
  fs::path out = fs::path(opt.out_dir) / "trie.csv";
  std::ofstream os(out, std::ios::binary);
  if (!os) throw InputError("cannot open '" + out.string() + "' for writing");
  trie.write_debug_csv(os);
  printf("trie: %d nodes, %d terminals over %zu words -> %s\n",
         trie.node_count(), trie.terminal_count(), words.size(),
         out.string().c_str());
  return 0;
}

int run_gen_biaslist(const ExperimentConfig& cfg, const RunOptions& opt) {
  if (cfg.common_words.empty() || cfg.train_transcripts.empty())
    throw ConfigError(
        "gen-biaslist needs 'common_words' and 'train_transcripts'");
  auto refs = load_refs_jsonl(cfg.refs);
  auto common = load_common_set(cfg.common_words);
  RareWordPool pool =
      extract_rare(load_transcript_words(cfg.train_transcripts), common,
                   "train");
  printf("rare pool: %zu words (source=%s)\n", pool.words.size(),
         pool.source.c_str());

  uint64_t seed = opt.effective_seed(cfg);
  std::vector<UtteranceBiasList> lists;
  lists.reserve(refs.size());
  for (const auto& u : refs)
    lists.push_back(make_bias_list(u.id, normalize_text(u.text), pool, common,
                                   cfg.n_distractors, seed));
  fs::create_directories(opt.out_dir);
  fs::path out = fs::path(opt.out_dir) / "bias_lists.jsonl";
  write_file(out.string(), bias_lists_to_jsonl(lists, cfg.n_distractors));
  printf("wrote %zu bias lists -> %s\n", lists.size(), out.string().c_str());
  return 0;
}

int run_decode(const ExperimentConfig& cfg, const RunOptions& opt) {
  LoadedCorpus corpus = load_corpus(cfg);
  auto bias_words = select_bias_words(cfg, corpus.refs);
  auto results = decode_corpus(corpus.vocab, corpus.scenarios, corpus.refs,
                               bias_words, cfg.decode, opt.jobs, opt.trace);
  fs::create_directories(opt.out_dir);
  fs::path out = fs::path(opt.out_dir) / "hyps.jsonl";
  write_file(out.string(), hyps_to_jsonl(results));
  if (opt.trace) write_traces(results, opt.out_dir);
  printf("decoded %zu utterances -> %s\n", results.size(),
         out.string().c_str());
  return 0;
}

int run_eval(const ExperimentConfig& cfg, const RunOptions& opt) {
  auto refs = load_refs_jsonl(cfg.refs);
  std::string hyps_path = cfg.hyps.empty()
                              ? (fs::path(opt.out_dir) / "hyps.jsonl").string()
                              : cfg.hyps;
  if (!fs::exists(hyps_path))
    throw InputError("no hypotheses at '" + hyps_path +
                     "'; run decode first or set 'hyps' in the config");
  auto hyp_records = load_hyps_jsonl(hyps_path);

  std::unordered_map<std::string, const HypRecord*> by_id;
  for (const auto& h : hyp_records) by_id.emplace(h.id, &h);
  std::string missing;
  std::vector<std::string> hyps;
  hyps.reserve(refs.size());
  for (const auto& u : refs) {
    auto it = by_id.find(u.id);
    if (it == by_id.end()) {
      if (!missing.empty()) missing += ", ";
      missing += u.id;
      hyps.emplace_back();
      continue;
    }
    hyps.push_back(it->second->hyp);
  }
  if (!missing.empty())
    throw InputError(hyps_path + ": no hypothesis for ids: " + missing);
  if (hyp_records.size() != refs.size()) {
    std::unordered_set<std::string> ref_ids;
    for (const auto& u : refs) ref_ids.insert(u.id);
    std::string extra;
    for (const auto& h : hyp_records) {
      if (ref_ids.count(h.id)) continue;
      if (!extra.empty()) extra += ", ";
      extra += h.id;
    }
    throw InputError(hyps_path + ": hypotheses for unknown ids: " + extra);
  }

  auto bias_words = select_bias_words(cfg, refs);
  EvalReport report = evaluate_utterances(refs, hyps, bias_words);
  fs::create_directories(opt.out_dir);
  write_file((fs::path(opt.out_dir) / "report.json").string(),
             report.to_json().dump(2) + "\n");
  write_file((fs::path(opt.out_dir) / "report.tsv").string(),
             report.to_tsv());
  printf("wer %s  bwer %s  uwer %s\n",
         rate_or_na(report.wer.rate(), "%.6f").c_str(),
         rate_or_na(report.bwer.rate(), "%.6f").c_str(),
         rate_or_na(report.uwer.rate(), "%.6f").c_str());
  return 0;
}

std::string sweep_csv(const std::vector<SweepCellResult>& cells) {
  std::string out = "mode,n,j,wer,bwer,uwer,mean_scorer_calls,delta_c\n";
  for (const auto& c : cells) {
    out += to_string(c.mode);
    out += ',';
    out += std::to_string(c.n);
    out += ',';
    out += std::to_string(c.j);
    if (c.failed) {
      out += ",,,,,\n";
      continue;
    }
    out += ',';
    out += rate_or_na(c.report.wer.rate(), "%.6f");
    out += ',';
    out += rate_or_na(c.report.bwer.rate(), "%.6f");
    out += ',';
    out += rate_or_na(c.report.uwer.rate(), "%.6f");
    out += ',';
    out += format_double(c.mean_scorer_calls, "%.4f");
    out += ',';
    out += format_double(c.delta_c, "%.6f");
    out += '\n';
  }
  return out;
}

int run_sweep(const ExperimentConfig& cfg, const RunOptions& opt) {
  if (cfg.common_words.empty() || cfg.train_transcripts.empty())
    throw ConfigError("sweep needs 'common_words' and 'train_transcripts'");
  LoadedCorpus corpus = load_corpus(cfg);
  auto common = load_common_set(cfg.common_words);
  RareWordPool pool =
      extract_rare(load_transcript_words(cfg.train_transcripts), common,
                   "train");
  uint64_t seed = opt.effective_seed(cfg);
  fs::path out_dir(opt.out_dir);
  fs::create_directories(out_dir);

  auto wall_start = std::chrono::steady_clock::now();

  // Cost baseline: unbiased greedy decoding, independent of every sweep
  // axis, so one run serves the whole table.
  BiasConfig baseline_cfg = cfg.decode;
  baseline_cfg.mode = BiasMode::kNone;
  baseline_cfg.beam_size = 1;
  std::vector<std::vector<std::string>> no_bias(corpus.refs.size());
  auto baseline_runs =
      decode_corpus(corpus.vocab, corpus.scenarios, corpus.refs, no_bias,
                    baseline_cfg, opt.jobs, false);
  std::vector<DecodeResult> baseline_results;
  baseline_results.reserve(baseline_runs.size());
  for (const auto& r : baseline_runs) baseline_results.push_back(r.result);

  // Per-N bias lists are shared by every (mode, j) cell.
  std::unordered_map<int, std::vector<UtteranceBiasList>> lists_by_n;
  for (int n : cfg.sweep.n) {
    if (lists_by_n.count(n)) continue;
    std::vector<UtteranceBiasList> lists;
    lists.reserve(corpus.refs.size());
    for (const auto& u : corpus.refs)
      lists.push_back(make_bias_list(u.id, normalize_text(u.text), pool,
                                     common, n, seed));
    write_file((out_dir / ("bias_lists_n" + std::to_string(n) + ".jsonl"))
                   .string(),
               bias_lists_to_jsonl(lists, n));
    lists_by_n.emplace(n, std::move(lists));
  }

  std::vector<SweepCellResult> cells;
  for (BiasMode mode : cfg.sweep.modes) {
    for (int n : cfg.sweep.n) {
      for (int j : cfg.sweep.j) {
        SweepCellResult cell;
        cell.mode = mode;
        cell.n = n;
        cell.j = j;
        auto cell_start = std::chrono::steady_clock::now();
        try {
          BiasConfig c = cfg.decode;
          c.mode = mode;
          c.beam_size = j;
          const auto& lists = lists_by_n.at(n);
          std::vector<std::vector<std::string>> bias_words;
          bias_words.reserve(lists.size());
          for (const auto& l : lists) bias_words.push_back(l.full());
          auto results = decode_corpus(corpus.vocab, corpus.scenarios,
                                       corpus.refs, bias_words, c, opt.jobs,
                                       false);
          std::vector<std::string> hyps;
          std::vector<DecodeResult> decode_results;
          hyps.reserve(results.size());
          decode_results.reserve(results.size());
          long long total_calls = 0;
          for (const auto& r : results) {
            hyps.push_back(r.hyp_text);
            decode_results.push_back(r.result);
            total_calls += r.result.scorer_calls;
          }
          cell.report = evaluate_utterances(corpus.refs, hyps, bias_words);
          cell.mean_scorer_calls = static_cast<double>(total_calls) /
                                   static_cast<double>(results.size());
          cell.delta_c = cost_delta(decode_results, baseline_results);

          char cell_name[96];
          snprintf(cell_name, sizeof(cell_name), "%s_n%d_j%d",
                   std::string(to_string(mode)).c_str(), n, j);
          fs::path cell_dir = out_dir / "cells" / cell_name;
          fs::create_directories(cell_dir);
          write_file((cell_dir / "hyps.jsonl").string(),
                     hyps_to_jsonl(results));
          write_file((cell_dir / "report.json").string(),
                     cell.report.to_json().dump(2) + "\n");
          write_file((cell_dir / "report.tsv").string(),
                     cell.report.to_tsv());
        } catch (const Error& e) {
          cell.failed = true;
          cell.error = e.what();
          fprintf(stderr, "cell %s n=%d j=%d failed: %s\n",
                  std::string(to_string(mode)).c_str(), n, j, e.what());
        }
        cell.wall_ms = std::chrono::duration<double, std::milli>(
                           std::chrono::steady_clock::now() - cell_start)
                           .count();
        cells.push_back(std::move(cell));
      }
    }
  }

  write_file((out_dir / "sweep.csv").string(), sweep_csv(cells));

  long long baseline_calls = 0;
  for (const auto& r : baseline_results) baseline_calls += r.scorer_calls;
  ordered_json record;
  char hash_hex[32];
  snprintf(hash_hex, sizeof(hash_hex), "%016" PRIx64, cfg.content_hash());
  record["config_hash"] = hash_hex;
  record["seed"] = seed;
  record["baseline_scorer_calls"] = baseline_calls;
  record["cells"] = json::array();
  for (const auto& c : cells) {
    ordered_json jc;
    jc["mode"] = std::string(to_string(c.mode));
    jc["n"] = c.n;
    jc["j"] = c.j;
    jc["failed"] = c.failed;
    if (c.failed) {
      jc["error"] = c.error;
    } else {
      jc["report"] = c.report.to_json();
      jc["mean_scorer_calls"] = c.mean_scorer_calls;
      jc["delta_c"] = c.delta_c;
    }
    jc["wall_ms"] = c.wall_ms;
    record["cells"].push_back(jc);
  }
  record["wall_ms_total"] = std::chrono::duration<double, std::milli>(
                                std::chrono::steady_clock::now() - wall_start)
                                .count();
  write_file((out_dir / "run_record.json").string(), record.dump(2) + "\n");

  int failed = 0;
  for (const auto& c : cells) failed += c.failed ? 1 : 0;
  printf("sweep: %zu cells (%d failed) -> %s\n", cells.size(), failed,
         (out_dir / "sweep.csv").string().c_str());
  return 0;
}

}  // namespace biasdec
