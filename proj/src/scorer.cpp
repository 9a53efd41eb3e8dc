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

#include "biasdec/scorer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "biasdec/errors.hpp"

namespace biasdec {

namespace {

constexpr double kNormTolerance = 1e-6;

double logsumexp(const std::vector<double>& v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double acc = 0.0;
  for (double x : v) acc += std::exp(x - m);
  return m + std::log(acc);
}

void validate_vector(const std::vector<double>& v, int vocab_size,
                     const std::string& what, const std::string& where) {
  if (static_cast<int>(v.size()) != vocab_size) {
    throw ModelError(where + ": " + what + " has " +
                     std::to_string(v.size()) + " entries, expected " +
                     std::to_string(vocab_size));
  }
  for (double x : v) {
    if (std::isnan(x) || x == std::numeric_limits<double>::infinity()) {
      throw ModelError(where + ": " + what + " contains a non-finite score");
    }
  }
  double lse = logsumexp(v);
  if (!(std::abs(lse) <= kNormTolerance)) {
    std::ostringstream os;
    os << where << ": " << what << " is not normalized (logsumexp = " << lse
       << ")";
    throw ModelError(os.str());
  }
}

}  // namespace

std::string format_prefix(const TokenSeq& prefix) {
  std::string out = "[";
  for (size_t i = 0; i < prefix.size(); ++i) {
    if (i) out += ' ';
    out += std::to_string(prefix[i]);
  }
  out += ']';
  return out;
}

std::vector<int> topk(std::span<const double> scores, int mu) {
  const int v = static_cast<int>(scores.size());
  if (mu < 1 || mu > v) {
    throw ConfigError("mu = " + std::to_string(mu) +
                      " out of range 1.." + std::to_string(v));
  }
  std::vector<int> ids(scores.size());
  std::iota(ids.begin(), ids.end(), 0);
  std::partial_sort(ids.begin(), ids.begin() + mu, ids.end(),
                    [&](int a, int b) {
                      if (scores[a] != scores[b]) return scores[a] > scores[b];
                      return a < b;
                    });
  ids.resize(mu);
  return ids;
}

void validate_step_scores(const StepScores& s, int vocab_size, int k,
                          const std::string& where) {
  if (static_cast<int>(s.future.size()) != k - 1) {
    throw ModelError(where + ": expected " + std::to_string(k - 1) +
                     " future vectors, got " + std::to_string(s.future.size()));
  }
  validate_vector(s.next, vocab_size, "next", where);
  for (size_t j = 0; j < s.future.size(); ++j) {
    validate_vector(s.future[j], vocab_size,
                    "future[" + std::to_string(j) + "]", where);
  }
}

StepScores uniform_scores(int vocab_size, int k) {
  StepScores s;
  s.next.assign(vocab_size, -std::log(static_cast<double>(vocab_size)));
  s.future.assign(k - 1, s.next);
  return s;
}

size_t ScenarioModel::TokenSeqHash::operator()(const TokenSeq& s) const {
  uint64_t h = 0xcbf29ce484222325ull;
  for (int t : s) {
    h ^= static_cast<uint64_t>(static_cast<uint32_t>(t));
    h *= 0x100000001b3ull;
  }
  return static_cast<size_t>(h);
}

ScenarioModel::ScenarioModel(int vocab_size, int k, Fallback fallback)
    : vocab_size_(vocab_size), k_(k), fallback_(fallback) {
  if (vocab_size_ < 2) {
    throw ConfigError("scenario vocab_size must be >= 2, got " +
                      std::to_string(vocab_size_));
  }
  if (k_ < 1) {
    throw ConfigError("scenario K must be >= 1, got " + std::to_string(k_));
  }
}

void ScenarioModel::add_entry(TokenSeq prefix, StepScores scores) {
  for (int t : prefix) {
    if (t < 0 || t >= vocab_size_) {
      throw ModelError("prefix " + format_prefix(prefix) +
                       " contains out-of-range token " + std::to_string(t));
    }
  }
  validate_step_scores(scores, vocab_size_, k_,
                       "prefix " + format_prefix(prefix));
  auto [it, added] = index_.emplace(prefix, static_cast<int>(entries_.size()));
  if (!added) {
    throw ModelError("duplicate entry for prefix " + format_prefix(prefix));
  }
  entries_.emplace_back(std::move(prefix), std::move(scores));
}

StepScores ScenarioModel::score(const TokenSeq& prefix) const {
  auto it = index_.find(prefix);
  if (it != index_.end()) return entries_[it->second].second;
  if (fallback_ == Fallback::kUniform) return uniform_scores(vocab_size_, k_);
  throw ModelError("no entry for prefix " + format_prefix(prefix) +
                   " and fallback is 'error'");
}

ScenarioModel ScenarioModel::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw FormatError("scenario: expected a JSON object");
  for (const char* key : {"vocab_size", "K", "entries", "fallback"}) {
    if (!j.contains(key)) {
      throw FormatError(std::string("scenario: missing key '") + key + "'");
    }
  }
  std::string fb = j.at("fallback").get<std::string>();
  Fallback fallback;
  if (fb == "error") {
    fallback = Fallback::kError;
  } else if (fb == "uniform") {
    fallback = Fallback::kUniform;
  } else {
    throw FormatError("scenario: unknown fallback '" + fb + "'");
  }
  ScenarioModel model(j.at("vocab_size").get<int>(), j.at("K").get<int>(),
                      fallback);
  for (const auto& entry : j.at("entries")) {
    StepScores s;
    s.next = entry.at("next").get<std::vector<double>>();
    if (entry.contains("future")) {
      s.future = entry.at("future").get<std::vector<std::vector<double>>>();
    }
    model.add_entry(entry.at("prefix").get<TokenSeq>(), std::move(s));
  }
  return model;
}

ScenarioModel ScenarioModel::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open scenario file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
  try {
    return from_json(j);
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  } catch (const ModelError& e) {
    throw ModelError(path + ": " + e.what());
  }
}

nlohmann::ordered_json ScenarioModel::to_json() const {
  nlohmann::ordered_json j;
  j["vocab_size"] = vocab_size_;
  j["K"] = k_;
  j["fallback"] = fallback_ == Fallback::kError ? "error" : "uniform";
  auto entries = nlohmann::ordered_json::array();
  for (const auto& [prefix, scores] : entries_) {
    nlohmann::ordered_json e;
    e["prefix"] = prefix;
    e["next"] = scores.next;
    e["future"] = scores.future;
    entries.push_back(std::move(e));
  }
  j["entries"] = std::move(entries);
  return j;
}

void ScenarioModel::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write scenario file: " + path);
  out << to_json().dump(2) << '\n';
}

}  // namespace biasdec
