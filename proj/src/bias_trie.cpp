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

#include "biasdec/bias_trie.hpp"

#include <ostream>

#include "biasdec/errors.hpp"

namespace biasdec {

BiasTrie::BiasTrie() { nodes_.emplace_back(); }

BiasTrie BiasTrie::build(const Vocabulary& vocab,
                         const std::vector<std::string>& words) {
  BiasTrie trie;
  trie.words_ = words;
  for (size_t i = 0; i < words.size(); ++i) {
    std::vector<TokenSeq> forms;
    std::string first_error;
    try {
      forms.push_back(vocab.tokenize(words[i]));
    } catch (const TokenizeError& e) {
      first_error = e.what();
    }
    try {
      TokenSeq marked = vocab.tokenize(" " + words[i]);
      if (forms.empty() || marked != forms.front()) {
        forms.push_back(std::move(marked));
      }
    } catch (const TokenizeError&) {
    }
    if (forms.empty()) {
      throw TokenizeError("bias word '" + words[i] +
                          "' is not tokenizable: " + first_error);
    }
    for (const TokenSeq& form : forms) {
      trie.insert_path(form, static_cast<int>(i));
    }
  }
  return trie;
}

int BiasTrie::insert_path(const TokenSeq& path, int word_index) {
  if (path.empty()) throw ConfigError("cannot insert an empty trie path");
  int node = 0;
  for (int token : path) {
    auto [it, added] = nodes_[node].children.try_emplace(
        token, static_cast<int>(nodes_.size()));
    if (added) {
      nodes_.emplace_back();
      nodes_.back().parent = node;
      nodes_.back().edge_token = token;
    }
    node = it->second;
  }
  if (nodes_[node].terminal_word < 0) {  // duplicates keep the first word
    nodes_[node].terminal_word = word_index;
    ++terminal_count_;
  }
  return node;
}

std::optional<TrieCursor> BiasTrie::advance(TrieCursor from, int token) const {
  if (from.node < 0 || from.node >= node_count()) {
    throw ConfigError("invalid trie cursor node " + std::to_string(from.node));
  }
  const auto& children = nodes_[from.node].children;
  auto it = children.find(token);
  if (it == children.end()) return std::nullopt;
  return TrieCursor{it->second, from.depth + 1};
}

std::optional<int> BiasTrie::is_terminal(TrieCursor c) const {
  if (c.node < 0 || c.node >= node_count()) {
    throw ConfigError("invalid trie cursor node " + std::to_string(c.node));
  }
  int w = nodes_[c.node].terminal_word;
  if (w < 0) return std::nullopt;
  return w;
}

std::vector<int> BiasTrie::continuations(TrieCursor c) const {
  if (c.node < 0 || c.node >= node_count()) {
    throw ConfigError("invalid trie cursor node " + std::to_string(c.node));
  }
  std::vector<int> out;
  out.reserve(nodes_[c.node].children.size());
  for (const auto& [token, child] : nodes_[c.node].children) {
    out.push_back(token);
  }
  return out;
}

const std::map<int, int>& BiasTrie::children(int node) const {
  if (node < 0 || node >= node_count()) {
    throw ConfigError("invalid trie node " + std::to_string(node));
  }
  return nodes_[node].children;
}

bool BiasTrie::indicator_bruteforce(const TokenSeq& y) const {
  for (size_t start = 0; start < y.size(); ++start) {
    int node = 0;
    bool alive = true;
    for (size_t i = start; i < y.size(); ++i) {
      auto it = nodes_[node].children.find(y[i]);
      if (it == nodes_[node].children.end()) {
        alive = false;
        break;
      }
      node = it->second;
    }
    if (alive) return true;
  }
  return false;
}

void BiasTrie::write_debug_csv(std::ostream& os) const {
  os << "node_id,parent_id,edge_token,terminal_word\n";
  for (int id = 0; id < node_count(); ++id) {
    const Node& n = nodes_[id];
    os << id << ',' << n.parent << ',';
    if (n.edge_token >= 0) os << n.edge_token;
    os << ',';
    if (n.terminal_word >= 0 &&
        n.terminal_word < static_cast<int>(words_.size())) {
      os << words_[n.terminal_word];
    } else if (n.terminal_word >= 0) {
      os << n.terminal_word;  // raw-path tries have no word strings
    }
    os << '\n';
  }
}

}  // namespace biasdec
