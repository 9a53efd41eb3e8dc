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

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "biasdec/vocab.hpp"

namespace biasdec {

// Position inside the trie. depth counts edges from the root, so the root
// cursor is {0, 0}.
struct TrieCursor {
  int node = 0;
  int depth = 0;
};

// Token-level prefix trie over the tokenizations of a bias word list.
// Matches may start at any position of a decoded sequence, so decoding
// attempts a fresh root traversal at every step.
class BiasTrie {
 public:
  BiasTrie();

  // Tokenizes every word and inserts the result. A word is also inserted
  // in its word-boundary form (leading marker) when that form tokenizes
  // and differs; this is what matches words in the middle of a sentence
  // stream. Duplicate paths keep the first word index. Throws
  // TokenizeError naming the word when no form tokenizes.
  static BiasTrie build(const Vocabulary& vocab,
                        const std::vector<std::string>& words);

  // Raw path insertion, used by build() and by token-level callers that
  // have no Vocabulary. Returns the terminal node id.
  int insert_path(const TokenSeq& path, int word_index);

  std::optional<TrieCursor> advance(TrieCursor from, int token) const;
  std::optional<int> is_terminal(TrieCursor c) const;

  // Child edge labels in ascending token order.
  std::vector<int> continuations(TrieCursor c) const;

  // Reference query for the biasing indicator: true iff some non-empty
  // suffix of y is a (partial or full) root path. Quadratic rescan, kept
  // deliberately separate from the incremental traversal bookkeeping.
  bool indicator_bruteforce(const TokenSeq& y) const;

  int node_count() const { return static_cast<int>(nodes_.size()); }
  int terminal_count() const { return terminal_count_; }
  const std::vector<std::string>& words() const { return words_; }

  // Debug dump, one row per node: node_id,parent_id,edge_token,terminal_word
  void write_debug_csv(std::ostream& os) const;

  const std::map<int, int>& children(int node) const;

 private:
  struct Node {
    std::map<int, int> children;  // token -> node id, ordered
    int terminal_word = -1;
    int parent = -1;
    int edge_token = -1;
  };

  std::vector<Node> nodes_;
  std::vector<std::string> words_;
  int terminal_count_ = 0;
};

}  // namespace biasdec
