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
#include <string_view>
#include <unordered_map>
#include <vector>

namespace biasdec {

// Word-boundary marker (U+2581), the usual subword convention. tokenize()
// maps a leading space to this marker; detokenize() maps it back.
inline constexpr std::string_view kBoundaryMarker = "\xe2\x96\x81";

using TokenSeq = std::vector<int>;

// Subword inventory with dense ids 0..V-1 and reserved BOS/EOS ids.
//
// File format, UTF-8 text:
//   #bos <id>
//   #eos <id>
//   <id><TAB><surface>
// Header lines may appear anywhere; other lines starting with '#' are
// ignored. Ids must be dense, surfaces unique and non-empty.
class Vocabulary {
 public:
  Vocabulary() = default;  // empty; assign from load()/from_entries()

  static Vocabulary load(const std::string& path);
  static Vocabulary from_entries(std::vector<std::string> surfaces, int bos_id,
                                 int eos_id);

  // The index holds views into surfaces_, so moving is fine (vector moves
  // do not relocate elements) but copying would dangle.
  Vocabulary(const Vocabulary&) = delete;
  Vocabulary& operator=(const Vocabulary&) = delete;
  Vocabulary(Vocabulary&&) = default;
  Vocabulary& operator=(Vocabulary&&) = default;

  int size() const { return static_cast<int>(surfaces_.size()); }
  int bos_id() const { return bos_id_; }
  int eos_id() const { return eos_id_; }

  const std::string& surface(int id) const;
  std::optional<int> id_of(std::string_view surface) const;

  // Greedy longest-match segmentation, left to right, no backtracking.
  // A leading space becomes the boundary marker before matching. BOS/EOS
  // surfaces never participate in matching. Throws TokenizeError with the
  // byte offset of the first unmatched position.
  TokenSeq tokenize(std::string_view word) const;

  // Concatenates surfaces, skipping BOS/EOS, then maps every boundary
  // marker back to a space. A marker at the very start renders as nothing,
  // so detokenize(tokenize(" " + w)) == w for text not starting with a
  // space, and detokenize(tokenize(w)) == w when w does not start with one.
  std::string detokenize(const TokenSeq& seq) const;

 private:
  void finish_init();  // builds lookup index, validates

  std::vector<std::string> surfaces_;
  std::unordered_map<std::string_view, int> index_;
  int bos_id_ = -1;
  int eos_id_ = -1;
  size_t max_surface_bytes_ = 0;
};

}  // namespace biasdec
