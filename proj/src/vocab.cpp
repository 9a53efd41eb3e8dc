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

#include "biasdec/vocab.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "biasdec/errors.hpp"

namespace biasdec {

namespace {

int parse_id(const std::string& text, const std::string& path, int line_no) {
  size_t used = 0;
  int value = 0;
  try {
    value = std::stoi(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || value < 0) {
    throw FormatError(path + ":" + std::to_string(line_no) +
                      ": bad token id '" + text + "'");
  }
  return value;
}

}  // namespace

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw FormatError("cannot open vocabulary file: " + path);
  }

  std::vector<std::pair<int, std::string>> rows;
  std::unordered_set<int> seen_ids;
  std::unordered_set<std::string> seen_surfaces;
  std::optional<int> bos, eos;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream hdr(line);
      std::string tag, value;
      hdr >> tag >> value;
      if (tag == "#bos" || tag == "#eos") {
        if (value.empty()) {
          throw FormatError(path + ":" + std::to_string(line_no) + ": " + tag +
                            " needs an id");
        }
        auto& slot = (tag == "#bos") ? bos : eos;
        if (slot) {
          throw FormatError(path + ":" + std::to_string(line_no) +
                            ": duplicate " + tag + " header");
        }
        slot = parse_id(value, path, line_no);
      }
      continue;  // other comment lines are ignored
    }
    size_t tab = line.find('\t');
    if (tab == std::string::npos) {
      throw FormatError(path + ":" + std::to_string(line_no) +
                        ": expected <id><TAB><surface>");
    }
    int id = parse_id(line.substr(0, tab), path, line_no);
    std::string surface = line.substr(tab + 1);
    if (surface.empty()) {
      throw FormatError(path + ":" + std::to_string(line_no) +
                        ": empty surface for id " + std::to_string(id));
    }
    if (!seen_ids.insert(id).second) {
      throw FormatError(path + ":" + std::to_string(line_no) +
                        ": duplicate id " + std::to_string(id));
    }
    if (!seen_surfaces.insert(surface).second) {
      throw FormatError(path + ":" + std::to_string(line_no) +
                        ": duplicate surface '" + surface + "'");
    }
    rows.emplace_back(id, std::move(surface));
  }
  if (!bos || !eos) {
    throw FormatError(path + ": missing #bos or #eos header");
  }

  Vocabulary v;
  v.surfaces_.resize(rows.size());
  std::vector<bool> filled(rows.size(), false);
  for (auto& [id, surface] : rows) {
    if (id >= static_cast<int>(rows.size())) {
      throw FormatError(path + ": token ids must be dense 0.." +
                        std::to_string(rows.size() - 1) + ", got " +
                        std::to_string(id));
    }
    filled[id] = true;
    v.surfaces_[id] = std::move(surface);
  }
  if (std::find(filled.begin(), filled.end(), false) != filled.end()) {
    throw FormatError(path + ": token ids must be dense 0..V-1");
  }
  v.bos_id_ = *bos;
  v.eos_id_ = *eos;
  v.finish_init();
  return v;
}

Vocabulary Vocabulary::from_entries(std::vector<std::string> surfaces,
                                    int bos_id, int eos_id) {
  Vocabulary v;
  std::unordered_set<std::string> seen;
  for (size_t i = 0; i < surfaces.size(); ++i) {
    if (surfaces[i].empty()) {
      throw FormatError("empty surface for id " + std::to_string(i));
    }
    if (!seen.insert(surfaces[i]).second) {
      throw FormatError("duplicate surface '" + surfaces[i] + "'");
    }
  }
  v.surfaces_ = std::move(surfaces);
  v.bos_id_ = bos_id;
  v.eos_id_ = eos_id;
  v.finish_init();
  return v;
}

void Vocabulary::finish_init() {
  const int v_size = size();
  if (v_size == 0) throw FormatError("vocabulary is empty");
  auto check_special = [&](int id, const char* name) {
    if (id < 0 || id >= v_size) {
      throw FormatError(std::string(name) + " id " + std::to_string(id) +
                        " out of range 0.." + std::to_string(v_size - 1));
    }
  };
  check_special(bos_id_, "bos");
  check_special(eos_id_, "eos");
  if (bos_id_ == eos_id_) throw FormatError("bos and eos must differ");

  index_.reserve(surfaces_.size());
  for (int id = 0; id < v_size; ++id) {
    index_.emplace(surfaces_[id], id);
    max_surface_bytes_ = std::max(max_surface_bytes_, surfaces_[id].size());
  }
}

const std::string& Vocabulary::surface(int id) const {
  if (id < 0 || id >= size()) {
    throw ConfigError("token id " + std::to_string(id) +
                      " out of range 0.." + std::to_string(size() - 1));
  }
  return surfaces_[id];
}

std::optional<int> Vocabulary::id_of(std::string_view surface) const {
  auto it = index_.find(surface);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

TokenSeq Vocabulary::tokenize(std::string_view word) const {
  if (word.empty()) throw TokenizeError("cannot tokenize empty text");
  std::string text;
  if (word.front() == ' ') {
    text.append(kBoundaryMarker);
    text.append(word.substr(1));
  } else {
    text.assign(word);
  }

  TokenSeq out;
  size_t pos = 0;
  while (pos < text.size()) {
    int match = -1;
    size_t limit = std::min(max_surface_bytes_, text.size() - pos);
    for (size_t len = limit; len >= 1; --len) {
      auto it = index_.find(std::string_view(text).substr(pos, len));
      if (it == index_.end()) continue;
      if (it->second == bos_id_ || it->second == eos_id_) continue;
      match = it->second;
      pos += len;
      break;
    }
    if (match < 0) {
      throw TokenizeError("no surface matches '" + text + "' at byte offset " +
                          std::to_string(pos));
    }
    out.push_back(match);
  }
  return out;
}

std::string Vocabulary::detokenize(const TokenSeq& seq) const {
  std::string joined;
  for (int id : seq) {
    if (id == bos_id_ || id == eos_id_) continue;
    joined += surface(id);
  }
  std::string out;
  out.reserve(joined.size());
  size_t pos = 0;
  // A boundary at the very start has nothing before it: render no space.
  if (joined.compare(0, kBoundaryMarker.size(), kBoundaryMarker) == 0) {
    pos = kBoundaryMarker.size();
  }
  while (pos < joined.size()) {
    if (joined.compare(pos, kBoundaryMarker.size(), kBoundaryMarker) == 0) {
      out += ' ';
      pos += kBoundaryMarker.size();
    } else {
      out += joined[pos++];
    }
  }
  return out;
}

}  // namespace biasdec
