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
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "biasdec/errors.hpp"
#include "biasdec/vocab.hpp"
#include "doctest.h"

namespace {

using biasdec::FormatError;
using biasdec::TokenizeError;
using biasdec::TokenSeq;
using biasdec::Vocabulary;

const std::string kM = std::string(biasdec::kBoundaryMarker);

// Writes content to a fresh temp file, returns its path.
std::string temp_vocab_file(const std::string& content) {
  static int counter = 0;
  auto path = std::filesystem::temp_directory_path() /
              ("biasdec_vocab_" + std::to_string(++counter) + ".txt");
  std::ofstream out(path);
  out << content;
  out.close();
  return path.string();
}

Vocabulary demo_vocab() {
  return Vocabulary::from_entries(
      {kM + "Bon", kM + "Bu", "ham", "lan", "<s>", "</s>"}, 4, 5);
}

}  // namespace

TEST_SUITE("vocab") {

TEST_CASE("load parses headers and tab-separated entries") {
  std::string path = temp_vocab_file(
      "#bos 2\n"
      "#eos 3\n"
      "0\t" + kM + "go\n"
      "1\tx\n"
      "2\t<s>\n"
      "3\t</s>\n");
  Vocabulary v = Vocabulary::load(path);
  CHECK(v.size() == 4);
  CHECK(v.bos_id() == 2);
  CHECK(v.eos_id() == 3);
  CHECK(v.surface(0) == kM + "go");
  CHECK(v.id_of("x") == 1);
  CHECK_FALSE(v.id_of("missing").has_value());
}

TEST_CASE("load accepts entries in any order and blank lines") {
  std::string path = temp_vocab_file(
      "3\t</s>\n"
      "\n"
      "#eos 3\n"
      "1\tb\n"
      "0\ta\n"
      "#bos 2\n"
      "2\t<s>\n");
  Vocabulary v = Vocabulary::load(path);
  CHECK(v.size() == 4);
  CHECK(v.surface(1) == "b");
}

TEST_CASE("load rejects malformed files with precise messages") {
  auto expect_throw = [](const std::string& content, const std::string& what) {
    std::string path = temp_vocab_file(content);
    CHECK_THROWS_WITH_AS(Vocabulary::load(path),
                         doctest::Contains(what.c_str()), FormatError);
  };
  expect_throw("#bos\n#eos 1\n0\ta\n1\tb\n", "#bos needs an id");
  expect_throw("#bos 0\n#bos 0\n#eos 1\n0\ta\n1\tb\n", "duplicate #bos");
  expect_throw("#bos 0\n#eos 1\n0 a\n1\tb\n", "expected <id><TAB><surface>");
  expect_throw("#bos 0\n#eos 1\nx\ta\n1\tb\n", "bad token id 'x'");
  expect_throw("#bos 0\n#eos 1\n0\t\n1\tb\n", "empty surface for id 0");
  expect_throw("#bos 0\n#eos 1\n0\ta\n0\tb\n1\tc\n", "duplicate id 0");
  expect_throw("#bos 0\n#eos 1\n0\ta\n1\ta\n", "duplicate surface 'a'");
  expect_throw("#eos 1\n0\ta\n1\tb\n", "missing #bos or #eos header");
  expect_throw("#bos 0\n#eos 1\n0\ta\n2\tb\n", "dense");
  expect_throw("#bos 0\n#eos 5\n0\ta\n1\tb\n", "out of range");
}

TEST_CASE("load reports a missing file") {
  CHECK_THROWS_WITH_AS(Vocabulary::load("/nonexistent/vocab.txt"),
                       doctest::Contains("cannot open vocabulary file"),
                       FormatError);
}

TEST_CASE("from_entries validates specials") {
  CHECK_THROWS_AS(Vocabulary::from_entries({"a", "b"}, 0, 0),
                  FormatError);
  CHECK_THROWS_AS(Vocabulary::from_entries({"a", "b"}, 0, 7),
                  FormatError);
  CHECK_THROWS_AS(Vocabulary::from_entries({}, 0, 1), FormatError);
}

TEST_CASE("tokenize is greedy longest-match") {
  // "ab" must win over "a" + "b".
  Vocabulary v = Vocabulary::from_entries(
      {"a", "b", "ab", kM + "ab", "<s>", "</s>"}, 4, 5);
  CHECK(v.tokenize("ab") == TokenSeq{2});
  CHECK(v.tokenize("aab") == TokenSeq{0, 2});
  CHECK(v.tokenize(" ab") == TokenSeq{3});
  CHECK(v.tokenize("abab") == TokenSeq{2, 2});
}

TEST_CASE("tokenize maps a leading space to the boundary marker") {
  Vocabulary v = demo_vocab();
  CHECK(v.tokenize(" Bonham") == TokenSeq{0, 2});
  CHECK(v.tokenize(" Bulan") == TokenSeq{1, 3});
  // No marker-prefixed form for bare "ham".
  CHECK(v.tokenize("ham") == TokenSeq{2});
  CHECK_THROWS_AS(v.tokenize(" ham"), TokenizeError);
}

TEST_CASE("tokenize never uses bos or eos surfaces") {
  // "<s>" is literally in the text but its surface is reserved.
  Vocabulary v = Vocabulary::from_entries(
      {"<", "s", ">", "<s>", "</s>"}, 3, 4);
  CHECK(v.tokenize("<s>") == TokenSeq{0, 1, 2});
}

TEST_CASE("tokenize reports the byte offset of a dead end") {
  Vocabulary v = demo_vocab();
  CHECK_THROWS_WITH_AS(v.tokenize("hamX"),
                       doctest::Contains("at byte offset 3"), TokenizeError);
  CHECK_THROWS_WITH_AS(v.tokenize("Qham"),
                       doctest::Contains("at byte offset 0"), TokenizeError);
  CHECK_THROWS_WITH_AS(v.tokenize(""),
                       doctest::Contains("cannot tokenize empty text"),
                       TokenizeError);
}

TEST_CASE("detokenize skips specials and restores spaces") {
  Vocabulary v = demo_vocab();
  CHECK(v.detokenize({4, 1, 3, 5}) == "Bulan");
  CHECK(v.detokenize({4, 0, 2, 1, 3, 5}) == "Bonham Bulan");
  CHECK(v.detokenize({}) == "");
  CHECK(v.detokenize({4, 5}) == "");
}

TEST_CASE("tokenize then detokenize round-trips words") {
  Vocabulary v = demo_vocab();
  // Word-initial pieces exist only in marked form; the leading boundary
  // renders as nothing, so the space does not come back.
  for (const std::string text : {"Bonham", "Bulan", "Bonlan", "Bulanham"}) {
    CAPTURE(text);
    CHECK(v.detokenize(v.tokenize(" " + text)) == text);
  }
  for (const std::string text : {"ham", "lan", "lanham", "hamlan"}) {
    CAPTURE(text);
    CHECK(v.detokenize(v.tokenize(text)) == text);
  }
}

TEST_CASE("surface rejects out-of-range ids") {
  Vocabulary v = demo_vocab();
  CHECK_THROWS_AS(v.surface(-1), biasdec::ConfigError);
  CHECK_THROWS_AS(v.surface(6), biasdec::ConfigError);
}

}  // TEST_SUITE
