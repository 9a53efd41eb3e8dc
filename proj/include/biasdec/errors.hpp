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

#include <stdexcept>
#include <string>

namespace biasdec {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input file (vocabulary, scenario, bias list, config syntax).
class FormatError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration value or argument out of range.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// No tokenization exists for a piece of text under the vocabulary.
class TokenizeError : public Error {
 public:
  using Error::Error;
};

// Scorer contract violation: unknown prefix, non-finite scores.
class ModelError : public Error {
 public:
  using Error::Error;
};

// Mismatched run inputs, e.g. hypothesis/reference id sets that differ.
class InputError : public Error {
 public:
  using Error::Error;
};

}  // namespace biasdec
