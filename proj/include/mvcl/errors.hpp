// Copyright 2026 The MVCL Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mvcl {

/// Root of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Data errors: the input files or records are unusable.

class DataError : public Error {
 public:
  using Error::Error;
};

class EmptyDocument : public DataError {
 public:
  explicit EmptyDocument(const std::string& what = "document is empty after trimming")
      : DataError(what) {}
};

/// Malformed record; carries the 1-based line number inside `file`.
class ParseError : public DataError {
 public:
  ParseError(const std::string& file, std::size_t line, const std::string& what)
      : DataError(file + ":" + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class IntegrityError : public DataError {
 public:
  using DataError::DataError;
};

class FormatError : public DataError {
 public:
  using DataError::DataError;
};

class FixtureMiss : public DataError {
 public:
  using DataError::DataError;
};

class DegenerateDataset : public DataError {
 public:
  using DataError::DataError;
};

// Contract errors: the caller broke a precondition.

class ContractError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public ContractError {
 public:
  using ContractError::ContractError;
};

class NumericError : public ContractError {
 public:
  using ContractError::ContractError;
};

class SizeGuard : public ContractError {
 public:
  using ContractError::ContractError;
};

/// Invalid or inconsistent configuration; reported as a usage error by the CLI.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace mvcl
