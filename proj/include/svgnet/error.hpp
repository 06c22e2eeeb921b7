/*
 * Copyright (c) 2026 The SVGNet Authors
 *
 * Licensed under the Apache License, Version 2.0;
 * You may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an 'AS IS' BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace svgnet {

enum class ErrorCode {
  // svg
  UnsupportedCommand,
  MalformedNumber,
  ArityError,
  ContractViolation,
  XmlParseError,
  MissingViewport,
  OutOfViewport,
  // data
  IoError,
  SchemaError,
  InsufficientHistory,
  MissingMainAgent,
  BadTimestampGrid,
  SceneNotFound,
  EmptyInput,
  // numerics
  ShapeMismatch,
  EmptyMaskRow,
  DisconnectedLoss,
  RecordingDisabled,
  // configuration
  ConfigError,
};

const char* to_string(ErrorCode code) noexcept;

/// Coarse classification used for process exit codes and the C API.
enum class ErrorCategory { Config = 2, Data = 3, Runtime = 4 };

ErrorCategory category_of(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }
  ErrorCategory category() const noexcept { return category_of(code_); }

 private:
  ErrorCode code_;
};

/// Schema violation in a dataset line; carries the 1-based line number.
class SchemaError : public Error {
 public:
  SchemaError(std::size_t line_no, std::string field, const std::string& message);

  std::size_t line_no() const noexcept { return line_no_; }
  const std::string& field() const noexcept { return field_; }

 private:
  std::size_t line_no_;
  std::string field_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace svgnet
