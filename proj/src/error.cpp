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

#include "svgnet/error.hpp"

namespace svgnet {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::UnsupportedCommand: return "UnsupportedCommand";
    case ErrorCode::MalformedNumber: return "MalformedNumber";
    case ErrorCode::ArityError: return "ArityError";
    case ErrorCode::ContractViolation: return "ContractViolation";
    case ErrorCode::XmlParseError: return "XmlParseError";
    case ErrorCode::MissingViewport: return "MissingViewport";
    case ErrorCode::OutOfViewport: return "OutOfViewport";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::InsufficientHistory: return "InsufficientHistory";
    case ErrorCode::MissingMainAgent: return "MissingMainAgent";
    case ErrorCode::BadTimestampGrid: return "BadTimestampGrid";
    case ErrorCode::SceneNotFound: return "SceneNotFound";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::EmptyMaskRow: return "EmptyMaskRow";
    case ErrorCode::DisconnectedLoss: return "DisconnectedLoss";
    case ErrorCode::RecordingDisabled: return "RecordingDisabled";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

ErrorCategory category_of(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::ConfigError:
      return ErrorCategory::Config;
    case ErrorCode::UnsupportedCommand:
    case ErrorCode::MalformedNumber:
    case ErrorCode::ArityError:
    case ErrorCode::XmlParseError:
    case ErrorCode::MissingViewport:
    case ErrorCode::OutOfViewport:
    case ErrorCode::IoError:
    case ErrorCode::SchemaError:
    case ErrorCode::InsufficientHistory:
    case ErrorCode::MissingMainAgent:
    case ErrorCode::BadTimestampGrid:
    case ErrorCode::SceneNotFound:
    case ErrorCode::EmptyInput:
      return ErrorCategory::Data;
    default:
      return ErrorCategory::Runtime;
  }
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

SchemaError::SchemaError(std::size_t line_no, std::string field, const std::string& message)
    : Error(ErrorCode::SchemaError,
            "line " + std::to_string(line_no) + ", field '" + field + "': " + message),
      line_no_(line_no),
      field_(std::move(field)) {}

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace svgnet
