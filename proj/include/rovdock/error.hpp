/*
 * Copyright 2026 rovdock contributors. All rights reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <stdexcept>
#include <string>

namespace rovdock {

enum class ErrorCode {
  NONFINITE_STATE,
  FRAME_MISMATCH,
  SINGULAR_INNOVATION,
  INCONSISTENT_LAYOUT,
  VALIDATION_ERROR,
  GEOMETRY_ERROR,
  ILLEGAL_TRANSITION,
  SCHEMA_MISMATCH,
  CONFIG_ERROR,
};

inline const char* to_string(ErrorCode c) {
  switch (c) {
    case ErrorCode::NONFINITE_STATE: return "NONFINITE_STATE";
    case ErrorCode::FRAME_MISMATCH: return "FRAME_MISMATCH";
    case ErrorCode::SINGULAR_INNOVATION: return "SINGULAR_INNOVATION";
    case ErrorCode::INCONSISTENT_LAYOUT: return "INCONSISTENT_LAYOUT";
    case ErrorCode::VALIDATION_ERROR: return "VALIDATION_ERROR";
    case ErrorCode::GEOMETRY_ERROR: return "GEOMETRY_ERROR";
    case ErrorCode::ILLEGAL_TRANSITION: return "ILLEGAL_TRANSITION";
    case ErrorCode::SCHEMA_MISMATCH: return "SCHEMA_MISMATCH";
    case ErrorCode::CONFIG_ERROR: return "CONFIG_ERROR";
  }
  return "UNKNOWN";
}

/// Exception carrying a machine-checkable error code alongside the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace rovdock
