/*
 * Copyright 2026 The fairtune Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
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

namespace fairtune {

// Error categories map one-to-one onto CLI exit codes (see exit_code()).
enum class ErrorKind {
  kConfig,      // bad option, unknown name, shape mismatch
  kData,        // malformed input cell, invariant violation, degenerate strata
  kNumeric,     // non-finite loss or gradient
  kMetric,      // metric undefined on the given labels
  kIo,          // filesystem failures
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& what)
      : Error(ErrorKind::kConfig, what) {}
};
struct DataError : Error {
  explicit DataError(const std::string& what) : Error(ErrorKind::kData, what) {}
};
struct NumericError : Error {
  explicit NumericError(const std::string& what)
      : Error(ErrorKind::kNumeric, what) {}
};
struct MetricError : Error {
  explicit MetricError(const std::string& what)
      : Error(ErrorKind::kMetric, what) {}
};
struct IoError : Error {
  explicit IoError(const std::string& what) : Error(ErrorKind::kIo, what) {}
};

// 0 success, 2 config, 3 data, 4 numeric; everything else 1.
inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig:
      return 2;
    case ErrorKind::kData:
    case ErrorKind::kMetric:
      return 3;
    case ErrorKind::kNumeric:
      return 4;
    case ErrorKind::kIo:
      return 1;
  }
  return 1;
}

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig:
      return "config";
    case ErrorKind::kData:
      return "data";
    case ErrorKind::kNumeric:
      return "numeric";
    case ErrorKind::kMetric:
      return "metric";
    case ErrorKind::kIo:
      return "io";
  }
  return "unknown";
}

}  // namespace fairtune
