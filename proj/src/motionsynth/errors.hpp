/*
 * Copyright 2026 The motionsynth Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
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

namespace motionsynth {

// Mirrors the status codes of the C API; the numeric values of the first
// three are also the CLI exit codes.
enum class ErrorKind {
  kConfig = 1,
  kAsset = 2,
  kPartialFailure = 3,
  kArgument = 4,
  kIo = 5,
  kGateway = 6,
  kNumeric = 7,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& m) : Error(ErrorKind::kConfig, m) {}
};

struct AssetError : Error {
  explicit AssetError(const std::string& m) : Error(ErrorKind::kAsset, m) {}
};

struct ArgumentError : Error {
  explicit ArgumentError(const std::string& m)
      : Error(ErrorKind::kArgument, m) {}
};

struct IoError : Error {
  explicit IoError(const std::string& m) : Error(ErrorKind::kIo, m) {}
};

struct NumericError : Error {
  explicit NumericError(const std::string& m) : Error(ErrorKind::kNumeric, m) {}
};

// Raised once a completion request has exhausted its retry budget.
class GatewayError : public Error {
 public:
  GatewayError(const std::string& m, int last_status)
      : Error(ErrorKind::kGateway, m), last_status_(last_status) {}

  // HTTP status of the final attempt, 0 for transport-level failures.
  int last_status() const { return last_status_; }

 private:
  int last_status_;
};

}  // namespace motionsynth
