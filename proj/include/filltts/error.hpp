// Copyright 2026 The filltts Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace filltts {

enum class ErrorKind {
  kAlignment,
  kParameter,
  kNoSource,
  kScheme,
  kCapacity,
  kIncomplete,
  kShape,
  kEmptiness,
  kNumeric,
  kConfig,
  kTransport,
  kProtocol,
  kValidation,
  kUndefinedCorrelation,
  kInsufficient,
  kIo,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kAlignment: return "alignment";
    case ErrorKind::kParameter: return "parameter";
    case ErrorKind::kNoSource: return "no-source";
    case ErrorKind::kScheme: return "scheme";
    case ErrorKind::kCapacity: return "capacity";
    case ErrorKind::kIncomplete: return "incomplete";
    case ErrorKind::kShape: return "shape";
    case ErrorKind::kEmptiness: return "emptiness";
    case ErrorKind::kNumeric: return "numeric";
    case ErrorKind::kConfig: return "config";
    case ErrorKind::kTransport: return "transport";
    case ErrorKind::kProtocol: return "protocol";
    case ErrorKind::kValidation: return "validation";
    case ErrorKind::kUndefinedCorrelation: return "undefined-correlation";
    case ErrorKind::kInsufficient: return "insufficient";
    case ErrorKind::kIo: return "io";
  }
  return "unknown";
}

/// Every failure raised by the library carries a machine-checkable kind; the
/// message is a single line suitable for CLI diagnostics.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + " error: " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) fail(kind, message);
}

}  // namespace filltts
