// Copyright 2026 The ccdkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ccdkit {

enum class ErrorKind {
  kDimension,
  kDegenerateInput,
  kParameter,
  kDomain,
  kValidation,
  kNotFound,
  kProtocol,
  kTransport,
  kCapability,
  kDecoding,
  kTemplate,
  kPadding,
  kUndefinedMetric,
  kShape,
  kExtraction,
  kEmptyResult,
  kUsage,
  kPartialGeneration,
  kInternal,
};

std::string_view error_kind_name(ErrorKind kind);

// Every failure surfaced by the library is an Error carrying its kind so
// callers (the CLI in particular) can map it to an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(error_kind_name(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  // Transport failures are the only errors worth retrying as-is.
  bool retryable() const noexcept { return kind_ == ErrorKind::kTransport; }

 private:
  ErrorKind kind_;
};

inline std::string_view error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kDimension: return "dimension error";
    case ErrorKind::kDegenerateInput: return "degenerate input";
    case ErrorKind::kParameter: return "parameter error";
    case ErrorKind::kDomain: return "domain error";
    case ErrorKind::kValidation: return "validation error";
    case ErrorKind::kNotFound: return "not found";
    case ErrorKind::kProtocol: return "protocol error";
    case ErrorKind::kTransport: return "transport error";
    case ErrorKind::kCapability: return "capability error";
    case ErrorKind::kDecoding: return "decoding error";
    case ErrorKind::kTemplate: return "template error";
    case ErrorKind::kPadding: return "padding error";
    case ErrorKind::kUndefinedMetric: return "undefined metric";
    case ErrorKind::kShape: return "shape error";
    case ErrorKind::kExtraction: return "extraction error";
    case ErrorKind::kEmptyResult: return "empty result";
    case ErrorKind::kUsage: return "usage error";
    case ErrorKind::kPartialGeneration: return "partial generation";
    case ErrorKind::kInternal: return "internal error";
  }
  return "error";
}

}  // namespace ccdkit
