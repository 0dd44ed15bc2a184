#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace urbanmas {

enum class ErrorCode {
  InvalidArgument,
  Io,
  Config,
  // llm-backend
  TransportExhausted,
  AuthenticationFailure,
  ReplayMiss,
  // geo-ingest
  UpstreamUnavailable,
  OfflineMiss,
  // factor-guidance
  DegenerateReport,
  InvalidFactorSet,
  // reliability / extraction
  KeyMismatch,
  RefineFailure,
  ParseFailure,
  // inference
  SchemaFailure,
  MissingRecords,
  // evaluation
  AlignmentFailure,
  EmptyInput,
  NonFiniteValue,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries a machine-readable code; the
/// message names the failing stage (for example the (dimension, level) pair).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Re-raises `e` with `label` prefixed to its message, keeping the code.
[[noreturn]] void rethrow_labeled(const Error& e, std::string_view label);

}  // namespace urbanmas
