#include "urbanmas/error.hpp"

namespace urbanmas {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid-argument";
    case ErrorCode::Io: return "io";
    case ErrorCode::Config: return "config";
    case ErrorCode::TransportExhausted: return "transport-exhausted";
    case ErrorCode::AuthenticationFailure: return "authentication-failure";
    case ErrorCode::ReplayMiss: return "replay-miss";
    case ErrorCode::UpstreamUnavailable: return "upstream-unavailable";
    case ErrorCode::OfflineMiss: return "offline-miss";
    case ErrorCode::DegenerateReport: return "degenerate-report";
    case ErrorCode::InvalidFactorSet: return "invalid-factor-set";
    case ErrorCode::KeyMismatch: return "key-mismatch";
    case ErrorCode::RefineFailure: return "refine-failure";
    case ErrorCode::ParseFailure: return "parse-failure";
    case ErrorCode::SchemaFailure: return "schema-failure";
    case ErrorCode::MissingRecords: return "missing-records";
    case ErrorCode::AlignmentFailure: return "alignment-failure";
    case ErrorCode::EmptyInput: return "empty-input";
    case ErrorCode::NonFiniteValue: return "non-finite-value";
  }
  return "unknown";
}

void rethrow_labeled(const Error& e, std::string_view label) {
  throw Error(e.code(), std::string(label) + ": " + e.what());
}

}  // namespace urbanmas
