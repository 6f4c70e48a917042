#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace delegatebox {

enum class ErrorKind {
  NegativeValue,
  NegativeProbability,
  ProbabilitySumMismatch,
  EmptySupport,
  InvalidCostModel,
  InvalidInstance,
  InvalidRealization,
  EnumerationLimitExceeded,
  StateLimitExceeded,
  CapMismatch,
  UnsupportedCostModel,
  InvalidPolicy,
  InvalidMechanism,
  InvalidAgent,
  NotCostless,
  CostsNotIdentical,
  RegimeMismatch,
  InvalidParameters,
  ShapeMismatch,
  IoError,
  ParseError,
  SchemaError,
  InternalInconsistency,
};

inline constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NegativeValue: return "NegativeValue";
    case ErrorKind::NegativeProbability: return "NegativeProbability";
    case ErrorKind::ProbabilitySumMismatch: return "ProbabilitySumMismatch";
    case ErrorKind::EmptySupport: return "EmptySupport";
    case ErrorKind::InvalidCostModel: return "InvalidCostModel";
    case ErrorKind::InvalidInstance: return "InvalidInstance";
    case ErrorKind::InvalidRealization: return "InvalidRealization";
    case ErrorKind::EnumerationLimitExceeded: return "EnumerationLimitExceeded";
    case ErrorKind::StateLimitExceeded: return "StateLimitExceeded";
    case ErrorKind::CapMismatch: return "CapMismatch";
    case ErrorKind::UnsupportedCostModel: return "UnsupportedCostModel";
    case ErrorKind::InvalidPolicy: return "InvalidPolicy";
    case ErrorKind::InvalidMechanism: return "InvalidMechanism";
    case ErrorKind::InvalidAgent: return "InvalidAgent";
    case ErrorKind::NotCostless: return "NotCostless";
    case ErrorKind::CostsNotIdentical: return "CostsNotIdentical";
    case ErrorKind::RegimeMismatch: return "RegimeMismatch";
    case ErrorKind::InvalidParameters: return "InvalidParameters";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::SchemaError: return "SchemaError";
    case ErrorKind::InternalInconsistency: return "InternalInconsistency";
  }
  return "Unknown";
}

/// Every failure raised by the library. `kind()` is stable and machine readable;
/// `what()` carries the human-oriented detail.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& detail)
      : std::runtime_error(std::string(to_string(kind)) + ": " + detail), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace delegatebox
