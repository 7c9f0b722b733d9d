#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace auxit {

enum class ErrorCode {
  DimensionMismatch,
  InvalidArgument,
  LabelOutOfRange,
  EmptyClass,
  MalformedTree,
  BadMagic,
  Truncated,
  CountMismatch,
  ParseError,
  NonFinite,
  Io,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "dimension_mismatch";
    case ErrorCode::InvalidArgument: return "invalid_argument";
    case ErrorCode::LabelOutOfRange: return "label_out_of_range";
    case ErrorCode::EmptyClass: return "empty_class";
    case ErrorCode::MalformedTree: return "malformed_tree";
    case ErrorCode::BadMagic: return "bad_magic";
    case ErrorCode::Truncated: return "truncated";
    case ErrorCode::CountMismatch: return "count_mismatch";
    case ErrorCode::ParseError: return "parse_error";
    case ErrorCode::NonFinite: return "non_finite";
    case ErrorCode::Io: return "io";
  }
  return "unknown";
}

/// Every failure raised by the library carries a machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace auxit
