#pragma once

#include <stdexcept>
#include <string>

namespace polymatch {

enum class ErrorCode {
  InvalidPolygon,
  InvalidAffine,
  CoincidentPoints,
  CollinearSource,
  BadJ,
  BadPermutation,
  UndefinedOperand,
  ZeroAlpha,
  SizeMismatch,
  AllTriplesCollinear,
  MixedSizes,
  EmptyCollection,
  EmptyJSet,
  NeedsMultipleJ,
  InvalidTolerance,
  CoincidentBase,
  DegenerateTriangle,
  NegativeOrientation,
  ROutOfRange,
  UnboundedImage,
  BadSampleCount,
  IntegrityFailure,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidPolygon: return "InvalidPolygon";
    case ErrorCode::InvalidAffine: return "InvalidAffine";
    case ErrorCode::CoincidentPoints: return "CoincidentPoints";
    case ErrorCode::CollinearSource: return "CollinearSource";
    case ErrorCode::BadJ: return "BadJ";
    case ErrorCode::BadPermutation: return "BadPermutation";
    case ErrorCode::UndefinedOperand: return "UndefinedOperand";
    case ErrorCode::ZeroAlpha: return "ZeroAlpha";
    case ErrorCode::SizeMismatch: return "SizeMismatch";
    case ErrorCode::AllTriplesCollinear: return "AllTriplesCollinear";
    case ErrorCode::MixedSizes: return "MixedSizes";
    case ErrorCode::EmptyCollection: return "EmptyCollection";
    case ErrorCode::EmptyJSet: return "EmptyJSet";
    case ErrorCode::NeedsMultipleJ: return "NeedsMultipleJ";
    case ErrorCode::InvalidTolerance: return "InvalidTolerance";
    case ErrorCode::CoincidentBase: return "CoincidentBase";
    case ErrorCode::DegenerateTriangle: return "DegenerateTriangle";
    case ErrorCode::NegativeOrientation: return "NegativeOrientation";
    case ErrorCode::ROutOfRange: return "ROutOfRange";
    case ErrorCode::UnboundedImage: return "UnboundedImage";
    case ErrorCode::BadSampleCount: return "BadSampleCount";
    case ErrorCode::IntegrityFailure: return "IntegrityFailure";
  }
  return "Unknown";
}

/// Exception carrying a machine-checkable code; every library failure throws this.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace polymatch
