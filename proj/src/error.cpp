#include "fairpos/error.hpp"

namespace fairpos {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyArm: return "EmptyArm";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::ArityTooLarge: return "ArityTooLarge";
    case ErrorCode::TooFewRows: return "TooFewRows";
    case ErrorCode::BadOrder: return "BadOrder";
    case ErrorCode::BadConfig: return "BadConfig";
    case ErrorCode::NegativeTargetMass: return "NegativeTargetMass";
    case ErrorCode::FoldArmEmpty: return "FoldArmEmpty";
    case ErrorCode::BadLabel: return "BadLabel";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::InadmissibleFamily: return "InadmissibleFamily";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::UnknownExperiment: return "UnknownExperiment";
  }
  return "Unknown";
}

}  // namespace fairpos
