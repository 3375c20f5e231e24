#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fairpos {

enum class ErrorCode {
  EmptyArm,
  NonFinite,
  ArityTooLarge,
  TooFewRows,
  BadOrder,
  BadConfig,
  NegativeTargetMass,
  FoldArmEmpty,
  BadLabel,
  LengthMismatch,
  InadmissibleFamily,
  ParseError,
  SchemaError,
  UnknownExperiment,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace fairpos
