#pragma once

#include <stdexcept>
#include <string>

namespace sflow {

enum class ErrorCode {
  InvalidArgument,
  OriginEvaluation,
  NotUnitVector,
  UnknownField,
  SingularBlend,
  StepFailure,
  EventDirection,
  NoEvent,
  NotBlowingUp,
  OutOfRange,
  NotFound,
  SignError,
  NonPositiveMean,
  OutOfDomain,
  ConfigError,
  UnknownFigure,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

}  // namespace sflow
