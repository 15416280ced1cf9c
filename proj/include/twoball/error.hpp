#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace twoball {

enum class ErrorCode {
  NotInGroup,
  Ambiguous,
  RadiusTooLarge,
  InvalidArgument,
  GluingFailure,
  NoEvent,
  NotInContact,
  NotApproaching,
  NotOnSide,
  NotOutgoing,
  RejectionOverflow,
  TooFewCollisions,
  SingularWindow,
  TooShort,
  NoCylinderFound,
  MissingVelocities,
  IllConditioned,
  SequenceChanged,
  DegenerateRelativeVelocity,
  SingularHalt,
  SequenceDivergenceOverflow,
  ParseError,
  UnknownKey,
};

std::string_view to_string(ErrorCode code);

/// Every recoverable failure in the library is reported through this type;
/// callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace twoball
