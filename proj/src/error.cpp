#include "twoball/error.hpp"

namespace twoball {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotInGroup: return "NotInGroup";
    case ErrorCode::Ambiguous: return "Ambiguous";
    case ErrorCode::RadiusTooLarge: return "RadiusTooLarge";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::GluingFailure: return "GluingFailure";
    case ErrorCode::NoEvent: return "NoEvent";
    case ErrorCode::NotInContact: return "NotInContact";
    case ErrorCode::NotApproaching: return "NotApproaching";
    case ErrorCode::NotOnSide: return "NotOnSide";
    case ErrorCode::NotOutgoing: return "NotOutgoing";
    case ErrorCode::RejectionOverflow: return "RejectionOverflow";
    case ErrorCode::TooFewCollisions: return "TooFewCollisions";
    case ErrorCode::SingularWindow: return "SingularWindow";
    case ErrorCode::TooShort: return "TooShort";
    case ErrorCode::NoCylinderFound: return "NoCylinderFound";
    case ErrorCode::MissingVelocities: return "MissingVelocities";
    case ErrorCode::IllConditioned: return "IllConditioned";
    case ErrorCode::SequenceChanged: return "SequenceChanged";
    case ErrorCode::DegenerateRelativeVelocity: return "DegenerateRelativeVelocity";
    case ErrorCode::SingularHalt: return "SingularHalt";
    case ErrorCode::SequenceDivergenceOverflow: return "SequenceDivergenceOverflow";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::UnknownKey: return "UnknownKey";
  }
  return "Unknown";
}

}  // namespace twoball
