#include "kirman/error.hpp"

namespace kirman {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::Domain: return "DomainError";
    case ErrorCode::StepTooLarge: return "StepTooLarge";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::DegenerateExponent: return "DegenerateExponent";
    case ErrorCode::EmptyRange: return "EmptyRange";
    case ErrorCode::InsufficientPoints: return "InsufficientPoints";
    case ErrorCode::TooShort: return "TooShort";
    case ErrorCode::Config: return "ConfigError";
  }
  return "Unknown";
}

}  // namespace kirman
