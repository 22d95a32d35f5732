#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace kirman {

enum class ErrorCode {
  Domain,
  StepTooLarge,
  NonFinite,
  DegenerateExponent,
  EmptyRange,
  InsufficientPoints,
  TooShort,
  Config,
};

std::string_view to_string(ErrorCode code);

/// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  /// Config and domain errors come from bad input; everything else is a
  /// numerical failure.
  bool is_config() const noexcept { return code_ == ErrorCode::Config; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace kirman
