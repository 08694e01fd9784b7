#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sqcrypt {

enum class Errc {
  StepBudgetExceeded,
  MalformedProgram,
  IntegrityFailure,
  AlreadyConsumed,
  UnknownHandle,
  MalformedPk,
  TagDecodeFailure,
  XInSubspaceAbort,
  AlreadyEvaluated,
  PreconditionViolated,
  MalformedMessage,
  FrameTooLarge,
  TransportFailure,
  ConfigError,
};

std::string_view errcName(Errc code) noexcept;

// Every failure in the library is reported through this type; the code is
// what callers branch on, the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errcName(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

inline std::string_view errcName(Errc code) noexcept {
  switch (code) {
    case Errc::StepBudgetExceeded: return "StepBudgetExceeded";
    case Errc::MalformedProgram: return "MalformedProgram";
    case Errc::IntegrityFailure: return "IntegrityFailure";
    case Errc::AlreadyConsumed: return "AlreadyConsumed";
    case Errc::UnknownHandle: return "UnknownHandle";
    case Errc::MalformedPk: return "MalformedPk";
    case Errc::TagDecodeFailure: return "TagDecodeFailure";
    case Errc::XInSubspaceAbort: return "XInSubspaceAbort";
    case Errc::AlreadyEvaluated: return "AlreadyEvaluated";
    case Errc::PreconditionViolated: return "PreconditionViolated";
    case Errc::MalformedMessage: return "MalformedMessage";
    case Errc::FrameTooLarge: return "FrameTooLarge";
    case Errc::TransportFailure: return "TransportFailure";
    case Errc::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

inline void require(bool cond, Errc code, const char* what) {
  if (!cond) throw Error(code, what);
}

}  // namespace sqcrypt
