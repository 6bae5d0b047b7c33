#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bmtk {

enum class ErrorKind {
  InvalidInput,
  DivergentTail,
  TailUnbounded,
  OutOfSpan,
  NotDivergent,
  NotAlmostDecreasing,
  ZeroPoint,
  NonRealPoint,
  NoBracket,
  ZeroOnBoundary,
  NotIntertwining,
  NotIncreasing,
  LevelSetMismatch,
  AtLevelPoint,
  NonConvergence,
  IllConditioned,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput: return "InvalidInput";
    case ErrorKind::DivergentTail: return "DivergentTail";
    case ErrorKind::TailUnbounded: return "TailUnbounded";
    case ErrorKind::OutOfSpan: return "OutOfSpan";
    case ErrorKind::NotDivergent: return "NotDivergent";
    case ErrorKind::NotAlmostDecreasing: return "NotAlmostDecreasing";
    case ErrorKind::ZeroPoint: return "ZeroPoint";
    case ErrorKind::NonRealPoint: return "NonRealPoint";
    case ErrorKind::NoBracket: return "NoBracket";
    case ErrorKind::ZeroOnBoundary: return "ZeroOnBoundary";
    case ErrorKind::NotIntertwining: return "NotIntertwining";
    case ErrorKind::NotIncreasing: return "NotIncreasing";
    case ErrorKind::LevelSetMismatch: return "LevelSetMismatch";
    case ErrorKind::AtLevelPoint: return "AtLevelPoint";
    case ErrorKind::NonConvergence: return "NonConvergence";
    case ErrorKind::IllConditioned: return "IllConditioned";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a machine-readable kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace bmtk
