#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ehalloc {

enum class ErrorKind {
  RhoOutOfRange,
  RankError,
  NotPSD,
  NotHermitian,
  NotUnit,
  DimensionMismatch,
  DelayOutOfRange,
  FlatSpectrumRequired,
  InfeasibleRegion,
  LengthMismatch,
  ZeroVarianceWithEnergy,
  PlanInvalid,
  WindowError,
  InvalidConfig,
};

std::string_view to_string(ErrorKind kind);

/// Every recoverable failure in the library is reported through this type;
/// `kind()` lets callers (and the CLI exit-code mapping) branch on the cause.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& what);

}  // namespace ehalloc
