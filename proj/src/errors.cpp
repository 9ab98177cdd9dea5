#include "ehalloc/errors.hpp"

namespace ehalloc {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::RhoOutOfRange: return "RhoOutOfRange";
    case ErrorKind::RankError: return "RankError";
    case ErrorKind::NotPSD: return "NotPSD";
    case ErrorKind::NotHermitian: return "NotHermitian";
    case ErrorKind::NotUnit: return "NotUnit";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::DelayOutOfRange: return "DelayOutOfRange";
    case ErrorKind::FlatSpectrumRequired: return "FlatSpectrumRequired";
    case ErrorKind::InfeasibleRegion: return "InfeasibleRegion";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::ZeroVarianceWithEnergy: return "ZeroVarianceWithEnergy";
    case ErrorKind::PlanInvalid: return "PlanInvalid";
    case ErrorKind::WindowError: return "WindowError";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace ehalloc
