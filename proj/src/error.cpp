#include "boga/error.hpp"

namespace boga {

const char *to_string(ErrorKind kind)
{
  switch (kind) {
  case ErrorKind::InvalidArgument: return "InvalidArgument";
  case ErrorKind::DimMismatch: return "DimMismatch";
  case ErrorKind::OutOfRange: return "OutOfRange";
  case ErrorKind::NonFiniteSample: return "NonFiniteSample";
  case ErrorKind::TruncatedPayload: return "TruncatedPayload";
  case ErrorKind::UnknownDtype: return "UnknownDtype";
  case ErrorKind::Io: return "Io";
  case ErrorKind::DegenerateWindow: return "DegenerateWindow";
  case ErrorKind::EmptySpec: return "EmptySpec";
  case ErrorKind::GridTooSmall: return "GridTooSmall";
  case ErrorKind::ZeroMeanProfile: return "ZeroMeanProfile";
  case ErrorKind::EmptyRegion: return "EmptyRegion";
  case ErrorKind::NonPositiveMean: return "NonPositiveMean";
  case ErrorKind::AlreadyScaled: return "AlreadyScaled";
  case ErrorKind::NotCpDerived: return "NotCpDerived";
  case ErrorKind::MissingAcquisition: return "MissingAcquisition";
  case ErrorKind::MixedTseFactor: return "MixedTseFactor";
  case ErrorKind::ZeroDenominator: return "ZeroDenominator";
  case ErrorKind::TrainTooLong: return "TrainTooLong";
  case ErrorKind::Config: return "ConfigError";
  case ErrorKind::ContractViolation: return "ContractViolation";
  }
  return "Unknown";
}

} // namespace boga
