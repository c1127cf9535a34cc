#pragma once

#include <stdexcept>
#include <string>

namespace boga {

enum class ErrorKind {
  InvalidArgument,
  DimMismatch,
  OutOfRange,
  NonFiniteSample,
  TruncatedPayload,
  UnknownDtype,
  Io,
  DegenerateWindow,
  EmptySpec,
  GridTooSmall,
  ZeroMeanProfile,
  EmptyRegion,
  NonPositiveMean,
  AlreadyScaled,
  NotCpDerived,
  MissingAcquisition,
  MixedTseFactor,
  ZeroDenominator,
  TrainTooLong,
  Config,
  ContractViolation,
};

const char *to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string &what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what)
    , kind_(kind)
  {
  }

  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

} // namespace boga
