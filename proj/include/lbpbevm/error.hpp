#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lbpbevm {

enum class ErrorCode {
  WidthTooSmall,
  EmptyAfterTruncate,
  EmptySignal,
  NonFiniteSample,
  OutOfRange,
  MatrixTooSmall,
  ZeroMassPatch,
  BadKernel,
  EvenKernel,
  DimensionMismatch,
  SignalTooShort,
  EmptyDataset,
  InconsistentDimensions,
  ZeroVector,
  EmptyTestSet,
  ClassTooSmall,
  BadK,
  ParseError,
  NegativePower,
  MissingColumn,
  BadSpec,
  BadConfig,
  IoError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every library failure surfaces as this exception; what() starts with the
/// code name so CLI diagnostics stay greppable.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace lbpbevm
