#include "lbpbevm/error.hpp"

namespace lbpbevm {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::WidthTooSmall: return "WidthTooSmall";
    case ErrorCode::EmptyAfterTruncate: return "EmptyAfterTruncate";
    case ErrorCode::EmptySignal: return "EmptySignal";
    case ErrorCode::NonFiniteSample: return "NonFiniteSample";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::MatrixTooSmall: return "MatrixTooSmall";
    case ErrorCode::ZeroMassPatch: return "ZeroMassPatch";
    case ErrorCode::BadKernel: return "BadKernel";
    case ErrorCode::EvenKernel: return "EvenKernel";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::SignalTooShort: return "SignalTooShort";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::InconsistentDimensions: return "InconsistentDimensions";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::EmptyTestSet: return "EmptyTestSet";
    case ErrorCode::ClassTooSmall: return "ClassTooSmall";
    case ErrorCode::BadK: return "BadK";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::NegativePower: return "NegativePower";
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::BadSpec: return "BadSpec";
    case ErrorCode::BadConfig: return "BadConfig";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& detail)
    : std::runtime_error(std::string(to_string(code)) + ": " + detail),
      code_(code) {}

}  // namespace lbpbevm
