#include "vitlens/error.hpp"

namespace vitlens {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kShapeError: return "ShapeError";
    case ErrorCode::kNonFiniteData: return "NonFiniteData";
    case ErrorCode::kInvalidBundle: return "InvalidBundle";
    case ErrorCode::kNotABundle: return "NotABundle";
    case ErrorCode::kTruncated: return "Truncated";
    case ErrorCode::kUnsupportedDtype: return "UnsupportedDtype";
    case ErrorCode::kNumericalError: return "NumericalError";
    case ErrorCode::kInvalidKernel: return "InvalidKernel";
    case ErrorCode::kInvalidAttention: return "InvalidAttention";
    case ErrorCode::kNotEnoughHeads: return "NotEnoughHeads";
    case ErrorCode::kNotEnoughTokens: return "NotEnoughTokens";
    case ErrorCode::kNotEnoughImages: return "NotEnoughImages";
    case ErrorCode::kDegenerateSpectrum: return "DegenerateSpectrum";
    case ErrorCode::kInvalidBand: return "InvalidBand";
    case ErrorCode::kEmptyBand: return "EmptyBand";
    case ErrorCode::kNoClassifier: return "NoClassifier";
    case ErrorCode::kDegenerateEmbedding: return "DegenerateEmbedding";
    case ErrorCode::kEmptyMask: return "EmptyMask";
    case ErrorCode::kDegenerateRatio: return "DegenerateRatio";
    case ErrorCode::kInvalidLambda: return "InvalidLambda";
    case ErrorCode::kDegenerateLabels: return "DegenerateLabels";
    case ErrorCode::kNoClsToken: return "NoClsToken";
    case ErrorCode::kMixedBundles: return "MixedBundles";
    case ErrorCode::kEmptyRun: return "EmptyRun";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace vitlens
