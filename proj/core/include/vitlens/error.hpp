#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vitlens {

enum class ErrorCode {
  kInvalidArgument,
  kShapeError,
  kNonFiniteData,
  kInvalidBundle,
  kNotABundle,
  kTruncated,
  kUnsupportedDtype,
  kNumericalError,
  kInvalidKernel,
  kInvalidAttention,
  kNotEnoughHeads,
  kNotEnoughTokens,
  kNotEnoughImages,
  kDegenerateSpectrum,
  kInvalidBand,
  kEmptyBand,
  kNoClassifier,
  kDegenerateEmbedding,
  kEmptyMask,
  kDegenerateRatio,
  kInvalidLambda,
  kDegenerateLabels,
  kNoClsToken,
  kMixedBundles,
  kEmptyRun,
  kIoError,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries one of the codes above so
// callers (notably the CLI) can map it onto an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) fail(code, message);
}

}  // namespace vitlens
