// Error type shared across the library. Codes are stable strings consumed by
// the CLI (machine-readable error line on stderr).
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mrld {

enum class ErrorCode {
  kInvalidInput,
  kParse,
  kEmptyIntersection,
  kUndefinedEstimate,
  kSingularWeightMatrix,
  kNotPositiveDefinite,
  kSingularDesign,
  kZeroVariance,
  kNonFiniteEigenvalue,
  kNotPsd,
  kMissingMaf,
  kMissingSampleSize,
  kMonomorphicPanel,
  kEmptySelection,
};

std::string_view error_code_name(ErrorCode code);

// True for failures caused by the numbers rather than by the caller (CLI exit 2).
bool is_numerical(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace mrld
