#include "mrld/error.hpp"

namespace mrld {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidInput: return "INVALID_INPUT";
    case ErrorCode::kParse: return "PARSE_ERROR";
    case ErrorCode::kEmptyIntersection: return "EMPTY_INTERSECTION";
    case ErrorCode::kUndefinedEstimate: return "UNDEFINED_ESTIMATE";
    case ErrorCode::kSingularWeightMatrix: return "SINGULAR";
    case ErrorCode::kNotPositiveDefinite: return "NOT_POSITIVE_DEFINITE";
    case ErrorCode::kSingularDesign: return "SINGULAR_DESIGN";
    case ErrorCode::kZeroVariance: return "ZERO_VARIANCE";
    case ErrorCode::kNonFiniteEigenvalue: return "NON_FINITE_EIGENVALUE";
    case ErrorCode::kNotPsd: return "NOT_PSD";
    case ErrorCode::kMissingMaf: return "MISSING_MAF";
    case ErrorCode::kMissingSampleSize: return "MISSING_SAMPLE_SIZE";
    case ErrorCode::kMonomorphicPanel: return "MONOMORPHIC_PANEL";
    case ErrorCode::kEmptySelection: return "EMPTY_SELECTION";
  }
  return "UNKNOWN";
}

bool is_numerical(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUndefinedEstimate:
    case ErrorCode::kSingularWeightMatrix:
    case ErrorCode::kNotPositiveDefinite:
    case ErrorCode::kSingularDesign:
    case ErrorCode::kZeroVariance:
    case ErrorCode::kNonFiniteEigenvalue:
    case ErrorCode::kNotPsd:
    case ErrorCode::kMonomorphicPanel:
    case ErrorCode::kEmptySelection:
      return true;
    default:
      return false;
  }
}

}  // namespace mrld
