#include "bsc/errors.hpp"

namespace bsc {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDimensionMismatch: return "DIMENSION_MISMATCH";
    case ErrorCode::kNonFinite: return "NON_FINITE";
    case ErrorCode::kInvalidArgument: return "INVALID_ARGUMENT";
    case ErrorCode::kInvalidExtremal: return "INVALID_EXTREMAL";
    case ErrorCode::kLinearizationResidual: return "LINEARIZATION_RESIDUAL";
    case ErrorCode::kEmptyPolytope: return "EMPTY_POLYTOPE";
    case ErrorCode::kUnbounded: return "UNBOUNDED";
    case ErrorCode::kXiUndefined: return "XI_UNDEFINED";
    case ErrorCode::kEmptyCone: return "EMPTY_CONE";
    case ErrorCode::kNoVertices: return "NO_VERTICES";
    case ErrorCode::kConfig: return "CONFIG";
    case ErrorCode::kUnknownFixture: return "UNKNOWN_FIXTURE";
  }
  return "UNKNOWN";
}

}  // namespace bsc
