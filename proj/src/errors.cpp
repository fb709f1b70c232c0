#include "hybrid_servo/errors.h"

namespace hybrid_servo {

const char* ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNonFinite: return "NonFinite";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kInconsistentSystem: return "InconsistentSystem";
    case ErrorCode::kSingularSystem: return "SingularSystem";
    case ErrorCode::kInfeasibleDimensions: return "InfeasibleDimensions";
    case ErrorCode::kInconsistentGoal: return "InconsistentGoal";
    case ErrorCode::kEmptyBasis: return "EmptyBasis";
    case ErrorCode::kSingularTransform: return "SingularTransform";
    case ErrorCode::kInfeasibleLP: return "InfeasibleLP";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kParse: return "Parse";
  }
  return "Unknown";
}

}  // namespace hybrid_servo
