#pragma once

#include <stdexcept>
#include <string>

namespace hybrid_servo {

enum class ErrorCode {
  kNonFinite,
  kDimensionMismatch,
  kInconsistentSystem,
  kSingularSystem,
  kInfeasibleDimensions,
  kInconsistentGoal,
  kEmptyBasis,
  kSingularTransform,
  kInfeasibleLP,
  kInvalidArgument,
  kParse,
};

const char* ErrorCodeName(ErrorCode code);

// Single exception type for the library; callers branch on code().
class SolverError : public std::runtime_error {
 public:
  SolverError(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace hybrid_servo
