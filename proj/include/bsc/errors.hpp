#pragma once

#include <stdexcept>
#include <string>

namespace bsc {

enum class ErrorCode {
  kDimensionMismatch,
  kNonFinite,
  kInvalidArgument,
  kInvalidExtremal,
  kLinearizationResidual,
  kEmptyPolytope,
  kUnbounded,
  kXiUndefined,
  kEmptyCone,
  kNoVertices,
  kConfig,
  kUnknownFixture,
};

const char* error_code_name(ErrorCode code);

// All library failures carry a machine-readable code next to the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace bsc
