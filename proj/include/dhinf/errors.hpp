#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dhinf {

enum class ErrorCode {
  kDimensionMismatch,
  kInvalidArgument,
  kSingularStateMap,
  kSingularFeedthrough,
  kNotStable,
  kPoleNearUnitCircle,
  kNoStabilizingSolution,
  kNotPositiveDefinite,
  kNormBound,
  kNumericalBreakdown,
  kInternalInconsistency,
  kParse,
};

std::string_view to_string(ErrorCode code);

/// Single exception type for every numerical and contract failure in the
/// library. The code is stable and machine-checkable; the message carries
/// the diagnostic detail (stage label, offending value).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline void require(bool ok, ErrorCode code, const std::string& what) {
  if (!ok) throw Error(code, what);
}

}  // namespace dhinf
