#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rkyp {

/// Error categories raised by the library. The CLI maps each one to its own
/// exit code, so keep the numbering stable.
enum class ErrorCode : int {
  kDimensionMismatch = 1,
  kNotPSD,
  kNotPD,
  kNotNonneg,
  kRangeViolation,
  kSingularResolvent,
  kDeltaNotPSD,
  kC3Violation,
  kInconsistentRoutes,
  kNotInRI,
  kNotScalar,
  kNoConvergence,
  kDeltaSingularPath,
  kIterationDiverged,
  kCertificateFailed,
  kNotMinimal,
  kPoleOnCircle,
  kParseError,
  kNotHermitian,
};

inline std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kNotPSD: return "NotPSD";
    case ErrorCode::kNotPD: return "NotPD";
    case ErrorCode::kNotNonneg: return "NotNonneg";
    case ErrorCode::kRangeViolation: return "RangeViolation";
    case ErrorCode::kSingularResolvent: return "SingularResolvent";
    case ErrorCode::kDeltaNotPSD: return "DeltaNotPSD";
    case ErrorCode::kC3Violation: return "C3Violation";
    case ErrorCode::kInconsistentRoutes: return "InconsistentRoutes";
    case ErrorCode::kNotInRI: return "NotInRI";
    case ErrorCode::kNotScalar: return "NotScalar";
    case ErrorCode::kNoConvergence: return "NoConvergence";
    case ErrorCode::kDeltaSingularPath: return "DeltaSingularPath";
    case ErrorCode::kIterationDiverged: return "IterationDiverged";
    case ErrorCode::kCertificateFailed: return "CertificateFailed";
    case ErrorCode::kNotMinimal: return "NotMinimal";
    case ErrorCode::kPoleOnCircle: return "PoleOnCircle";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kNotHermitian: return "NotHermitian";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

namespace internal {

inline void throw_unless(bool condition, ErrorCode code,
                         const std::string& what) {
  if (!condition) throw Error(code, what);
}

}  // namespace internal
}  // namespace rkyp
