#pragma once

// Boundary behaviour of the transfer function on the unit circle and the
// uniqueness certificates available without defect-function machinery:
// inner and co-inner transfer functions have a one-point RI°.

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "rkyp/error.hpp"
#include "rkyp/opcore.hpp"
#include "rkyp/riccati.hpp"
#include "rkyp/solver.hpp"
#include "rkyp/sysmodel.hpp"

namespace rkyp {

inline constexpr int kDefaultCircleGrid = 4096;

struct CircleSample {
  double angle = 0.0;
  Matrix value;
  double defect_right = 0.0;  // ||I_U - theta^* theta||
  double defect_left = 0.0;   // ||I_Y - theta theta^*||
};

/// theta sampled on a uniform angle grid of the unit circle. A certificate on
/// the grid only, not a proof.
struct CircleProfile {
  std::vector<CircleSample> samples;
  double max_defect_right = 0.0;
  double max_defect_left = 0.0;
  double min_defect_right = 0.0;
  double min_defect_left = 0.0;
  Index input_dim = 0;
  Index output_dim = 0;
};

inline CircleProfile circle_profile(const SystemRealization& sys,
                                    int grid_steps = kDefaultCircleGrid,
                                    double pole_tol = 1e-10) {
  internal::throw_unless(grid_steps >= 1, ErrorCode::kDimensionMismatch,
                         "grid_steps must be positive");
  CircleProfile out;
  out.input_dim = sys.input_dim();
  out.output_dim = sys.output_dim();
  out.samples.reserve(static_cast<std::size_t>(grid_steps));
  const Matrix eye_u = Matrix::Identity(sys.input_dim(), sys.input_dim());
  const Matrix eye_y = Matrix::Identity(sys.output_dim(), sys.output_dim());
  for (int k = 0; k < grid_steps; ++k) {
    const double angle = 2.0 * std::numbers::pi * k / grid_steps;
    TransferSample t;
    try {
      t = transfer_eval(sys, std::polar(1.0, angle), pole_tol);
    } catch (const SingularResolventError& e) {
      throw SingularResolventError(
          ErrorCode::kPoleOnCircle, e.lambda(),
          "transfer function has a pole on the unit circle near angle " +
              std::to_string(angle));
    }
    CircleSample s;
    s.angle = angle;
    s.value = t.value;
    s.defect_right = op_norm(eye_u - t.value.adjoint() * t.value);
    s.defect_left = op_norm(eye_y - t.value * t.value.adjoint());
    if (k == 0) {
      out.min_defect_right = s.defect_right;
      out.min_defect_left = s.defect_left;
    }
    out.max_defect_right = std::max(out.max_defect_right, s.defect_right);
    out.max_defect_left = std::max(out.max_defect_left, s.defect_left);
    out.min_defect_right = std::min(out.min_defect_right, s.defect_right);
    out.min_defect_left = std::min(out.min_defect_left, s.defect_left);
    out.samples.push_back(std::move(s));
  }
  return out;
}

/// theta^* theta = I on the grid.
inline bool is_inner(const CircleProfile& profile, double tol = 1e-9) {
  return profile.max_defect_right <= tol;
}

/// theta theta^* = I on the grid.
inline bool is_coinner(const CircleProfile& profile, double tol = 1e-9) {
  return profile.max_defect_left <= tol;
}

enum class UniquenessVerdict { kUniqueSingleton, kUnknown };
enum class UniquenessReason { kInnerFr0, kCoInnerFl0, kScalarModulusOne, kNone };

inline const char* uniqueness_verdict_name(UniquenessVerdict v) {
  return v == UniquenessVerdict::kUniqueSingleton ? "UniqueSingleton" : "Unknown";
}

inline const char* uniqueness_reason_name(UniquenessReason r) {
  switch (r) {
    case UniquenessReason::kInnerFr0: return "InnerFr0";
    case UniquenessReason::kCoInnerFl0: return "CoInnerFl0";
    case UniquenessReason::kScalarModulusOne: return "ScalarModulusOne";
    case UniquenessReason::kNone: return "None";
  }
  return "None";
}

struct UniquenessCertificate {
  UniquenessVerdict verdict = UniquenessVerdict::kUnknown;
  UniquenessReason reason = UniquenessReason::kNone;
  /// ||delta_sigma(H_min)|| on the inner path, or
  /// ||delta_{sigma^*}(H_max^{-1})|| on the co-inner path.
  std::optional<double> delta_at_solution;
  /// The single element of RI°, when it was computed.
  std::optional<Matrix> solution;
  /// Whether the delta norm above is zero to tolerance. Expected for inner
  /// theta; for co-inner theta it is the adjoint's delta that vanishes.
  std::optional<bool> delta_vanishes;
};

struct UniquenessOptions {
  double defect_tol = 1e-9;
  double delta_tol = 1e-8;
  SolverConfig solver;
};

/// Certifies that RI° is a singleton when the defect functions are trivially
/// zero: theta inner, theta co-inner, or theta scalar with |theta| = 1 on the
/// circle. Anything else is reported as Unknown.
inline UniquenessCertificate uniqueness_certificate(
    const SystemRealization& sys, const CircleProfile& profile,
    const UniquenessOptions& opts = {}) {
  internal::throw_unless(is_minimal(sys, opts.solver.tols.minimality_tol).minimal,
                         ErrorCode::kNotMinimal,
                         "uniqueness certificate needs a minimal realization");
  UniquenessCertificate cert;
  const bool scalar = sys.input_dim() == 1 && sys.output_dim() == 1;
  if (is_inner(profile, opts.defect_tol)) {
    cert.verdict = UniquenessVerdict::kUniqueSingleton;
    cert.reason = UniquenessReason::kInnerFr0;
  } else if (is_coinner(profile, opts.defect_tol)) {
    cert.verdict = UniquenessVerdict::kUniqueSingleton;
    cert.reason = UniquenessReason::kCoInnerFl0;
  } else if (scalar && profile.max_defect_right <= opts.defect_tol) {
    cert.verdict = UniquenessVerdict::kUniqueSingleton;
    cert.reason = UniquenessReason::kScalarModulusOne;
  }
  if (cert.verdict != UniquenessVerdict::kUniqueSingleton) return cert;

  if (cert.reason == UniquenessReason::kCoInnerFl0) {
    const ExtremalSolution top = maximal_solution(sys, opts.solver);
    const RiccatiData dual = riccati_data(
        adjoint(sys), internal::hermitian_part(top.h.inverse().matrix()),
        opts.solver.tols);
    cert.delta_at_solution = dual.delta.norm();
    cert.solution = top.h.matrix();
  } else {
    const ExtremalSolution bottom = minimal_solution(sys, opts.solver);
    cert.delta_at_solution = riccati_data(sys, bottom.h, opts.solver.tols).delta.norm();
    cert.solution = bottom.h.matrix();
  }
  cert.delta_vanishes = *cert.delta_at_solution <= opts.delta_tol;
  return cert;
}

}  // namespace rkyp
