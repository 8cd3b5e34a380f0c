#pragma once

// Riccati residual operators for the scattering supply rate
//
//   alpha(H) = H - A^* H A - C^* C
//   beta(H)  = D^* C + B^* H A
//   delta(H) = I - D^* D - B^* H B
//
// and the two equivalent descriptions of the Riccati inequality: the
// alpha/beta/delta route (delta >= 0, range inclusion, Schur surplus >= 0)
// and the KYP linear matrix inequality L(H) >= 0.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "rkyp/error.hpp"
#include "rkyp/opcore.hpp"
#include "rkyp/sysmodel.hpp"

namespace rkyp {

/// Tolerance family shared by the Riccati, solver and analysis layers.
/// `scaled(t)` derives the whole family from a single base value.
struct Tolerances {
  double tol = 1e-9;             // PSD / equality decisions, times the scale
  double rank_tol = 1e-10;       // relative rank cut for delta(H)
  double pd_tol = 1e-12;         // positive definiteness of H
  double boundary_band = 1e-6;   // route disagreements inside this band are
                                 // tolerance-boundary cases, not bugs
  double minimality_tol = kDefaultMinimalityTol;

  static Tolerances scaled(double t) {
    Tolerances out;
    out.tol = t;
    out.rank_tol = t * 0.1;
    out.pd_tol = std::min(1e-12, t * 1e-3);
    out.boundary_band = std::max(1e-6, t * 1e3);
    out.minimality_tol = std::min(kDefaultMinimalityTol, t * 0.1);
    return out;
  }
};

/// A positive definite storage operator with cached H^{1/2} and H^{-1/2}.
/// Immutable after construction.
class StorageOperator {
 public:
  explicit StorageOperator(const HermitianOperator& h, double pd_tol = 1e-12)
      : h_(h) {
    const Spectrum s = spectrum(h);
    internal::throw_unless(h.dim() > 0, ErrorCode::kNotPD,
                           "storage operator on a zero-dimensional space");
    internal::throw_unless(
        s.min() > pd_tol * s.max_abs(), ErrorCode::kNotPD,
        "storage operator has eigenvalue " + std::to_string(s.min()) +
            ", not positive definite");
    const Eigen::VectorXd roots = s.values.cwiseSqrt();
    sqrt_ = HermitianOperator::Symmetrize(internal::from_spectrum(s.vectors, roots));
    inv_sqrt_ = HermitianOperator::Symmetrize(
        internal::from_spectrum(s.vectors, roots.cwiseInverse()));
    inverse_ = HermitianOperator::Symmetrize(
        internal::from_spectrum(s.vectors, s.values.cwiseInverse()));
  }

  explicit StorageOperator(const Matrix& h, double pd_tol = 1e-12)
      : StorageOperator(HermitianOperator::Symmetrize(h), pd_tol) {}

  const HermitianOperator& H() const { return h_; }
  const HermitianOperator& sqrt() const { return sqrt_; }
  const HermitianOperator& inv_sqrt() const { return inv_sqrt_; }
  const HermitianOperator& inverse() const { return inverse_; }
  const Matrix& matrix() const { return h_.matrix(); }
  Index dim() const { return h_.dim(); }

 private:
  HermitianOperator h_;
  HermitianOperator sqrt_;
  HermitianOperator inv_sqrt_;
  HermitianOperator inverse_;
};

struct RiccatiData {
  HermitianOperator alpha;  // n x n
  Matrix beta;              // m x n
  HermitianOperator delta;  // m x m
  /// ||(I - P_range(delta)) beta||
  double range_inclusion_residual = 0.0;
  /// Natural scale of delta, 1 + ||D||^2 + ||B^* H B||; rank decisions on
  /// delta are relative to max(||delta||, delta_scale).
  double delta_scale = 1.0;
};

namespace internal {

inline void check_dims(const SystemRealization& sys, Index h_dim) {
  throw_unless(h_dim == sys.state_dim(), ErrorCode::kDimensionMismatch,
               "storage operator is " + std::to_string(h_dim) +
                   "-dimensional, state space is " +
                   std::to_string(sys.state_dim()) + "-dimensional");
}

// Scale used to turn the absolute tolerance into a threshold that is
// invariant under rescaling of H.
inline double riccati_scale(const SystemRealization& sys, const Matrix& h) {
  const double hn = op_norm(h);
  const double an = op_norm(sys.A()), bn = op_norm(sys.B());
  const double cn = op_norm(sys.C()), dn = op_norm(sys.D());
  return 1.0 + hn * (1.0 + an * an + bn * bn) + cn * cn + dn * dn;
}

}  // namespace internal

inline RiccatiData riccati_data(const SystemRealization& sys, const Matrix& h,
                                const Tolerances& tols = {}) {
  internal::check_dims(sys, h.rows());
  const Matrix& a = sys.A();
  const Matrix& b = sys.B();
  const Matrix& c = sys.C();
  const Matrix& d = sys.D();
  const Index m = sys.input_dim();

  const Matrix bhb = b.adjoint() * h * b;
  RiccatiData out{
      HermitianOperator::Symmetrize(h - a.adjoint() * h * a - c.adjoint() * c),
      d.adjoint() * c + b.adjoint() * h * a,
      HermitianOperator::Symmetrize(Matrix::Identity(m, m) - d.adjoint() * d - bhb),
  };
  const double dn = op_norm(d);
  out.delta_scale = 1.0 + dn * dn + op_norm(bhb);
  const Matrix proj = range_projector(out.delta, tols.rank_tol, out.delta_scale);
  out.range_inclusion_residual =
      op_norm(out.beta - proj * out.beta);
  return out;
}

inline RiccatiData riccati_data(const SystemRealization& sys,
                                const StorageOperator& h,
                                const Tolerances& tols = {}) {
  return riccati_data(sys, h.matrix(), tols);
}

/// delta(H)^{[-1]} with the Riccati rank policy. Eigenvalues of delta that are
/// negative but inside the rank cut are treated as zero.
inline Matrix delta_pseudo_inverse(const RiccatiData& data,
                                   const Tolerances& tols = {}) {
  const Spectrum s = spectrum(data.delta);
  const double cut = internal::rank_threshold(s, tols.rank_tol, data.delta_scale);
  Eigen::VectorXd inv(s.values.size());
  for (Index i = 0; i < s.values.size(); ++i) {
    inv(i) = s.values(i) > cut ? 1.0 / s.values(i) : 0.0;
  }
  return internal::from_spectrum(s.vectors, inv);
}

/// S(H) = alpha - beta^* delta^{[-1]} beta without precondition checks.
inline HermitianOperator surplus_of(const RiccatiData& data,
                                    const Tolerances& tols = {}) {
  return HermitianOperator::Symmetrize(data.alpha.matrix() -
                           data.beta.adjoint() *
                               delta_pseudo_inverse(data, tols) * data.beta);
}

/// Largest beta component outside range(delta) that is still compatible with
/// L(H) >= -tol: if <delta v, v> = eps and <beta x, v> = b, nonnegativity of
/// the 2x2 compression needs b^2 <= ||alpha|| (eps + tol).
inline double c3_threshold(const RiccatiData& data, double scaled_tol,
                           const Tolerances& tols = {}) {
  const Spectrum s = spectrum(data.delta);
  const double cut = internal::rank_threshold(s, tols.rank_tol, data.delta_scale);
  return std::sqrt((1.0 + data.alpha.norm()) * (scaled_tol + cut));
}

/// S(H) = alpha - beta^* delta^{[-1]} beta. H solves the Riccati inequality
/// iff this is nonnegative, given delta >= 0 and range(beta) inside
/// range(delta).
inline HermitianOperator inequality_surplus(const SystemRealization& sys,
                                            const StorageOperator& h,
                                            const Tolerances& tols = {}) {
  const RiccatiData data = riccati_data(sys, h, tols);
  const double thr = tols.tol * internal::riccati_scale(sys, h.matrix());
  const double delta_min = min_eigenvalue(data.delta);
  internal::throw_unless(delta_min >= -thr, ErrorCode::kDeltaNotPSD,
                         "delta(H) has eigenvalue " + std::to_string(delta_min));
  internal::throw_unless(
      data.range_inclusion_residual <= c3_threshold(data, thr, tols),
      ErrorCode::kC3Violation,
      "range of beta(H) is not contained in range of delta(H) (residual " +
          std::to_string(data.range_inclusion_residual) + ")");
  return surplus_of(data, tols);
}

/// K(H)[x; u] = ||H^{1/2} x||^2 + ||u||^2 - ||H^{1/2}(Ax + Bu)||^2
///              - ||Cx + Du||^2.
inline double kyp_form(const SystemRealization& sys, const StorageOperator& h,
                       const Vector& x, const Vector& u) {
  internal::check_dims(sys, h.dim());
  internal::throw_unless(
      x.size() == sys.state_dim() && u.size() == sys.input_dim(),
      ErrorCode::kDimensionMismatch, "kyp_form: vector dimensions");
  const Matrix& root = h.sqrt().matrix();
  return (root * x).squaredNorm() + u.squaredNorm() -
         (root * (sys.A() * x + sys.B() * u)).squaredNorm() -
         (sys.C() * x + sys.D() * u).squaredNorm();
}

/// L(H) = [[H - A^*HA - C^*C, -(A^*HB + C^*D)],
///         [-(B^*HA + D^*C),   I - B^*HB - D^*D]].
inline HermitianOperator kyp_lmi(const SystemRealization& sys, const Matrix& h) {
  internal::check_dims(sys, h.rows());
  const Index n = sys.state_dim();
  const Index m = sys.input_dim();
  const Matrix& a = sys.A();
  const Matrix& b = sys.B();
  const Matrix& c = sys.C();
  const Matrix& d = sys.D();
  Matrix l(n + m, n + m);
  l.topLeftCorner(n, n) = h - a.adjoint() * h * a - c.adjoint() * c;
  l.topRightCorner(n, m) = -(a.adjoint() * h * b + c.adjoint() * d);
  l.bottomLeftCorner(m, n) = -(b.adjoint() * h * a + d.adjoint() * c);
  l.bottomRightCorner(m, m) =
      Matrix::Identity(m, m) - b.adjoint() * h * b - d.adjoint() * d;
  return HermitianOperator::Symmetrize(l);
}

inline HermitianOperator kyp_lmi(const SystemRealization& sys,
                                 const StorageOperator& h) {
  return kyp_lmi(sys, h.matrix());
}

/// sigma_H = (H^{1/2} A H^{-1/2}, H^{1/2} B, C H^{-1/2}, D).
struct AssociatedSystem {
  SystemRealization sigma_h;
  /// max of ||A_H H^{1/2} - H^{1/2} A||, ||B_H - H^{1/2} B||,
  /// ||C_H H^{1/2} - C||.
  double similarity_residual = 0.0;
};

inline AssociatedSystem associated_system(const SystemRealization& sys,
                                          const StorageOperator& h) {
  internal::check_dims(sys, h.dim());
  const Matrix& s = h.sqrt().matrix();
  const Matrix& s_inv = h.inv_sqrt().matrix();
  AssociatedSystem out{SystemRealization(s * sys.A() * s_inv, s * sys.B(),
                                         sys.C() * s_inv, sys.D())};
  const SystemRealization& g = out.sigma_h;
  out.similarity_residual =
      std::max({op_norm(g.A() * s - s * sys.A()), op_norm(g.B() - s * sys.B()),
                op_norm(g.C() * s - sys.C())});
  return out;
}

/// True iff sigma_H is passive, i.e. ||M(sigma_H)|| <= 1 + tol.
inline bool h_passivity_check(const SystemRealization& sys,
                              const StorageOperator& h, double tol = 1e-9) {
  return is_passive(associated_system(sys, h).sigma_h, tol).passive;
}

struct MembershipDiagnostics {
  double threshold = 0.0;          // tol scaled to the problem
  double delta_min_eig = 0.0;
  double surplus_min_eig = 0.0;    // of S(H), computed with clamped delta
  double equality_residual = 0.0;  // ||S(H)||
  double lmi_min_eig = 0.0;
  double c3_residual = 0.0;
  double c3_threshold = 0.0;
  bool associated_minimal = false;
  bool route_riccati = false;  // delta >= 0, C3, S(H) >= 0
  bool route_lmi = false;      // L(H) >= 0
  bool routes_agree = true;
  bool boundary_case = false;
};

struct MembershipVerdict {
  bool in_ri = false;
  bool in_re = false;
  bool in_ri_circ = false;
  MembershipDiagnostics diagnostics;
};

/// Decides H in RI, RE and RI° by both routes.
///
/// When the routes disagree inside the boundary band the LMI route decides and
/// the verdict is flagged `boundary_case`; a disagreement away from every
/// boundary throws InconsistentRoutes.
inline MembershipVerdict membership(const SystemRealization& sys,
                                    const StorageOperator& h,
                                    const Tolerances& tols = {}) {
  const RiccatiData data = riccati_data(sys, h, tols);
  const double scale = internal::riccati_scale(sys, h.matrix());
  MembershipVerdict v;
  MembershipDiagnostics& dg = v.diagnostics;
  dg.threshold = tols.tol * scale;

  const Spectrum delta_spec = spectrum(data.delta);
  dg.delta_min_eig = delta_spec.min();
  dg.c3_residual = data.range_inclusion_residual;
  dg.c3_threshold = c3_threshold(data, dg.threshold, tols);
  const HermitianOperator surplus = surplus_of(data, tols);
  dg.surplus_min_eig = min_eigenvalue(surplus);
  dg.equality_residual = surplus.norm();
  dg.route_riccati = dg.delta_min_eig >= -dg.threshold &&
                     dg.c3_residual <= dg.c3_threshold &&
                     dg.surplus_min_eig >= -dg.threshold;

  dg.lmi_min_eig = min_eigenvalue(kyp_lmi(sys, h));
  dg.route_lmi = dg.lmi_min_eig >= -dg.threshold;

  dg.routes_agree = dg.route_riccati == dg.route_lmi;
  if (!dg.routes_agree) {
    const double band = tols.boundary_band * scale;
    bool near_boundary = std::abs(dg.lmi_min_eig) <= band ||
                         std::abs(dg.surplus_min_eig) <= band ||
                         std::abs(dg.c3_residual - dg.c3_threshold) <= band;
    for (Index i = 0; i < delta_spec.values.size(); ++i) {
      near_boundary = near_boundary || std::abs(delta_spec.values(i)) <= band;
    }
    if (!near_boundary) {
      throw Error(ErrorCode::kInconsistentRoutes,
                  "Riccati route says " +
                      std::string(dg.route_riccati ? "in" : "out") +
                      ", LMI route says " +
                      std::string(dg.route_lmi ? "in" : "out") +
                      " (LMI min eig " + std::to_string(dg.lmi_min_eig) +
                      ", surplus min eig " +
                      std::to_string(dg.surplus_min_eig) + ")");
    }
    dg.boundary_case = true;
  }

  v.in_ri = dg.route_lmi;
  v.in_re = v.in_ri && dg.equality_residual <= dg.threshold;
  dg.associated_minimal =
      is_minimal(associated_system(sys, h).sigma_h, tols.minimality_tol).minimal;
  v.in_ri_circ = v.in_ri && dg.associated_minimal;
  return v;
}

/// Norm of the Schur complement, supported by X, of
/// R = I - M(sigma_H)^* M(sigma_H). It vanishes iff H solves the Riccati
/// equality. Throws NotInRI when H does not solve the inequality.
inline double equality_gap(const SystemRealization& sys,
                           const StorageOperator& h,
                           const Tolerances& tols = {}) {
  const MembershipVerdict v = membership(sys, h, tols);
  internal::throw_unless(v.in_ri, ErrorCode::kNotInRI,
                         "equality gap requested for H outside RI");
  const Matrix mh = system_matrix(associated_system(sys, h).sigma_h).M;
  const Index dim = mh.cols();
  const HermitianOperator r(Matrix::Identity(dim, dim) - mh.adjoint() * mh);
  const BlockNonneg blocks = BlockNonneg::FromAssembled(r, sys.state_dim());
  // R is nonnegative only up to the membership threshold, so its rank
  // decisions use the same tolerance.
  const double rank_tol =
      std::max(default_rank_tol(dim), tols.tol);
  return minimal_contraction(blocks, rank_tol).complement.norm();
}

}  // namespace rkyp
