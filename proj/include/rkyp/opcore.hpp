#pragma once

// Dense operator utilities on finite-dimensional complex Hilbert spaces:
// square roots and Moore-Penrose inverses of nonnegative operators, the
// minimal-contraction factorization of a nonnegative 2x2 block operator and
// its Schur complement, and the Loewner order.
//
// Everything is built on one primitive, the Hermitian eigendecomposition.
// Exact ranges do not exist in floating point, so every range/kernel decision
// goes through a relative rank tolerance.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "rkyp/error.hpp"

namespace rkyp {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using Index = Eigen::Index;

inline constexpr double kDefaultHermTol = 1e-12;

/// Default relative rank tolerance for an operator of dimension `n`. The
/// factor 16 leaves headroom over the eigensolver's backward error, which on
/// products like G G^* is routinely a few n eps ||A||.
inline double default_rank_tol(Index n) {
  return 16.0 * static_cast<double>(std::max<Index>(n, 1)) *
         std::numeric_limits<double>::epsilon();
}

/// Spectral norm (largest singular value). Zero for empty matrices.
inline double op_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

/// A selfadjoint operator on C^n.
///
/// Construction checks that the entries are Hermitian to within `herm_tol`
/// relative to the largest absolute entry, then stores the exactly
/// symmetrized matrix (M + M^*) / 2.
class HermitianOperator {
 public:
  HermitianOperator() = default;

  explicit HermitianOperator(const Matrix& entries,
                             double herm_tol = kDefaultHermTol) {
    internal::throw_unless(entries.rows() == entries.cols(),
                           ErrorCode::kDimensionMismatch,
                           "Hermitian operator must be square, got " +
                               std::to_string(entries.rows()) + "x" +
                               std::to_string(entries.cols()));
    const double scale =
        entries.size() == 0 ? 0.0 : entries.cwiseAbs().maxCoeff();
    const double asym =
        entries.size() == 0 ? 0.0
                            : (entries - entries.adjoint()).cwiseAbs().maxCoeff();
    internal::throw_unless(asym <= herm_tol * std::max(scale, 1e-300) ||
                               asym == 0.0,
                           ErrorCode::kNotHermitian,
                           "matrix is not Hermitian (asymmetry " +
                               std::to_string(asym) + ")");
    m_ = (entries + entries.adjoint()) / 2.0;
  }

  /// For operators computed from products such as A^* H A: symmetrizes
  /// without the relative Hermitian check, which is meaningless when every
  /// entry is roundoff.
  static HermitianOperator Symmetrize(const Matrix& entries) {
    internal::throw_unless(entries.rows() == entries.cols(),
                           ErrorCode::kDimensionMismatch,
                           "Hermitian operator must be square");
    HermitianOperator out;
    out.m_ = (entries + entries.adjoint()) / 2.0;
    return out;
  }

  static HermitianOperator Identity(Index n) {
    return HermitianOperator(Matrix::Identity(n, n));
  }
  static HermitianOperator Zero(Index n) {
    return HermitianOperator(Matrix::Zero(n, n));
  }

  const Matrix& matrix() const { return m_; }
  Index dim() const { return m_.rows(); }
  double norm() const { return op_norm(m_); }

  friend HermitianOperator operator+(const HermitianOperator& a,
                                     const HermitianOperator& b) {
    return HermitianOperator::Symmetrize(a.m_ + b.m_);
  }
  friend HermitianOperator operator-(const HermitianOperator& a,
                                     const HermitianOperator& b) {
    return HermitianOperator::Symmetrize(a.m_ - b.m_);
  }
  friend HermitianOperator operator*(double s, const HermitianOperator& a) {
    return HermitianOperator::Symmetrize(s * a.m_);
  }

 private:
  Matrix m_;
};

/// Eigenvalues in ascending order and the matching orthonormal eigenvectors.
struct Spectrum {
  Eigen::VectorXd values;
  Matrix vectors;

  double max_abs() const {
    return values.size() == 0 ? 0.0 : values.cwiseAbs().maxCoeff();
  }
  double min() const {
    return values.size() == 0 ? 0.0 : values(0);
  }
};

inline Spectrum spectrum(const HermitianOperator& a) {
  if (a.dim() == 0) return {Eigen::VectorXd(0), Matrix(0, 0)};
  Eigen::SelfAdjointEigenSolver<Matrix> es(a.matrix());
  return {es.eigenvalues(), es.eigenvectors()};
}

inline double min_eigenvalue(const HermitianOperator& a) {
  return spectrum(a).min();
}

namespace internal {

inline Matrix from_spectrum(const Matrix& vectors,
                            const Eigen::VectorXd& values) {
  return vectors * values.cast<Complex>().asDiagonal() * vectors.adjoint();
}

inline double resolve_rank_tol(std::optional<double> rank_tol, Index n) {
  return rank_tol.value_or(default_rank_tol(n));
}

// Rank cut-off: eigenvalues above this are treated as nonzero. `reference`
// lets callers supply a natural scale when the operator itself may be
// entirely roundoff (e.g. I - D^*D - B^*HB at a boundary solution).
inline double rank_threshold(const Spectrum& s, double rank_tol,
                             double reference) {
  return rank_tol * std::max(s.max_abs(), reference);
}

inline void require_psd(const Spectrum& s, double rank_tol, double reference,
                        ErrorCode code, const char* what) {
  const double floor = -rank_threshold(s, rank_tol, reference);
  if (s.min() < floor) {
    throw Error(code, std::string(what) + " has eigenvalue " +
                          std::to_string(s.min()) + " below " +
                          std::to_string(floor));
  }
}

}  // namespace internal

/// Unique nonnegative square root. Eigenvalues within rank_tol ||A|| of zero
/// are set to zero, so the root has the same numerical kernel as A; anything
/// below -rank_tol ||A|| raises NotPSD.
inline HermitianOperator psd_sqrt(const HermitianOperator& a,
                                  std::optional<double> rank_tol = {},
                                  double reference = 0.0) {
  const double tol = internal::resolve_rank_tol(rank_tol, a.dim());
  const Spectrum s = spectrum(a);
  internal::require_psd(s, tol, reference, ErrorCode::kNotPSD, "operator");
  const double cut = internal::rank_threshold(s, tol, reference);
  Eigen::VectorXd roots(s.values.size());
  for (Index i = 0; i < s.values.size(); ++i) {
    roots(i) = s.values(i) > cut ? std::sqrt(s.values(i)) : 0.0;
  }
  return HermitianOperator::Symmetrize(internal::from_spectrum(s.vectors, roots));
}

/// Moore-Penrose inverse of a nonnegative operator: eigenvalues above
/// rank_tol * max(lambda_max, reference) are inverted, the rest are zeroed.
inline HermitianOperator psd_pseudo_inverse(const HermitianOperator& a,
                                            std::optional<double> rank_tol = {},
                                            double reference = 0.0) {
  const double tol = internal::resolve_rank_tol(rank_tol, a.dim());
  const Spectrum s = spectrum(a);
  internal::require_psd(s, tol, reference, ErrorCode::kNotPSD, "operator");
  const double cut = internal::rank_threshold(s, tol, reference);
  Eigen::VectorXd inv(s.values.size());
  for (Index i = 0; i < s.values.size(); ++i) {
    inv(i) = s.values(i) > cut && s.values(i) > 0.0 ? 1.0 / s.values(i) : 0.0;
  }
  return HermitianOperator::Symmetrize(internal::from_spectrum(s.vectors, inv));
}

/// Orthonormal basis of the numerical range of a nonnegative operator.
inline Matrix range_basis(const HermitianOperator& a,
                          std::optional<double> rank_tol = {},
                          double reference = 0.0) {
  const double tol = internal::resolve_rank_tol(rank_tol, a.dim());
  const Spectrum s = spectrum(a);
  const double cut = internal::rank_threshold(s, tol, reference);
  Index first = 0;
  while (first < s.values.size() &&
         !(s.values(first) > cut && s.values(first) > 0.0)) {
    ++first;
  }
  return s.vectors.rightCols(s.values.size() - first);
}

/// Orthonormal basis of the numerical kernel (complement of range_basis).
inline Matrix kernel_basis(const HermitianOperator& a,
                           std::optional<double> rank_tol = {},
                           double reference = 0.0) {
  const double tol = internal::resolve_rank_tol(rank_tol, a.dim());
  const Spectrum s = spectrum(a);
  const double cut = internal::rank_threshold(s, tol, reference);
  Index first = 0;
  while (first < s.values.size() &&
         !(s.values(first) > cut && s.values(first) > 0.0)) {
    ++first;
  }
  return s.vectors.leftCols(first);
}

/// Orthogonal projector onto the closure of the range.
inline Matrix range_projector(const HermitianOperator& a,
                              std::optional<double> rank_tol = {},
                              double reference = 0.0) {
  const Matrix basis = range_basis(a, rank_tol, reference);
  return basis * basis.adjoint();
}

inline Index numerical_rank(const HermitianOperator& a,
                            std::optional<double> rank_tol = {},
                            double reference = 0.0) {
  return range_basis(a, rank_tol, reference).cols();
}

/// ||(A^{1/2})^{[-1]} - (A^{[-1]})^{1/2}||.
///
/// The square root halves the spectral gap in log scale, so the pseudo-inverse
/// of A^{1/2} uses sqrt(rank_tol); that makes both sides take the same rank
/// decision.
inline double sqrt_pinv_commute_check(const HermitianOperator& a,
                                      std::optional<double> rank_tol = {}) {
  const double tol = internal::resolve_rank_tol(rank_tol, a.dim());
  const HermitianOperator root = psd_sqrt(a, tol);
  const Matrix lhs = psd_pseudo_inverse(root, std::sqrt(tol)).matrix();
  const Matrix rhs = psd_sqrt(psd_pseudo_inverse(a, tol), tol).matrix();
  return op_norm(lhs - rhs);
}

/// T = [[alpha, beta], [beta^*, delta]] on X (+) U with dim X = n, dim U = m.
struct BlockNonneg {
  HermitianOperator alpha;
  Matrix beta;  // n x m, an operator U -> X
  HermitianOperator delta;

  BlockNonneg(HermitianOperator a, Matrix b, HermitianOperator d)
      : alpha(std::move(a)), beta(std::move(b)), delta(std::move(d)) {
    internal::throw_unless(
        beta.rows() == alpha.dim() && beta.cols() == delta.dim(),
        ErrorCode::kDimensionMismatch,
        "beta must be " + std::to_string(alpha.dim()) + "x" +
            std::to_string(delta.dim()));
  }

  /// Splits a Hermitian operator on C^{n+m} into blocks.
  static BlockNonneg FromAssembled(const HermitianOperator& t, Index n) {
    internal::throw_unless(n >= 0 && n <= t.dim(),
                           ErrorCode::kDimensionMismatch,
                           "block split out of range");
    const Index m = t.dim() - n;
    const Matrix& e = t.matrix();
    return BlockNonneg(HermitianOperator::Symmetrize(e.topLeftCorner(n, n)),
                       e.topRightCorner(n, m),
                       HermitianOperator::Symmetrize(e.bottomRightCorner(m, m)));
  }

  Index n() const { return alpha.dim(); }
  Index m() const { return delta.dim(); }

  HermitianOperator assembled() const {
    Matrix t(n() + m(), n() + m());
    t << alpha.matrix(), beta, beta.adjoint(), delta.matrix();
    return HermitianOperator::Symmetrize(t);
  }

  /// <T [x; u], [x; u]>.
  double quadratic_form(const Vector& x, const Vector& u) const {
    const Complex v = x.dot(alpha.matrix() * x) +
                      2.0 * std::real(x.dot(beta * u)) +
                      u.dot(delta.matrix() * u);
    return v.real();
  }
};

/// Minimal contraction gamma: X -> U and the Schur complement of T supported
/// by X.
struct SchurFactorization {
  Matrix gamma;  // m x n
  HermitianOperator complement;
  Index rank_alpha = 0;
  Index rank_delta = 0;
  /// ||beta^* - delta^{1/2} gamma alpha^{1/2}||
  double factor_residual = 0.0;
};

/// Computes the unique contraction gamma with ker gamma containing ker alpha,
/// range gamma inside the closure of range delta, and
/// beta^* = delta^{1/2} gamma alpha^{1/2}, together with
/// Delta = alpha^{1/2} (I - gamma^* gamma) alpha^{1/2}.
///
/// Throws NotNonneg when T is not nonnegative and RangeViolation when beta^*
/// does not factor through the square roots to within the tolerance.
inline SchurFactorization minimal_contraction(const BlockNonneg& t,
                                              std::optional<double> rank_tol = {}) {
  const Index n = t.n();
  const Index m = t.m();
  const double tol = internal::resolve_rank_tol(rank_tol, n + m);

  const HermitianOperator assembled = t.assembled();
  const double t_norm = assembled.norm();
  {
    const Spectrum s = spectrum(assembled);
    internal::require_psd(s, tol, 0.0, ErrorCode::kNotNonneg,
                          "block operator T");
  }
  // The diagonal blocks are compressions of T; checking them against ||T||
  // keeps the decision consistent with the one above.
  internal::require_psd(spectrum(t.alpha), tol, t_norm, ErrorCode::kNotNonneg,
                        "alpha");
  internal::require_psd(spectrum(t.delta), tol, t_norm, ErrorCode::kNotNonneg,
                        "delta");

  const HermitianOperator alpha_root = psd_sqrt(t.alpha, tol, t_norm);
  const HermitianOperator delta_root = psd_sqrt(t.delta, tol, t_norm);
  const double root_tol = std::sqrt(tol);
  const double root_ref = std::sqrt(t_norm);
  const Matrix alpha_root_pinv =
      psd_pseudo_inverse(alpha_root, root_tol, root_ref).matrix();
  const Matrix delta_root_pinv =
      psd_pseudo_inverse(delta_root, root_tol, root_ref).matrix();
  const Matrix range_alpha = range_projector(t.alpha, tol, t_norm);
  const Matrix range_delta = range_projector(t.delta, tol, t_norm);

  SchurFactorization out;
  out.rank_alpha = numerical_rank(t.alpha, tol, t_norm);
  out.rank_delta = numerical_rank(t.delta, tol, t_norm);
  out.gamma = range_delta *
              (delta_root_pinv * t.beta.adjoint() * alpha_root_pinv) *
              range_alpha;

  const Matrix reconstructed =
      delta_root.matrix() * out.gamma * alpha_root.matrix();
  out.factor_residual = op_norm(t.beta.adjoint() - reconstructed);
  // Entries of beta live at scale ||T||; the residual of a genuine
  // factorization is roundoff amplified through the pseudo-inverses of the
  // square roots, i.e. at most ~sqrt(tol) ||T||.
  const double allowed = std::sqrt(tol) * std::max(t_norm, 1e-300);
  if (out.factor_residual > allowed) {
    throw Error(ErrorCode::kRangeViolation,
                "beta^* does not factor as delta^{1/2} gamma alpha^{1/2} "
                "(residual " +
                    std::to_string(out.factor_residual) + ")");
  }

  const Matrix defect = Matrix::Identity(n, n) - out.gamma.adjoint() * out.gamma;
  out.complement = HermitianOperator::Symmetrize(
      alpha_root.matrix() * defect * alpha_root.matrix());
  return out;
}

/// Independent oracle for the Schur complement: the infimum over u of
/// <T [x; u], [x; u]>.
///
/// Scans a grid of `grid_steps` points per real coordinate of u inside the
/// ball of radius `grid_radius`, then refines from the best grid point.
/// Refinement solves delta u = -beta^* x by Cholesky when delta is safely
/// invertible and by conjugate gradients otherwise; neither path touches the
/// eigendecomposition used by minimal_contraction.
inline double brute_force_infimum(const BlockNonneg& t, const Vector& x,
                                  double grid_radius, int grid_steps,
                                  std::optional<double> rank_tol = {}) {
  internal::throw_unless(x.size() == t.n(), ErrorCode::kDimensionMismatch,
                         "x has wrong dimension");
  const Index m = t.m();
  const double tol = internal::resolve_rank_tol(rank_tol, t.n() + m);
  internal::require_psd(spectrum(t.assembled()), tol, 0.0,
                        ErrorCode::kNotNonneg, "block operator T");

  double best = t.quadratic_form(x, Vector::Zero(m));
  Vector best_u = Vector::Zero(m);
  if (m == 0) return best;

  // Coarse grid over the 2m real coordinates.
  const Index dims = 2 * m;
  const int steps = std::max(grid_steps, 2);
  std::vector<int> idx(static_cast<std::size_t>(dims), 0);
  Vector u(m);
  while (true) {
    double r2 = 0.0;
    for (Index k = 0; k < m; ++k) {
      const double re = -grid_radius + 2.0 * grid_radius * idx[2 * k] / (steps - 1);
      const double im =
          -grid_radius + 2.0 * grid_radius * idx[2 * k + 1] / (steps - 1);
      u(k) = Complex(re, im);
      r2 += re * re + im * im;
    }
    if (r2 <= grid_radius * grid_radius) {
      const double v = t.quadratic_form(x, u);
      if (v < best) {
        best = v;
        best_u = u;
      }
    }
    Index d = 0;
    while (d < dims && ++idx[d] == steps) idx[d++] = 0;
    if (d == dims) break;
  }

  // Local refinement. The quadratic is convex, so the stationary point is
  // the global minimizer.
  const Matrix& delta = t.delta.matrix();
  const Vector rhs = -(t.beta.adjoint() * x);
  Vector refined;
  Eigen::LLT<Matrix> llt(delta);
  const double delta_scale = delta.cwiseAbs().maxCoeff();
  bool use_llt = llt.info() == Eigen::Success && delta_scale > 0.0;
  if (use_llt) {
    const double min_pivot = llt.matrixLLT().diagonal().cwiseAbs().minCoeff();
    use_llt = min_pivot * min_pivot > 1e-8 * delta_scale;
  }
  if (use_llt) {
    refined = llt.solve(rhs);
  } else {
    // Conjugate gradients on delta u = rhs from the best grid point; the
    // system is consistent because beta^* x lies in range(delta) when T >= 0.
    refined = best_u;
    Vector r = rhs - delta * refined;
    Vector p = r;
    double rr = r.squaredNorm();
    const double stop = 1e-30 * std::max(1.0, rhs.squaredNorm());
    for (Index it = 0; it < 20 * m && rr > stop; ++it) {
      const Vector dp = delta * p;
      const double curvature = std::real(p.dot(dp));
      if (curvature <= 0.0) break;
      const double step = rr / curvature;
      refined += step * p;
      r -= step * dp;
      const double rr_next = r.squaredNorm();
      p = r + (rr_next / rr) * p;
      rr = rr_next;
    }
  }
  return std::min(best, t.quadratic_form(x, refined));
}

enum class LoewnerOrder { kLessEq, kGreaterEq, kEqual, kIncomparable };

inline const char* loewner_order_name(LoewnerOrder o) {
  switch (o) {
    case LoewnerOrder::kLessEq: return "LessEq";
    case LoewnerOrder::kGreaterEq: return "GreaterEq";
    case LoewnerOrder::kEqual: return "Equal";
    case LoewnerOrder::kIncomparable: return "Incomparable";
  }
  return "Incomparable";
}

/// Loewner comparison: H1 <= H2 iff H2 - H1 is nonnegative.
inline LoewnerOrder loewner_compare(const HermitianOperator& h1,
                                    const HermitianOperator& h2, double tol) {
  internal::throw_unless(h1.dim() == h2.dim(), ErrorCode::kDimensionMismatch,
                         "Loewner comparison of operators of different size");
  const HermitianOperator diff = h2 - h1;
  if (diff.norm() <= tol) return LoewnerOrder::kEqual;
  const Spectrum s = spectrum(diff);
  if (s.min() >= -tol) return LoewnerOrder::kLessEq;
  if (s.values(s.values.size() - 1) <= tol) return LoewnerOrder::kGreaterEq;
  return LoewnerOrder::kIncomparable;
}

}  // namespace rkyp
