#pragma once

// Solutions of the Riccati equality
//
//   F(H) = alpha(H) - beta(H)^* delta(H)^{[-1]} beta(H) = 0
//
// for small state dimensions, and the extremal elements of the solution set
// of the Riccati inequality: the minimal element H_min (reached by the
// monotone fixed-point iteration from 0) and the maximal element
// H_max = (minimal element for the adjoint system)^{-1}.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/QR>

#include "rkyp/error.hpp"
#include "rkyp/opcore.hpp"
#include "rkyp/riccati.hpp"
#include "rkyp/sysmodel.hpp"

namespace rkyp {

struct SolverConfig {
  Index max_dim = 6;
  int starts = 48;
  double iter_tol = 1e-13;
  double dedup_tol = 1e-7;
  std::uint64_t seed = 1;
  int max_iter = 10000;
  int newton_max_iter = 100;
  /// Accepted rejection samples used by the ordering certificates.
  int ri_samples = 100;
  Tolerances tols;
};

struct MemberProvenance {
  std::string route;  // "scalar", "scalar-boundary", "newton", "stratified"
  double residual = 0.0;
  int iterations = 0;
  int start = -1;  // index of the start that produced it, -1 if none
};

struct SolutionSet {
  std::vector<StorageOperator> members;
  std::vector<MemberProvenance> provenance;
  /// comparisons[i][j] = loewner_compare(members[i], members[j]).
  std::vector<std::vector<LoewnerOrder>> comparisons;
  std::optional<std::size_t> minimal_index;
  std::optional<std::size_t> maximal_index;
  int delta_singular_restarts = 0;
  std::vector<std::string> warnings;
};

namespace internal {

// Real coordinates of an n x n Hermitian matrix: the diagonal, then
// (Re, Im) of each strictly upper entry in row-major order.
inline Index hermitian_param_count(Index n) { return n * n; }

inline Eigen::VectorXd to_params(const Matrix& h) {
  const Index n = h.rows();
  Eigen::VectorXd v(n * n);
  Index k = 0;
  for (Index i = 0; i < n; ++i) v(k++) = h(i, i).real();
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      v(k++) = h(i, j).real();
      v(k++) = h(i, j).imag();
    }
  }
  return v;
}

inline Matrix from_params(const Eigen::VectorXd& v, Index n) {
  Matrix h = Matrix::Zero(n, n);
  Index k = 0;
  for (Index i = 0; i < n; ++i) h(i, i) = v(k++);
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      const Complex z(v(k), v(k + 1));
      k += 2;
      h(i, j) = z;
      h(j, i) = std::conj(z);
    }
  }
  return h;
}

inline Matrix hermitian_part(const Matrix& m) { return (m + m.adjoint()) / 2.0; }

inline Matrix riccati_residual(const SystemRealization& sys, const Matrix& h,
                               const Tolerances& tols) {
  const RiccatiData data = riccati_data(sys, hermitian_part(h), tols);
  return surplus_of(data, tols).matrix();
}

inline double residual_norm(const SystemRealization& sys, const Matrix& h,
                            const Tolerances& tols) {
  return op_norm(riccati_residual(sys, h, tols));
}

// Jacobian of F in Hermitian coordinates, with K = delta^{[-1]}:
//   dF[E] = E - A^*EA - (B^*EA)^* K beta - beta^* K (B^*EA)
//           - beta^* K (B^*EB) K beta.
inline Eigen::MatrixXd riccati_jacobian(const SystemRealization& sys,
                                        const RiccatiData& data,
                                        const Tolerances& tols) {
  const Index n = sys.state_dim();
  const Index np = hermitian_param_count(n);
  const Matrix k = delta_pseudo_inverse(data, tols);
  const Matrix k_beta = k * data.beta;
  const Matrix& a = sys.A();
  const Matrix& b = sys.B();
  Eigen::MatrixXd jac(np, np);
  for (Index j = 0; j < np; ++j) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(np);
    e(j) = 1.0;
    const Matrix dir = from_params(e, n);
    const Matrix d_beta = b.adjoint() * dir * a;
    const Matrix df = dir - a.adjoint() * dir * a -
                      d_beta.adjoint() * k_beta - k_beta.adjoint() * d_beta -
                      k_beta.adjoint() * (b.adjoint() * dir * b) * k_beta;
    jac.col(j) = to_params(hermitian_part(df));
  }
  return jac;
}

struct LocalSolve {
  Matrix h;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
  bool delta_singular = false;  // delta lost rank along the path
};

inline bool finite_and_bounded(const Matrix& h) {
  return h.allFinite() && h.cwiseAbs().maxCoeff() < 1e12;
}

// Damped Newton on F(H) = 0 over Hermitian H.
inline LocalSolve newton_riccati(const SystemRealization& sys, Matrix h,
                                 const SolverConfig& cfg) {
  const Index n = sys.state_dim();
  LocalSolve out;
  h = hermitian_part(h);
  double res = residual_norm(sys, h, cfg.tols);
  for (int it = 0; it < cfg.newton_max_iter; ++it) {
    out.iterations = it;
    const double target = 1e-13 * (1.0 + op_norm(h));
    if (res <= target) {
      out.converged = true;
      break;
    }
    const RiccatiData data = riccati_data(sys, h, cfg.tols);
    if (numerical_rank(data.delta, cfg.tols.rank_tol, data.delta_scale) <
        data.delta.dim()) {
      out.delta_singular = true;
    }
    const Eigen::VectorXd f = to_params(surplus_of(data, cfg.tols).matrix());
    const Eigen::MatrixXd jac = riccati_jacobian(sys, data, cfg.tols);
    const Eigen::VectorXd step =
        jac.completeOrthogonalDecomposition().solve(-f);
    if (!step.allFinite()) break;
    double t = 1.0;
    Matrix next;
    double next_res = res;
    for (int ls = 0; ls < 30; ++ls, t *= 0.5) {
      next = h + from_params(t * step, n);
      if (!finite_and_bounded(next)) continue;
      next_res = residual_norm(sys, next, cfg.tols);
      if (next_res < res) break;
    }
    if (!(next_res < res) || !finite_and_bounded(next)) break;
    const double moved = op_norm(next - h);
    h = next;
    res = next_res;
    if (moved <= 1e-15 * (1.0 + op_norm(h))) {
      out.converged = res <= 1e-10 * (1.0 + op_norm(h));
      break;
    }
  }
  out.h = h;
  out.residual = res;
  if (!out.converged) out.converged = res <= 1e-13 * (1.0 + op_norm(h));
  return out;
}

// Residual of the Riccati equality restricted to the stratum where the
// columns of `kernel` span a subspace of ker delta(H):
//   delta(H) K = 0, K^* beta(H) = 0,
//   alpha - beta^* W (W^* delta W)^{-1} W^* beta = 0, W = complement of K.
inline Eigen::VectorXd stratum_residual(const SystemRealization& sys,
                                        const Matrix& h, const Matrix& kernel,
                                        const Matrix& complement) {
  const RiccatiData data = riccati_data(sys, h);
  const Index n = sys.state_dim();
  const Index k = kernel.cols();
  Matrix s = data.alpha.matrix();
  if (complement.cols() > 0) {
    const Matrix wb = complement.adjoint() * data.beta;
    const Matrix wdw = complement.adjoint() * data.delta.matrix() * complement;
    s -= wb.adjoint() * wdw.ldlt().solve(wb);
  }
  const Matrix kd = kernel.adjoint() * data.delta.matrix();
  const Matrix kb = kernel.adjoint() * data.beta;
  Eigen::VectorXd r(n * n + 2 * k * (kd.cols() + kb.cols()));
  r.head(n * n) = to_params(hermitian_part(s));
  Index pos = n * n;
  for (const Matrix* blk : {&kd, &kb}) {
    for (Index i = 0; i < blk->rows(); ++i) {
      for (Index j = 0; j < blk->cols(); ++j) {
        r(pos++) = (*blk)(i, j).real();
        r(pos++) = (*blk)(i, j).imag();
      }
    }
  }
  return r;
}

// Gauss-Newton with a central-difference Jacobian on stratum_residual.
inline LocalSolve stratified_solve(const SystemRealization& sys, Matrix h,
                                   const Matrix& kernel, int max_iter) {
  const Index n = sys.state_dim();
  const Index m = sys.input_dim();
  Matrix complement(m, 0);
  if (kernel.cols() < m) {
    Eigen::HouseholderQR<Matrix> qr(kernel);
    const Matrix q = qr.householderQ() * Matrix::Identity(m, m);
    complement = q.rightCols(m - kernel.cols());
  }
  LocalSolve out;
  h = hermitian_part(h);
  auto eval = [&](const Matrix& x) {
    return stratum_residual(sys, x, kernel, complement);
  };
  Eigen::VectorXd r = eval(h);
  for (int it = 0; it < max_iter && r.allFinite(); ++it) {
    out.iterations = it + 1;
    if (r.norm() <= 1e-13 * (1.0 + op_norm(h))) break;
    const Index np = hermitian_param_count(n);
    const double step = 1e-6 * (1.0 + op_norm(h));
    Eigen::MatrixXd jac(r.size(), np);
    for (Index j = 0; j < np; ++j) {
      Eigen::VectorXd e = Eigen::VectorXd::Zero(np);
      e(j) = step;
      jac.col(j) = (eval(h + from_params(e, n)) - eval(h - from_params(e, n))) /
                   (2.0 * step);
    }
    const Eigen::VectorXd d = jac.completeOrthogonalDecomposition().solve(-r);
    if (!d.allFinite()) break;
    double t = 1.0;
    bool improved = false;
    for (int ls = 0; ls < 30; ++ls, t *= 0.5) {
      const Matrix next = h + from_params(t * d, n);
      if (!finite_and_bounded(next)) continue;
      const Eigen::VectorXd rn = eval(next);
      if (rn.allFinite() && rn.norm() < r.norm()) {
        h = next;
        r = rn;
        improved = true;
        break;
      }
    }
    if (!improved) break;
  }
  out.h = h;
  out.residual = r.allFinite() ? r.norm() : std::numeric_limits<double>::infinity();
  out.converged = out.residual <= 1e-10 * (1.0 + op_norm(h));
  return out;
}

// Eigenvectors of delta(H) with eigenvalues inside the boundary band.
inline Matrix near_kernel(const SystemRealization& sys, const Matrix& h,
                          const Tolerances& tols) {
  const RiccatiData data = riccati_data(sys, hermitian_part(h), tols);
  const Spectrum s = spectrum(data.delta);
  const double band = tols.boundary_band * data.delta_scale;
  Index count = 0;
  while (count < s.values.size() && std::abs(s.values(count)) <= band) ++count;
  return s.vectors.leftCols(count);
}

inline Matrix random_hermitian(Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Matrix g(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) g(i, j) = Complex(normal(rng), normal(rng));
  }
  return hermitian_part(g);
}

inline Matrix random_psd(Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Matrix g(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) g(i, j) = Complex(normal(rng), normal(rng));
  }
  return g * g.adjoint() / static_cast<double>(n);
}

inline bool is_pd(const Matrix& h, double pd_tol) {
  if (!h.allFinite()) return false;
  const Spectrum s = spectrum(HermitianOperator::Symmetrize(hermitian_part(h)));
  return s.min() > pd_tol * s.max_abs();
}

struct FixedPointResult {
  Matrix h;
  int iterations = 0;
};

// H_{k+1} = A^*H_kA + C^*C + beta(H_k)^* delta(H_k)^{[-1]} beta(H_k), H_0 = 0.
inline FixedPointResult minimal_fixed_point(const SystemRealization& sys,
                                            const SolverConfig& cfg) {
  const Index n = sys.state_dim();
  Matrix h = Matrix::Zero(n, n);
  for (int it = 1; it <= cfg.max_iter; ++it) {
    const RiccatiData data = riccati_data(sys, h, cfg.tols);
    const double floor = -cfg.tols.tol * riccati_scale(sys, h);
    if (min_eigenvalue(data.delta) < floor) {
      throw Error(ErrorCode::kIterationDiverged,
                  "delta(H_k) lost positivity at iteration " +
                      std::to_string(it));
    }
    const Matrix next = hermitian_part(
        sys.A().adjoint() * h * sys.A() + sys.C().adjoint() * sys.C() +
        data.beta.adjoint() * delta_pseudo_inverse(data, cfg.tols) * data.beta);
    if (!finite_and_bounded(next)) {
      throw Error(ErrorCode::kIterationDiverged,
                  "fixed-point iterate blew up at iteration " +
                      std::to_string(it));
    }
    const double moved = op_norm(next - h);
    h = next;
    if (moved <= cfg.iter_tol * (1.0 + op_norm(h))) return {h, it};
  }
  throw Error(ErrorCode::kIterationDiverged,
              "fixed-point iteration did not settle in " +
                  std::to_string(cfg.max_iter) + " steps");
}

// Newton or stratified polish that is only accepted if it reduces the
// residual without leaving the neighbourhood of the start.
inline Matrix polish(const SystemRealization& sys, const Matrix& h,
                     const SolverConfig& cfg, double* residual) {
  const double base = residual_norm(sys, h, cfg.tols);
  const double radius = 1e-5 * (1.0 + op_norm(h));
  Matrix best = h;
  double best_res = base;
  const Matrix kernel = near_kernel(sys, h, cfg.tols);
  LocalSolve local = kernel.cols() == 0
                         ? newton_riccati(sys, h, cfg)
                         : stratified_solve(sys, h, kernel, 20);
  if (local.h.allFinite() && op_norm(local.h - h) <= radius) {
    const double res = residual_norm(sys, local.h, cfg.tols);
    if (res < best_res) {
      best = hermitian_part(local.h);
      best_res = res;
    }
  }
  if (residual) *residual = best_res;
  return best;
}

inline bool lex_less(const Matrix& a, const Matrix& b) {
  for (Index i = 0; i < a.size(); ++i) {
    const Complex x = a.data()[i], y = b.data()[i];
    if (x.real() != y.real()) return x.real() < y.real();
    if (x.imag() != y.imag()) return x.imag() < y.imag();
  }
  return false;
}

inline void sort_members(SolutionSet& set) {
  std::vector<std::size_t> order(set.members.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    const double ti = set.members[i].matrix().trace().real();
    const double tj = set.members[j].matrix().trace().real();
    if (std::abs(ti - tj) > 1e-9 * (1.0 + std::abs(ti) + std::abs(tj))) {
      return ti < tj;
    }
    return lex_less(set.members[i].matrix(), set.members[j].matrix());
  });
  SolutionSet sorted;
  for (std::size_t i : order) {
    sorted.members.push_back(set.members[i]);
    sorted.provenance.push_back(set.provenance[i]);
  }
  set.members = std::move(sorted.members);
  set.provenance = std::move(sorted.provenance);
}

// Adds `h` to the set if it is a validated Riccati equality solution and not a
// duplicate. Returns true when added.
inline bool try_add_member(const SystemRealization& sys, const Matrix& h,
                           MemberProvenance prov, const SolverConfig& cfg,
                           SolutionSet& set) {
  const Matrix herm = hermitian_part(h);
  if (!is_pd(herm, cfg.tols.pd_tol)) return false;
  const StorageOperator candidate(herm, cfg.tols.pd_tol);
  if (!membership(sys, candidate, cfg.tols).in_re) return false;
  const double dedup = cfg.dedup_tol * (1.0 + std::abs(herm.trace().real()));
  for (const StorageOperator& existing : set.members) {
    if (op_norm(existing.matrix() - herm) <= dedup) return false;
  }
  set.members.push_back(candidate);
  set.provenance.push_back(std::move(prov));
  return true;
}

inline double loewner_tol(const Tolerances& tols, const Matrix& a,
                          const Matrix& b) {
  return tols.tol * (1.0 + std::max(op_norm(a), op_norm(b)));
}

}  // namespace internal

/// Fills the pairwise Loewner comparisons and flags a member that is below
/// (above) every other one as minimal (maximal).
inline SolutionSet order_solutions(SolutionSet set, const Tolerances& tols = {}) {
  const std::size_t k = set.members.size();
  set.comparisons.assign(k, std::vector<LoewnerOrder>(k, LoewnerOrder::kEqual));
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      if (i == j) continue;
      const Matrix& a = set.members[i].matrix();
      const Matrix& b = set.members[j].matrix();
      set.comparisons[i][j] = loewner_compare(set.members[i].H(),
                                              set.members[j].H(),
                                              internal::loewner_tol(tols, a, b));
    }
  }
  set.minimal_index.reset();
  set.maximal_index.reset();
  for (std::size_t i = 0; i < k; ++i) {
    bool below_all = true, above_all = true;
    for (std::size_t j = 0; j < k; ++j) {
      const LoewnerOrder o = set.comparisons[i][j];
      below_all = below_all && (o == LoewnerOrder::kLessEq || o == LoewnerOrder::kEqual);
      above_all = above_all && (o == LoewnerOrder::kGreaterEq || o == LoewnerOrder::kEqual);
    }
    if (below_all && !set.minimal_index) set.minimal_index = i;
    if (above_all && !set.maximal_index) set.maximal_index = i;
  }
  return set;
}

/// Closed-form Riccati equality for n = m = p = 1.
///
/// Clearing the denominator of alpha(h) - |beta(h)|^2 / delta(h) = 0 gives a
/// polynomial of degree at most two. Its positive roots with delta(h) > 0 are
/// solutions; roots on delta(h) = 0 and the boundary point itself are kept
/// only if alpha and beta vanish there as well.
inline SolutionSet solve_re_scalar(const SystemRealization& sys,
                                   const Tolerances& tols = {}) {
  internal::throw_unless(sys.state_dim() == 1 && sys.input_dim() == 1 &&
                             sys.output_dim() == 1,
                         ErrorCode::kNotScalar,
                         "solve_re_scalar needs a system with n = m = p = 1");
  const Complex a = sys.A()(0, 0), b = sys.B()(0, 0);
  const Complex c = sys.C()(0, 0), d = sys.D()(0, 0);
  // alpha(h) = a1 h + a0, delta(h) = d0 + d1 h, beta(h) = b0 + b1 h.
  const double a1 = 1.0 - std::norm(a), a0 = -std::norm(c);
  const double d0 = 1.0 - std::norm(d), d1 = -std::norm(b);
  const Complex b0 = std::conj(d) * c, b1 = std::conj(b) * a;
  const double q2 = a1 * d1 - std::norm(b1);
  const double q1 = a1 * d0 + a0 * d1 - 2.0 * std::real(std::conj(b0) * b1);
  const double q0 = a0 * d0 - std::norm(b0);

  std::vector<double> roots;
  const double coef_scale = std::max({std::abs(q2), std::abs(q1), std::abs(q0)});
  if (std::abs(q2) > 1e-14 * coef_scale) {
    double disc = q1 * q1 - 4.0 * q2 * q0;
    if (disc < 0.0 && disc > -1e-12 * q1 * q1 - 1e-300) disc = 0.0;
    if (disc >= 0.0) {
      const double sq = std::sqrt(disc);
      const double qq = -0.5 * (q1 + (q1 >= 0.0 ? sq : -sq));
      if (qq != 0.0) {
        roots.push_back(qq / q2);
        roots.push_back(q0 / qq);
      } else {
        roots.push_back(0.0);  // q1 = q0 = 0: double root at zero
      }
    }
  } else if (std::abs(q1) > 1e-14 * coef_scale) {
    roots.push_back(-q0 / q1);
  }

  SolutionSet set;
  if (coef_scale == 0.0) {
    set.warnings.push_back(
        "the scalar Riccati polynomial vanishes identically; only the "
        "delta = 0 boundary point was examined");
  }
  const double boundary_tol = tols.tol * (1.0 + std::abs(a1) + std::abs(a0));
  auto admit = [&](double h, const char* route) {
    if (!(h > 0.0) || !std::isfinite(h)) return;
    const double delta = d0 + d1 * h;
    const double cut = tols.rank_tol * (1.0 + std::norm(d) + std::norm(b) * h);
    if (delta < -cut) return;
    if (delta <= cut) {
      const double alpha = a1 * h + a0;
      if (std::abs(alpha) > boundary_tol ||
          std::abs(b0 + b1 * h) > std::sqrt(boundary_tol)) {
        return;
      }
    }
    SolverConfig cfg;
    cfg.tols = tols;
    internal::try_add_member(sys, Matrix::Constant(1, 1, h),
                             {route, 0.0, 0, -1}, cfg, set);
  };
  for (double r : roots) admit(r, "scalar");
  if (d1 != 0.0) admit(-d0 / d1, "scalar-boundary");
  for (std::size_t i = 0; i < set.members.size(); ++i) {
    set.provenance[i].residual =
        internal::residual_norm(sys, set.members[i].matrix(), tols);
  }
  internal::sort_members(set);
  return order_solutions(std::move(set), tols);
}

/// Multi-start Newton search for Riccati equality solutions, followed by a
/// pass over the strata where delta(H) is singular. Output is deterministic
/// for a fixed config: members are sorted by trace, then lexicographically.
inline SolutionSet solve_re(const SystemRealization& sys,
                            const SolverConfig& cfg = {}) {
  const Index n = sys.state_dim();
  internal::throw_unless(n >= 1 && n <= cfg.max_dim,
                         ErrorCode::kDimensionMismatch,
                         "solve_re supports 1 <= n <= " +
                             std::to_string(cfg.max_dim) + ", got n = " +
                             std::to_string(n));
  SolutionSet set;
  if (!is_minimal(sys, cfg.tols.minimality_tol).minimal) {
    set.warnings.push_back("system is not minimal; the solution set may be "
                           "degenerate");
  }

  // Starts: identity family, fixed-point estimates of the extremes, then
  // random positive definite matrices.
  std::vector<Matrix> starts;
  const Matrix eye = Matrix::Identity(n, n);
  for (double s : {1.0, 0.25, 0.5, 2.0, 4.0}) starts.push_back(s * eye);
  std::vector<Matrix> anchors;
  try {
    anchors.push_back(internal::minimal_fixed_point(sys, cfg).h);
  } catch (const Error&) {
  }
  try {
    const Matrix dual = internal::minimal_fixed_point(adjoint(sys), cfg).h;
    if (internal::is_pd(dual, cfg.tols.pd_tol)) {
      anchors.push_back(dual.inverse());
    }
  } catch (const Error&) {
  }
  std::mt19937_64 rng(cfg.seed);
  for (const Matrix& anchor : anchors) {
    starts.push_back(anchor);
    for (int k = 0; k < 3; ++k) {
      starts.push_back(anchor + 0.1 * (1.0 + op_norm(anchor)) *
                                    internal::random_hermitian(n, rng));
    }
  }
  std::lognormal_distribution<double> spread(0.0, 1.0);
  while (static_cast<int>(starts.size()) < cfg.starts) {
    starts.push_back(spread(rng) *
                     (internal::random_psd(n, rng) + 0.1 * eye));
  }

  std::vector<Matrix> kernel_triggers = anchors;
  for (std::size_t s = 0; s < starts.size(); ++s) {
    const internal::LocalSolve local = internal::newton_riccati(sys, starts[s], cfg);
    if (local.delta_singular) ++set.delta_singular_restarts;
    if (local.converged) {
      internal::try_add_member(
          sys, local.h,
          {"newton", local.residual, local.iterations, static_cast<int>(s)},
          cfg, set);
    }
    if (local.h.allFinite() && local.residual < 1e-3 * (1.0 + op_norm(local.h))) {
      kernel_triggers.push_back(local.h);
    }
  }

  // Boundary strata: delta(H) = 0 entirely, plus every near-kernel observed
  // at an anchor or at a Newton end point.
  const Index m = sys.input_dim();
  std::vector<Matrix> kernels;
  if (m > 0) kernels.push_back(Matrix::Identity(m, m));
  for (const Matrix& h : kernel_triggers) {
    const Matrix k = internal::near_kernel(sys, h, cfg.tols);
    if (k.cols() == 0 || k.cols() == m) continue;
    bool seen = false;
    for (const Matrix& other : kernels) {
      seen = seen || (other.cols() == k.cols() &&
                      op_norm(other * other.adjoint() - k * k.adjoint()) < 1e-6);
    }
    if (!seen) kernels.push_back(k);
  }
  std::vector<Matrix> stratum_starts = {eye};
  stratum_starts.insert(stratum_starts.end(), anchors.begin(), anchors.end());
  for (const Matrix& k : kernels) {
    for (std::size_t s = 0; s < stratum_starts.size(); ++s) {
      const internal::LocalSolve local =
          internal::stratified_solve(sys, stratum_starts[s], k, 50);
      if (!local.converged) continue;
      const double res = internal::residual_norm(sys, local.h, cfg.tols);
      internal::try_add_member(sys, local.h,
                               {"stratified", res, local.iterations, -1}, cfg,
                               set);
    }
  }

  if (set.members.empty()) {
    throw Error(ErrorCode::kNoConvergence,
                "no Riccati equality solution found from " +
                    std::to_string(starts.size()) + " starts");
  }
  internal::sort_members(set);
  return order_solutions(std::move(set), cfg.tols);
}

/// Draws members of RI by rejection: Hermitian and nonnegative perturbations
/// of the anchors and of convex combinations of anchor pairs, kept when
/// positive definite with L(H) >= 0. RI is convex in H, so combinations of
/// members stay inside.
inline std::vector<Matrix> sample_ri_members(const SystemRealization& sys,
                                             const std::vector<Matrix>& anchors,
                                             int count, std::uint64_t seed,
                                             const Tolerances& tols = {}) {
  std::vector<Matrix> out;
  if (anchors.empty() || count <= 0) return out;
  const Index n = sys.state_dim();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick(0, anchors.size() - 1);
  const double scales[] = {1e-3, 1e-2, 1e-1, 0.3};
  const long max_draws = 200L * count;
  for (long draw = 0; draw < max_draws && static_cast<int>(out.size()) < count;
       ++draw) {
    Matrix base = anchors[pick(rng)];
    if (anchors.size() > 1 && draw % 2 == 1) {
      const double w = unit(rng);
      base = w * base + (1.0 - w) * anchors[pick(rng)];
    }
    const double t = scales[draw % 4] * (1.0 + op_norm(base));
    Matrix dir = draw % 3 == 0 ? internal::random_hermitian(n, rng)
                               : internal::random_psd(n, rng);
    dir /= std::max(op_norm(dir), 1e-300);
    const double sign = draw % 3 == 2 ? -1.0 : 1.0;
    const Matrix h = internal::hermitian_part(base + sign * t * dir);
    if (!internal::is_pd(h, tols.pd_tol)) continue;
    if (min_eigenvalue(kyp_lmi(sys, h)) < 0.0) continue;
    out.push_back(h);
  }
  return out;
}

/// Ordering certificate attached to an extremal solution.
struct ExtremalCertificate {
  bool in_re = false;
  bool in_ri = false;
  int fixed_point_iterations = 0;
  double residual = 0.0;       // ||F(H)|| after polish
  int re_members_checked = 0;
  int ri_samples_checked = 0;
  /// Smallest eigenvalue of (sample - H) for the minimal certificate, or of
  /// (H - sample) for the maximal one. Nonnegative up to tolerance.
  double worst_margin = 0.0;
};

struct ExtremalSolution {
  StorageOperator h;
  ExtremalCertificate certificate;
};

namespace internal {

// Checks that `h` sits below (lower = true) or above every operator in
// `others`, recording the worst margin. Throws CertificateFailed otherwise.
inline void certify_order(const Matrix& h, const std::vector<Matrix>& others,
                          bool lower, const Tolerances& tols,
                          ExtremalCertificate& cert, const char* what) {
  for (const Matrix& o : others) {
    const Matrix diff = lower ? Matrix(o - h) : Matrix(h - o);
    const double margin = min_eigenvalue(HermitianOperator::Symmetrize(hermitian_part(diff)));
    cert.worst_margin = std::min(cert.worst_margin, margin);
    if (margin < -loewner_tol(tols, h, o)) {
      throw Error(ErrorCode::kCertificateFailed,
                  std::string(what) + " is not " +
                      (lower ? "below" : "above") +
                      " a sampled member (margin " + std::to_string(margin) +
                      ")");
    }
  }
}

inline std::vector<Matrix> member_matrices(const SolutionSet& set) {
  std::vector<Matrix> out;
  for (const StorageOperator& h : set.members) out.push_back(h.matrix());
  return out;
}

inline SolutionSet solve_re_any(const SystemRealization& sys,
                                const SolverConfig& cfg) {
  if (sys.state_dim() == 1 && sys.input_dim() == 1 && sys.output_dim() == 1) {
    return solve_re_scalar(sys, cfg.tols);
  }
  return solve_re(sys, cfg);
}

}  // namespace internal

/// Minimal element of RI for a minimal system: the monotone fixed-point
/// iteration from 0, polished, then certified against the Riccati equality
/// solutions and against rejection-sampled RI members.
inline ExtremalSolution minimal_solution(const SystemRealization& sys,
                                         const SolverConfig& cfg = {}) {
  internal::throw_unless(is_minimal(sys, cfg.tols.minimality_tol).minimal,
                         ErrorCode::kNotMinimal,
                         "minimal_solution needs a minimal realization");
  const internal::FixedPointResult fp = internal::minimal_fixed_point(sys, cfg);
  ExtremalCertificate cert;
  cert.fixed_point_iterations = fp.iterations;
  const Matrix h = internal::polish(sys, fp.h, cfg, &cert.residual);
  if (!internal::is_pd(h, cfg.tols.pd_tol)) {
    throw Error(ErrorCode::kCertificateFailed,
                "fixed-point limit is not positive definite");
  }
  const StorageOperator out(h, cfg.tols.pd_tol);
  const MembershipVerdict v = membership(sys, out, cfg.tols);
  cert.in_ri = v.in_ri;
  cert.in_re = v.in_re;
  if (!v.in_re) {
    throw Error(ErrorCode::kCertificateFailed,
                "fixed-point limit does not solve the Riccati equality "
                "(residual " +
                    std::to_string(v.diagnostics.equality_residual) + ")");
  }

  const SolutionSet re = internal::solve_re_any(sys, cfg);
  const std::vector<Matrix> re_members = internal::member_matrices(re);
  internal::certify_order(h, re_members, true, cfg.tols, cert,
                          "minimal candidate");
  cert.re_members_checked = static_cast<int>(re_members.size());

  std::vector<Matrix> anchors = re_members;
  anchors.push_back(h);
  const std::vector<Matrix> samples =
      sample_ri_members(sys, anchors, cfg.ri_samples, cfg.seed, cfg.tols);
  internal::certify_order(h, samples, true, cfg.tols, cert, "minimal candidate");
  cert.ri_samples_checked = static_cast<int>(samples.size());
  return {out, cert};
}

/// Maximal element of RI: the inverse of the minimal element for the adjoint
/// system, certified from above against the same evidence.
inline ExtremalSolution maximal_solution(const SystemRealization& sys,
                                         const SolverConfig& cfg = {}) {
  const ExtremalSolution dual = minimal_solution(adjoint(sys), cfg);
  const Matrix h = internal::hermitian_part(dual.h.inverse().matrix());
  const StorageOperator out(h, cfg.tols.pd_tol);
  ExtremalCertificate cert;
  cert.fixed_point_iterations = dual.certificate.fixed_point_iterations;
  cert.residual = internal::residual_norm(sys, h, cfg.tols);
  const MembershipVerdict v = membership(sys, out, cfg.tols);
  cert.in_ri = v.in_ri;
  cert.in_re = v.in_re;
  if (!v.in_ri) {
    throw Error(ErrorCode::kCertificateFailed,
                "inverse of the adjoint's minimal element is not in RI");
  }
  const SolutionSet re = internal::solve_re_any(sys, cfg);
  const std::vector<Matrix> re_members = internal::member_matrices(re);
  internal::certify_order(h, re_members, false, cfg.tols, cert,
                          "maximal candidate");
  cert.re_members_checked = static_cast<int>(re_members.size());
  std::vector<Matrix> anchors = re_members;
  anchors.push_back(h);
  const std::vector<Matrix> samples =
      sample_ri_members(sys, anchors, cfg.ri_samples, cfg.seed + 1, cfg.tols);
  internal::certify_order(h, samples, false, cfg.tols, cert, "maximal candidate");
  cert.ri_samples_checked = static_cast<int>(samples.size());
  return {out, cert};
}

struct DualitySample {
  Matrix h;
  bool h_in_ri_circ = false;
  bool inverse_in_adjoint_ri_circ = false;
};

struct DualityReport {
  std::vector<DualitySample> samples;
  bool all_samples_passed = true;
  /// {H^{-1} : H in RE(sigma)} and RE(sigma^*), both sorted by trace.
  std::vector<Matrix> re_inverse_image;
  std::vector<Matrix> re_adjoint;
  /// Whether the two sets above coincide. Inversion maps RI onto the adjoint
  /// RI, but need not map RE onto the adjoint RE.
  bool re_inversion_matches = false;
};

/// Checks H in RI°(sigma) => H^{-1} in RI°(sigma^*) on sampled members, and
/// compares the inverse image of RE(sigma) with RE(sigma^*).
inline DualityReport duality_check(const SystemRealization& sys,
                                   const SolverConfig& cfg = {}) {
  const SystemRealization dual = adjoint(sys);
  DualityReport report;
  const SolutionSet re = internal::solve_re_any(sys, cfg);
  const SolutionSet re_dual = internal::solve_re_any(dual, cfg);
  for (const StorageOperator& h : re.members) {
    report.re_inverse_image.push_back(internal::hermitian_part(h.inverse().matrix()));
  }
  std::sort(report.re_inverse_image.begin(), report.re_inverse_image.end(),
            [](const Matrix& a, const Matrix& b) {
              return a.trace().real() < b.trace().real();
            });
  report.re_adjoint = internal::member_matrices(re_dual);
  report.re_inversion_matches =
      report.re_inverse_image.size() == report.re_adjoint.size();
  for (const Matrix& x : report.re_inverse_image) {
    bool found = false;
    for (const Matrix& y : report.re_adjoint) {
      found = found || op_norm(x - y) <= cfg.dedup_tol *
                                             (1.0 + std::abs(y.trace().real()));
    }
    report.re_inversion_matches = report.re_inversion_matches && found;
  }

  std::vector<Matrix> anchors = internal::member_matrices(re);
  try {
    anchors.push_back(internal::minimal_fixed_point(sys, cfg).h);
    const Matrix top = internal::minimal_fixed_point(dual, cfg).h;
    if (internal::is_pd(top, cfg.tols.pd_tol)) anchors.push_back(top.inverse());
  } catch (const Error&) {
  }
  std::vector<Matrix> usable;
  for (const Matrix& a : anchors) {
    if (internal::is_pd(a, cfg.tols.pd_tol)) usable.push_back(internal::hermitian_part(a));
  }
  const std::vector<Matrix> samples =
      sample_ri_members(sys, usable, cfg.ri_samples, cfg.seed + 2, cfg.tols);
  for (const Matrix& h : samples) {
    DualitySample s;
    s.h = h;
    const StorageOperator op(h, cfg.tols.pd_tol);
    s.h_in_ri_circ = membership(sys, op, cfg.tols).in_ri_circ;
    const StorageOperator inv(internal::hermitian_part(op.inverse().matrix()),
                              cfg.tols.pd_tol);
    s.inverse_in_adjoint_ri_circ = membership(dual, inv, cfg.tols).in_ri_circ;
    report.all_samples_passed = report.all_samples_passed &&
                                (!s.h_in_ri_circ || s.inverse_in_adjoint_ri_circ);
    report.samples.push_back(std::move(s));
  }
  return report;
}

}  // namespace rkyp
