#pragma once

// Discrete-time linear systems
//
//   x_{k+1} = A x_k + B u_k,   y_k = C x_k + D u_k
//
// with state space C^n, input space C^m and output space C^p.

#include <cmath>
#include <numbers>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/LU>
#include <Eigen/SVD>

#include "rkyp/error.hpp"
#include "rkyp/opcore.hpp"

namespace rkyp {

/// The quadruple (A, B, C, D).
class SystemRealization {
 public:
  SystemRealization() = default;

  SystemRealization(Matrix a, Matrix b, Matrix c, Matrix d)
      : a_(std::move(a)), b_(std::move(b)), c_(std::move(c)), d_(std::move(d)) {
    const Index n = a_.rows();
    auto shape = [](const Matrix& m) {
      return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
    };
    internal::throw_unless(a_.cols() == n, ErrorCode::kDimensionMismatch,
                           "A must be square, got " + shape(a_));
    internal::throw_unless(b_.rows() == n, ErrorCode::kDimensionMismatch,
                           "B has " + std::to_string(b_.rows()) +
                               " rows, A is " + shape(a_));
    internal::throw_unless(c_.cols() == n, ErrorCode::kDimensionMismatch,
                           "C has " + std::to_string(c_.cols()) +
                               " columns, A is " + shape(a_));
    internal::throw_unless(
        d_.rows() == c_.rows() && d_.cols() == b_.cols(),
        ErrorCode::kDimensionMismatch,
        "D is " + shape(d_) + ", expected " + std::to_string(c_.rows()) + "x" +
            std::to_string(b_.cols()));
    for (const Matrix* m : {&a_, &b_, &c_, &d_}) {
      internal::throw_unless(m->allFinite(), ErrorCode::kDimensionMismatch,
                             "system matrices must have finite entries");
    }
  }

  const Matrix& A() const { return a_; }
  const Matrix& B() const { return b_; }
  const Matrix& C() const { return c_; }
  const Matrix& D() const { return d_; }

  Index state_dim() const { return a_.rows(); }
  Index input_dim() const { return b_.cols(); }
  Index output_dim() const { return c_.rows(); }

  bool operator==(const SystemRealization& o) const {
    return a_ == o.a_ && b_ == o.b_ && c_ == o.c_ && d_ == o.d_;
  }

 private:
  Matrix a_, b_, c_, d_;
};

/// Real-valued convenience constructor, mostly for tests and examples.
inline SystemRealization make_system(const Eigen::MatrixXd& a,
                                     const Eigen::MatrixXd& b,
                                     const Eigen::MatrixXd& c,
                                     const Eigen::MatrixXd& d) {
  return SystemRealization(a.cast<Complex>(), b.cast<Complex>(),
                           c.cast<Complex>(), d.cast<Complex>());
}

/// M(sigma) = [[A, B], [C, D]] : X (+) U -> X (+) Y.
struct SystemMatrix {
  Matrix M;
  Index n = 0, m = 0, p = 0;

  auto block_A() const { return M.topLeftCorner(n, n); }
  auto block_B() const { return M.topRightCorner(n, m); }
  auto block_C() const { return M.bottomLeftCorner(p, n); }
  auto block_D() const { return M.bottomRightCorner(p, m); }
};

inline SystemMatrix system_matrix(const SystemRealization& sys) {
  SystemMatrix out;
  out.n = sys.state_dim();
  out.m = sys.input_dim();
  out.p = sys.output_dim();
  out.M.resize(out.n + out.p, out.n + out.m);
  out.M << sys.A(), sys.B(), sys.C(), sys.D();
  return out;
}

/// Raised when I - lambda A is numerically singular. Carries the point.
class SingularResolventError : public Error {
 public:
  SingularResolventError(ErrorCode code, Complex lambda, const std::string& what)
      : Error(code, what), lambda_(lambda) {}
  Complex lambda() const { return lambda_; }

 private:
  Complex lambda_;
};

/// theta(lambda) = D + lambda C (I - lambda A)^{-1} B.
struct TransferSample {
  Complex lambda;
  Matrix value;
  double norm = 0.0;  // largest singular value of `value`
};

inline constexpr double kDefaultResolventTol = 1e-12;

inline std::string format_complex(Complex z) {
  std::ostringstream os;
  os.precision(17);
  os << "(" << z.real() << (z.imag() < 0 ? "-" : "+") << std::abs(z.imag())
     << "i)";
  return os.str();
}

inline TransferSample transfer_eval(const SystemRealization& sys,
                                    Complex lambda,
                                    double resolvent_tol = kDefaultResolventTol) {
  const Index n = sys.state_dim();
  TransferSample out;
  out.lambda = lambda;
  if (n == 0 || lambda == Complex(0.0)) {
    out.value = sys.D();
  } else {
    const Matrix resolvent = Matrix::Identity(n, n) - lambda * sys.A();
    Eigen::PartialPivLU<Matrix> lu(resolvent);
    const double rcond = lu.rcond();
    if (!(rcond > resolvent_tol)) {
      throw SingularResolventError(
          ErrorCode::kSingularResolvent, lambda,
          "I - lambda A is singular at lambda = " + format_complex(lambda) +
              " (rcond " + std::to_string(rcond) + ")");
    }
    out.value = sys.D() + lambda * sys.C() * lu.solve(sys.B());
  }
  out.norm = op_norm(out.value);
  return out;
}

namespace internal {

// Orthonormal basis of span{ A^k B : 0 <= k <= n-1 }. Cayley-Hamilton makes
// higher powers redundant.
inline Matrix krylov_range(const Matrix& a, const Matrix& b, double tol) {
  const Index n = a.rows();
  if (n == 0 || b.cols() == 0) return Matrix(n, 0);
  Matrix krylov(n, n * b.cols());
  Matrix block = b;
  for (Index k = 0; k < n; ++k) {
    krylov.middleCols(k * b.cols(), b.cols()) = block;
    block = a * block;
  }
  Eigen::JacobiSVD<Matrix> svd(krylov, Eigen::ComputeFullU);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double cut = tol * (sv.size() ? sv(0) : 0.0);
  Index rank = 0;
  while (rank < sv.size() && sv(rank) > cut && sv(rank) > 0.0) ++rank;
  return svd.matrixU().leftCols(rank);
}

}  // namespace internal

inline constexpr double kDefaultMinimalityTol = 1e-10;

/// Orthonormal basis of Im(A|B).
inline Matrix controllable_subspace(const SystemRealization& sys,
                                    double tol = kDefaultMinimalityTol) {
  return internal::krylov_range(sys.A(), sys.B(), tol);
}

/// Orthonormal basis of Ker(C|A), the orthogonal complement of Im(A^*|C^*).
inline Matrix unobservable_subspace(const SystemRealization& sys,
                                    double tol = kDefaultMinimalityTol) {
  const Index n = sys.state_dim();
  const Matrix range = internal::krylov_range(sys.A().adjoint(),
                                              sys.C().adjoint(), tol);
  if (range.cols() == 0) return Matrix::Identity(n, n);
  if (range.cols() == n) return Matrix(n, 0);
  // Complete the range basis to a unitary; the trailing columns span the
  // complement.
  Eigen::HouseholderQR<Matrix> qr(range);
  const Matrix q = qr.householderQ() * Matrix::Identity(n, n);
  return q.rightCols(n - range.cols());
}

struct MinimalityReport {
  bool minimal = false;
  Index controllable_dim = 0;
  Index unobservable_dim = 0;
};

inline MinimalityReport is_minimal(const SystemRealization& sys,
                                   double tol = kDefaultMinimalityTol) {
  MinimalityReport r;
  r.controllable_dim = controllable_subspace(sys, tol).cols();
  r.unobservable_dim = unobservable_subspace(sys, tol).cols();
  r.minimal =
      r.controllable_dim == sys.state_dim() && r.unobservable_dim == 0;
  return r;
}

/// sigma^* = (A^*, C^*, B^*, D^*): input and output spaces swap.
inline SystemRealization adjoint(const SystemRealization& sys) {
  return SystemRealization(sys.A().adjoint(), sys.C().adjoint(),
                           sys.B().adjoint(), sys.D().adjoint());
}

struct PassivityReport {
  bool passive = false;
  double margin = 0.0;  // 1 - ||M(sigma)||
};

/// Passive (scattering supply rate) iff M(sigma) is a contraction.
inline PassivityReport is_passive(const SystemRealization& sys,
                                  double tol = 1e-10) {
  const double norm = op_norm(system_matrix(sys).M);
  return {norm <= 1.0 + tol, 1.0 - norm};
}

/// Largest ||theta(lambda)|| over a polar grid of the closed disc of the
/// given radius (grid_steps radii x grid_steps angles, plus the origin).
///
/// This is a sampled certificate only. A grid point at a pole aborts with
/// SingularResolvent instead of being skipped.
inline double schur_class_margin(const SystemRealization& sys, int grid_steps,
                                 double radius,
                                 double resolvent_tol = kDefaultResolventTol) {
  internal::throw_unless(grid_steps >= 1, ErrorCode::kDimensionMismatch,
                         "grid_steps must be positive");
  double sup = transfer_eval(sys, 0.0, resolvent_tol).norm;
  for (int i = 1; i <= grid_steps; ++i) {
    const double r = radius * static_cast<double>(i) / grid_steps;
    for (int j = 0; j < grid_steps; ++j) {
      const double angle = 2.0 * std::numbers::pi * j / grid_steps;
      sup = std::max(sup, transfer_eval(sys, std::polar(r, angle),
                                        resolvent_tol).norm);
    }
  }
  return sup;
}

/// States x_0..x_N, inputs u_0..u_{N-1}, outputs y_0..y_{N-1}.
struct Trajectory {
  std::vector<Vector> states;
  std::vector<Vector> inputs;
  std::vector<Vector> outputs;
};

inline Trajectory simulate(const SystemRealization& sys, const Vector& x0,
                           const std::vector<Vector>& inputs) {
  internal::throw_unless(x0.size() == sys.state_dim(),
                         ErrorCode::kDimensionMismatch,
                         "initial state has wrong dimension");
  Trajectory t;
  t.states.reserve(inputs.size() + 1);
  t.states.push_back(x0);
  t.inputs = inputs;
  t.outputs.reserve(inputs.size());
  for (const Vector& u : inputs) {
    internal::throw_unless(u.size() == sys.input_dim(),
                           ErrorCode::kDimensionMismatch,
                           "input sample has wrong dimension");
    const Vector& x = t.states.back();
    t.outputs.push_back(sys.C() * x + sys.D() * u);
    t.states.push_back(sys.A() * x + sys.B() * u);
  }
  return t;
}

/// Per-step storage margins
///
///   d_k = ||u_k||^2 - ||y_k||^2 - (<H x_{k+1}, x_{k+1}> - <H x_k, x_k>).
///
/// If H solves the Riccati inequality every d_k is nonnegative up to roundoff.
inline std::vector<double> dissipation_check(const Trajectory& traj,
                                             const HermitianOperator& h,
                                             double pd_tol = 1e-12) {
  const Spectrum s = spectrum(h);
  internal::throw_unless(h.dim() == 0 || s.min() > pd_tol * s.max_abs(),
                         ErrorCode::kNotPD,
                         "storage operator is not positive definite");
  internal::throw_unless(
      traj.states.size() == traj.inputs.size() + 1 &&
          traj.outputs.size() == traj.inputs.size(),
      ErrorCode::kDimensionMismatch, "malformed trajectory");
  std::vector<double> margins;
  margins.reserve(traj.inputs.size());
  auto energy = [&](const Vector& x) {
    return std::real(x.dot(h.matrix() * x));
  };
  for (std::size_t k = 0; k < traj.inputs.size(); ++k) {
    margins.push_back(traj.inputs[k].squaredNorm() -
                      traj.outputs[k].squaredNorm() -
                      (energy(traj.states[k + 1]) - energy(traj.states[k])));
  }
  return margins;
}

}  // namespace rkyp
