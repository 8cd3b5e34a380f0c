// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "rkyp/analysis.hpp"
#include "rkyp/riccati.hpp"
#include "rkyp/solver.hpp"
#include "test_support.hpp"

namespace rkyp {
namespace {

using testing::scalar;

// Collects failures for one criterion; `detail` is printed next to the verdict.
struct Outcome {
  std::vector<std::string> failures;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
};

double value(const Matrix& m) { return m(0, 0).real(); }

bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }

void scalar_example(Outcome& out) {
  const SystemRealization sys = testing::scalar_example();
  const SolutionSet re = solve_re_scalar(sys);
  out.require(re.members.size() == 1, "RE is not a singleton");
  if (!re.members.empty()) {
    out.require(near(value(re.members[0].matrix()), 3.0 / 64.0, 1e-9), "RE member != 3/64");
  }
  for (double h : {3.0 / 64.0, 0.1, 0.5, 0.75}) {
    out.require(membership(sys, StorageOperator(scalar(h))).in_ri,
                "h = " + std::to_string(h) + " should be in RI");
  }
  for (double h : {0.01, 0.76}) {
    out.require(!membership(sys, StorageOperator(scalar(h))).in_ri,
                "h = " + std::to_string(h) + " should not be in RI");
  }
  const double lo = value(minimal_solution(sys).h.matrix());
  const double hi = value(maximal_solution(sys).h.matrix());
  out.require(near(lo, 3.0 / 64.0, 1e-9), "H_min != 3/64");
  out.require(near(hi, 0.75, 1e-9), "H_max != 3/4");
  out.detail << "H_min=" << lo << " H_max=" << hi;
}

void adjoint_example(Outcome& out) {
  const SystemRealization sys = adjoint(testing::scalar_example());
  const SolutionSet re = solve_re_scalar(sys);
  out.require(re.members.size() == 1, "adjoint RE is not a singleton");
  if (!re.members.empty()) {
    out.require(near(value(re.members[0].matrix()), 4.0 / 3.0, 1e-9), "adjoint RE != 4/3");
  }
  const double lo = value(minimal_solution(sys).h.matrix());
  const double hi = value(maximal_solution(sys).h.matrix());
  out.require(near(lo, 4.0 / 3.0, 1e-9), "adjoint H_min != 4/3");
  out.require(near(hi, 64.0 / 3.0, 1e-9), "adjoint H_max != 64/3");
  const DualityReport d = duality_check(testing::scalar_example());
  out.require(!d.re_inversion_matches, "inverse image of RE should differ from adjoint RE");
  out.require(d.all_samples_passed, "RI inversion failed on a sample");
  out.detail << "H_min=" << lo << " H_max=" << hi;
}

void two_state_example(Outcome& out) {
  const SystemRealization sys = testing::two_state_example();
  const testing::TwoStateSolutions s = testing::two_state_solutions(0.6, 0.8);
  const SolutionSet re = solve_re(sys);
  out.require(re.members.size() == 4, "expected 4 RE members, got " +
                                          std::to_string(re.members.size()));
  std::vector<int> match(4, -1);
  const Matrix expected[] = {s.h1, s.h2, s.h3, s.h4};
  for (std::size_t i = 0; i < re.members.size(); ++i) {
    for (int k = 0; k < 4; ++k) {
      if (op_norm(re.members[i].matrix() - expected[k]) <= 1e-8) match[k] = static_cast<int>(i);
    }
  }
  for (int k = 0; k < 4; ++k) {
    out.require(match[k] >= 0, "H" + std::to_string(k + 1) + " not found");
  }
  if (std::all_of(match.begin(), match.end(), [](int i) { return i >= 0; })) {
    out.require(re.minimal_index == static_cast<std::size_t>(match[0]), "H1 not minimal");
    out.require(re.maximal_index == static_cast<std::size_t>(match[3]), "H4 not maximal");
    out.require(re.comparisons[match[1]][match[2]] == LoewnerOrder::kIncomparable,
                "H2 and H3 should be incomparable");
  }
  out.require(op_norm(minimal_solution(sys).h.matrix() - s.h1) <= 1e-8, "H_min != H1");
  out.require(op_norm(maximal_solution(sys).h.matrix() - s.h4) <= 1e-8, "H_max != H4");
  out.detail << re.members.size() << " solutions";
}

void coinner_example(Outcome& out) {
  const SystemRealization sys = testing::coinner_example();
  const UniquenessCertificate c = uniqueness_certificate(sys, circle_profile(sys));
  out.require(c.verdict == UniquenessVerdict::kUniqueSingleton, "not a unique singleton");
  out.require(c.reason == UniquenessReason::kCoInnerFl0, "reason is not CoInnerFl0");
  out.require(c.solution && near(value(*c.solution), 1.0, 1e-9), "singleton is not {1}");
  out.require(near(value(minimal_solution(sys).h.matrix()), 1.0, 1e-9), "H_min != 1");
  out.require(near(value(maximal_solution(sys).h.matrix()), 1.0, 1e-9), "H_max != 1");
  out.require(membership(sys, StorageOperator(scalar(1.0))).in_ri_circ, "1 not in RI°");
  const RiccatiData d = riccati_data(sys, StorageOperator(scalar(1.0)));
  Matrix expected = Matrix::Zero(2, 2);
  expected(1, 1) = 1.0;
  out.require(d.delta.matrix() == expected, "delta(1) is not exactly diag(0, 1)");
}

void blaschke_singletons(Outcome& out) {
  std::mt19937_64 rng(11);
  double worst_gap = 0.0, worst_delta = 0.0;
  for (int degree = 1; degree <= 3; ++degree) {
    for (int rep = 0; rep < 3; ++rep) {
      const SystemRealization sys = testing::random_blaschke(degree, rng);
      const Matrix lo = minimal_solution(sys).h.matrix();
      const Matrix hi = maximal_solution(sys).h.matrix();
      const UniquenessCertificate c = uniqueness_certificate(sys, circle_profile(sys));
      out.require(c.verdict == UniquenessVerdict::kUniqueSingleton,
                  "degree " + std::to_string(degree) + " not certified unique");
      worst_gap = std::max(worst_gap, op_norm(lo - hi));
      worst_delta = std::max(worst_delta, riccati_data(sys, StorageOperator(lo)).delta.norm());
    }
  }
  out.require(worst_gap <= 1e-8, "H_min and H_max differ");
  out.require(worst_delta <= 1e-8, "delta does not vanish at the singleton");
  out.detail << "max ||H_min-H_max||=" << worst_gap << " max ||delta||=" << worst_delta;
}

void route_agreement(Outcome& out) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> norm_pick(0.6, 1.4);
  int inside = 0, outside = 0, boundary = 0, inconsistent = 0, wrong = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const Index n = 1 + trial % 4, m = 1 + (trial / 4) % 4, p = 1 + (trial / 16) % 4;
    const double target = norm_pick(rng);
    const SystemRealization base = testing::random_system_with_norm(n, m, p, target, rng);
    const Matrix s = testing::random_complex(n, n, rng) + 2.0 * Matrix::Identity(n, n);
    const SystemRealization sys = testing::similar_system(base, s);
    const StorageOperator h(Matrix(s.adjoint() * s));
    try {
      const MembershipVerdict v = membership(sys, h);
      (v.in_ri ? inside : outside) += 1;
      if (v.diagnostics.boundary_case) {
        ++boundary;
        std::printf("  boundary case: trial %d, lmi min eig %.3e, surplus min eig %.3e\n",
                    trial, v.diagnostics.lmi_min_eig, v.diagnostics.surplus_min_eig);
      } else if (v.in_ri != (target <= 1.0)) {
        ++wrong;
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kInconsistentRoutes) throw;
      ++inconsistent;
    }
  }
  out.require(inconsistent == 0, std::to_string(inconsistent) + " InconsistentRoutes");
  out.require(wrong == 0, std::to_string(wrong) + " verdicts contradict the construction");
  out.require(inside > 100 && outside > 100, "sample does not mix members and non-members");
  out.detail << "in=" << inside << " out=" << outside << " boundary=" << boundary;
}

BlockNonneg random_block(Index n, Index m, std::mt19937_64& rng) {
  std::uniform_int_distribution<Index> rank_pick(1, n + m);
  const Index rank = rng() % 2 ? n + m : rank_pick(rng);
  const Matrix g = testing::random_complex(n + m, rank, rng);
  Matrix t = g * g.adjoint();
  t /= op_norm(t);
  return BlockNonneg::FromAssembled(HermitianOperator::Symmetrize(t), n);
}

void brute_force_schur(Outcome& out) {
  std::mt19937_64 rng(13);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const Index n = 1 + trial % 4, m = 1 + (trial / 4) % 4;
    const BlockNonneg t = random_block(n, m, rng);
    const Vector x = testing::random_vector(n, rng);
    const int steps = std::max(2, static_cast<int>(std::round(std::pow(4096.0, 0.5 / m))));
    const double oracle = brute_force_infimum(t, x, 3.0, steps);
    const double delta = std::real(x.dot(minimal_contraction(t).complement.matrix() * x));
    const double err = std::abs(oracle - delta) / (1.0 + x.squaredNorm());
    worst = std::max(worst, err);
  }
  out.require(worst <= 1e-6, "brute force and Schur complement disagree");
  out.detail << "max relative error=" << worst;
}

void minimal_contraction_invariants(Outcome& out) {
  std::mt19937_64 rng(14);
  double worst_residual = 0.0, worst_kernel = 0.0, worst_range = 0.0;
  int range_rejected = 0, range_tried = 0, kernel_rejected = 0, kernel_tried = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const Index n = 1 + trial % 4, m = 1 + (trial / 4) % 4;
    const BlockNonneg t = random_block(n, m, rng);
    const SchurFactorization f = minimal_contraction(t);
    worst_residual = std::max(worst_residual, f.factor_residual);
    const Matrix ka = kernel_basis(t.alpha, 1e-10);
    if (ka.cols() > 0) worst_kernel = std::max(worst_kernel, op_norm(f.gamma * ka));
    const Matrix pd = range_projector(t.delta, 1e-10);
    worst_range = std::max(worst_range, op_norm(f.gamma - pd * f.gamma));

    const Matrix alpha_root = psd_sqrt(t.alpha).matrix();
    const Matrix delta_root = psd_sqrt(t.delta).matrix();
    auto residual = [&](const Matrix& g) {
      return op_norm(t.beta.adjoint() - delta_root * g * alpha_root);
    };
    // A perturbation living on range(delta) x range(alpha) breaks the
    // factorization.
    const Matrix pa = range_projector(t.alpha, 1e-10);
    const Matrix e_range = pd * testing::random_complex(m, n, rng) * pa;
    if (op_norm(e_range) > 1e-6) {
      ++range_tried;
      const Matrix e = e_range * (1e-3 / op_norm(e_range));
      range_rejected += residual(f.gamma + e) > f.factor_residual;
    }
    // One supported on ker(alpha) keeps the factorization but leaves the
    // admissible set.
    if (ka.cols() > 0) {
      ++kernel_tried;
      const Matrix e = 1e-3 * pd * testing::random_complex(m, ka.cols(), rng) * ka.adjoint();
      if (op_norm(e) > 1e-9) {
        const bool same_factor = residual(f.gamma + e) <= 1e-8;
        const bool violates = op_norm((f.gamma + e) * ka) > 1e-8;
        kernel_rejected += same_factor && violates;
      } else {
        ++kernel_rejected;  // delta vanishes, so no admissible perturbation exists
      }
    }
  }
  out.require(worst_residual <= 1e-10, "factorization residual above 1e-10");
  out.require(worst_kernel <= 1e-8, "gamma not zero on ker(alpha)");
  out.require(worst_range <= 1e-8, "gamma leaves range(delta)");
  out.require(range_rejected == range_tried, "range perturbation not rejected");
  out.require(kernel_rejected == kernel_tried, "kernel perturbation not rejected");
  out.detail << "max residual=" << worst_residual << " perturbations " << range_tried << "+"
             << kernel_tried;
}

void gap_surplus_equivalence(Outcome& out) {
  const double tol = 1e-8;
  const testing::TwoStateSolutions s = testing::two_state_solutions(0.6, 0.8);
  struct Case {
    SystemRealization sys;
    std::vector<Matrix> anchors;
  };
  std::mt19937_64 rng(15);
  std::vector<Case> cases = {
      {testing::scalar_example(), {scalar(3.0 / 64.0), scalar(0.75)}},
      {testing::two_state_example(), {s.h1, s.h2, s.h3, s.h4}}};
  for (int k = 0; k < 3; ++k) {
    const SystemRealization sys = testing::random_system_with_norm(2, 2, 1 + k, 0.9, rng);
    cases.push_back({sys, {minimal_solution(sys).h.matrix(), maximal_solution(sys).h.matrix()}});
  }
  int checked = 0, zero = 0;
  for (const Case& c : cases) {
    std::vector<Matrix> members = sample_ri_members(c.sys, c.anchors, 40, 5);
    members.insert(members.end(), c.anchors.begin(), c.anchors.end());
    for (const Matrix& m : members) {
      const StorageOperator h(m);
      const bool gap_zero = equality_gap(c.sys, h) <= tol;
      const bool surplus_zero = inequality_surplus(c.sys, h).norm() <= tol;
      out.require(gap_zero == surplus_zero, "gap and surplus disagree");
      ++checked;
      zero += gap_zero;
    }
  }
  // At h = 3/4 the gap is exactly 15/16 and the surplus 45/64.
  const StorageOperator top(scalar(0.75));
  const double gap = equality_gap(testing::scalar_example(), top);
  out.require(near(gap, 15.0 / 16.0, 1e-9), "gap at 3/4 != 15/16");
  out.require(near(inequality_surplus(testing::scalar_example(), top).norm(), 45.0 / 64.0, 1e-12),
              "surplus at 3/4 != 45/64");
  out.detail << checked << " samples, " << zero << " in RE, gap(3/4)=" << gap;
}

void dissipation(Outcome& out) {
  std::mt19937_64 rng(16);
  const std::vector<SystemRealization> systems = {
      testing::scalar_example(), adjoint(testing::scalar_example()),
      testing::two_state_example(), testing::coinner_example()};
  double worst = 0.0;
  int storages = 0;
  for (const SystemRealization& sys : systems) {
    const std::vector<Matrix> anchors = {minimal_solution(sys).h.matrix(),
                                         maximal_solution(sys).h.matrix()};
    std::vector<Matrix> members = sample_ri_members(sys, anchors, 10, 3);
    members.insert(members.end(), anchors.begin(), anchors.end());
    for (const Matrix& h : members) {
      ++storages;
      for (int traj = 0; traj < 5; ++traj) {
        std::vector<Vector> inputs;
        for (int k = 0; k < 100; ++k) {
          inputs.push_back(testing::random_vector(sys.input_dim(), rng));
        }
        const Trajectory t =
            simulate(sys, testing::random_vector(sys.state_dim(), rng), inputs);
        for (double d : dissipation_check(t, HermitianOperator::Symmetrize(h))) {
          worst = std::min(worst, d);
        }
      }
    }
  }
  out.require(worst >= -1e-10, "dissipation inequality violated");
  out.detail << storages << " storages, worst margin=" << worst;
}

void sqrt_pinv_commutation(Outcome& out) {
  std::mt19937_64 rng(17);
  double worst = 0.0;
  for (int trial = 0; trial < 500; ++trial) {
    const Index n = 2 + trial % 5;
    const Matrix a = testing::random_psd(n, 1 + trial % (n - 1), rng);
    worst = std::max(worst, sqrt_pinv_commute_check(HermitianOperator::Symmetrize(a)));
  }
  out.require(worst <= 1e-8, "sqrt and pseudo-inverse do not commute");
  out.detail << "max defect=" << worst;
}

struct Criterion {
  int id;
  const char* name;
  std::function<void(Outcome&)> check;
};

}  // namespace
}  // namespace rkyp

int main() {
  using namespace rkyp;
  const std::vector<Criterion> criteria = {
      {1, "scalar example RE, membership and extremes", scalar_example},
      {2, "adjoint scalar example and RE inversion", adjoint_example},
      {3, "two-state example solutions and order", two_state_example},
      {4, "co-inner example singleton", coinner_example},
      {5, "Blaschke products are singletons", blaschke_singletons},
      {6, "Riccati and LMI routes agree", route_agreement},
      {7, "brute-force infimum matches Schur complement", brute_force_schur},
      {8, "minimal contraction invariants and uniqueness", minimal_contraction_invariants},
      {9, "equality gap vanishes iff surplus vanishes", gap_surplus_equivalence},
      {10, "dissipation along trajectories", dissipation},
      {11, "square root commutes with pseudo-inverse", sqrt_pinv_commutation},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    Outcome out;
    try {
      c.check(out);
    } catch (const std::exception& e) {
      out.failures.push_back(std::string("exception: ") + e.what());
    }
    const bool ok = out.failures.empty();
    failed += !ok;
    std::printf("%s %2d %s: %s\n", ok ? "PASS" : "FAIL", c.id, c.name, out.detail.str().c_str());
    for (const std::string& f : out.failures) std::printf("     - %s\n", f.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed == 0 ? 0 : 1;
}
