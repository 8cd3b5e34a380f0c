#pragma once

// Command orchestration behind the riccati-kyp tool. `run` dispatches one
// command against a parsed system document and returns a JSON report; the
// executable only handles argument parsing and file I/O.

#include <chrono>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "rkyp/analysis.hpp"
#include "rkyp/document.hpp"
#include "rkyp/error.hpp"
#include "rkyp/riccati.hpp"
#include "rkyp/solver.hpp"
#include "rkyp/sysmodel.hpp"

namespace rkyp::cli {

/// Exit codes. Library errors map to kLibraryErrorBase + ErrorCode, one code
/// per category.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kLibraryErrorBase = 10;

inline int exit_code_for(ErrorCode code) {
  return kLibraryErrorBase + static_cast<int>(code);
}

/// Bad command line or a command that cannot run with what it was given.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct RunConfig {
  SolverConfig solver;
  std::optional<double> base_tol;  // the --tol value, if any
  int grid = kDefaultCircleGrid;   // circle profile samples
  int schur_grid = 32;             // radii x angles for the disc margin
  double schur_radius = 0.99;
  std::optional<std::string> candidate;
  std::optional<SimulationInputs> inputs;
  bool timings = true;
};

inline const std::vector<std::string>& commands() {
  static const std::vector<std::string> names = {
      "analyze", "check", "solve-re", "extremes", "simulate", "report"};
  return names;
}

inline nlohmann::json config_to_json(const RunConfig& cfg) {
  const Tolerances& t = cfg.solver.tols;
  nlohmann::json j;
  j["tol_base"] = cfg.base_tol ? nlohmann::json(*cfg.base_tol) : nlohmann::json(nullptr);
  j["tol"] = t.tol;
  j["rank_tol"] = t.rank_tol;
  j["pd_tol"] = t.pd_tol;
  j["boundary_band"] = t.boundary_band;
  j["minimality_tol"] = t.minimality_tol;
  j["grid"] = cfg.grid;
  j["schur_grid"] = cfg.schur_grid;
  j["schur_radius"] = cfg.schur_radius;
  j["seed"] = cfg.solver.seed;
  j["starts"] = cfg.solver.starts;
  j["max_dim"] = cfg.solver.max_dim;
  j["iter_tol"] = cfg.solver.iter_tol;
  j["dedup_tol"] = cfg.solver.dedup_tol;
  j["max_iter"] = cfg.solver.max_iter;
  j["newton_max_iter"] = cfg.solver.newton_max_iter;
  j["ri_samples"] = cfg.solver.ri_samples;
  j["candidate"] = cfg.candidate ? nlohmann::json(*cfg.candidate) : nlohmann::json(nullptr);
  j["inputs_steps"] = cfg.inputs ? nlohmann::json(cfg.inputs->inputs.size())
                                 : nlohmann::json(nullptr);
  return j;
}

inline nlohmann::json error_to_json(const Error& e) {
  return {{"code", std::string(error_code_name(e.code()))},
          {"exit_code", exit_code_for(e.code())},
          {"message", e.what()}};
}

inline nlohmann::json membership_to_json(const MembershipVerdict& v) {
  const MembershipDiagnostics& d = v.diagnostics;
  return {{"in_ri", v.in_ri},
          {"in_re", v.in_re},
          {"in_ri_circ", v.in_ri_circ},
          {"diagnostics",
           {{"threshold", d.threshold},
            {"delta_min_eig", d.delta_min_eig},
            {"surplus_min_eig", d.surplus_min_eig},
            {"equality_residual", d.equality_residual},
            {"lmi_min_eig", d.lmi_min_eig},
            {"c3_residual", d.c3_residual},
            {"c3_threshold", d.c3_threshold},
            {"associated_minimal", d.associated_minimal},
            {"route_riccati", d.route_riccati},
            {"route_lmi", d.route_lmi},
            {"routes_agree", d.routes_agree},
            {"boundary_case", d.boundary_case}}}};
}

inline nlohmann::json solution_set_to_json(const SolutionSet& set) {
  nlohmann::json members = nlohmann::json::array();
  for (std::size_t i = 0; i < set.members.size(); ++i) {
    const MemberProvenance& p = set.provenance[i];
    members.push_back({{"H", matrix_to_json(set.members[i].matrix())},
                       {"route", p.route},
                       {"residual", p.residual},
                       {"iterations", p.iterations},
                       {"start", p.start}});
  }
  nlohmann::json comparisons = nlohmann::json::array();
  for (const auto& row : set.comparisons) {
    nlohmann::json r = nlohmann::json::array();
    for (LoewnerOrder o : row) r.push_back(loewner_order_name(o));
    comparisons.push_back(std::move(r));
  }
  auto index = [](const std::optional<std::size_t>& i) {
    return i ? nlohmann::json(*i) : nlohmann::json(nullptr);
  };
  return {{"members", std::move(members)},
          {"comparisons", std::move(comparisons)},
          {"minimal_index", index(set.minimal_index)},
          {"maximal_index", index(set.maximal_index)},
          {"delta_singular_restarts", set.delta_singular_restarts},
          {"warnings", set.warnings}};
}

inline nlohmann::json extremal_to_json(const ExtremalSolution& s) {
  const ExtremalCertificate& c = s.certificate;
  return {{"H", matrix_to_json(s.h.matrix())},
          {"certificate",
           {{"in_re", c.in_re},
            {"in_ri", c.in_ri},
            {"fixed_point_iterations", c.fixed_point_iterations},
            {"residual", c.residual},
            {"re_members_checked", c.re_members_checked},
            {"ri_samples_checked", c.ri_samples_checked},
            {"worst_margin", c.worst_margin}}}};
}

/// Outcome of one `run`.
struct Report {
  nlohmann::json body;
  std::optional<ErrorCode> first_error;

  int exit_code() const {
    return first_error ? exit_code_for(*first_error) : kExitOk;
  }
};

namespace internal {

// Runs `fn`, storing its output (or the error it raised) under `key` of
// `parent`. The first library error of the whole run is remembered.
class SectionRunner {
 public:
  SectionRunner(Report& report, bool timings) : report_(report), timings_(timings) {}

  void operator()(nlohmann::json& parent, const std::string& key,
                  const std::function<nlohmann::json()>& fn,
                  const std::string& label = {}) {
    const auto start = std::chrono::steady_clock::now();
    try {
      parent[key] = fn();
    } catch (const Error& e) {
      parent[key] = {{"error", error_to_json(e)}};
      if (!report_.first_error) report_.first_error = e.code();
    }
    if (timings_) {
      const std::chrono::duration<double, std::milli> ms =
          std::chrono::steady_clock::now() - start;
      report_.body["timings_ms"][label.empty() ? key : label] = ms.count();
    }
  }

 private:
  Report& report_;
  bool timings_;
};

inline nlohmann::json analyze(const SystemRealization& sys, const RunConfig& cfg,
                              SectionRunner& section) {
  nlohmann::json out = nlohmann::json::object();
  section(out, "minimality", [&] {
    const MinimalityReport r = is_minimal(sys, cfg.solver.tols.minimality_tol);
    return nlohmann::json{{"minimal", r.minimal},
                          {"controllable_dim", r.controllable_dim},
                          {"unobservable_dim", r.unobservable_dim}};
  });
  section(out, "passivity", [&] {
    const PassivityReport r = is_passive(sys);
    return nlohmann::json{{"passive", r.passive}, {"margin", r.margin}};
  });
  section(out, "schur_margin", [&] {
    const double sup = schur_class_margin(sys, cfg.schur_grid, cfg.schur_radius);
    return nlohmann::json{{"sup_norm", sup},
                          {"radius", cfg.schur_radius},
                          {"grid", cfg.schur_grid},
                          {"bounded_by_one", sup <= 1.0 + cfg.solver.tols.tol}};
  });
  std::optional<CircleProfile> profile;
  section(out, "circle", [&] {
    profile = circle_profile(sys, cfg.grid);
    return nlohmann::json{{"grid", cfg.grid},
                          {"max_defect_right", profile->max_defect_right},
                          {"max_defect_left", profile->max_defect_left},
                          {"min_defect_right", profile->min_defect_right},
                          {"min_defect_left", profile->min_defect_left},
                          {"inner", is_inner(*profile)},
                          {"coinner", is_coinner(*profile)}};
  });
  if (profile) {
    section(out, "uniqueness", [&] {
      UniquenessOptions opts;
      opts.solver = cfg.solver;
      const UniquenessCertificate c = uniqueness_certificate(sys, *profile, opts);
      nlohmann::json j{{"verdict", uniqueness_verdict_name(c.verdict)},
                       {"reason", uniqueness_reason_name(c.reason)},
                       {"delta_at_solution", nullptr},
                       {"solution", nullptr},
                       {"delta_vanishes", nullptr}};
      if (c.delta_at_solution) j["delta_at_solution"] = *c.delta_at_solution;
      if (c.solution) j["solution"] = matrix_to_json(*c.solution);
      if (c.delta_vanishes) j["delta_vanishes"] = *c.delta_vanishes;
      return j;
    });
  }
  return out;
}

inline nlohmann::json check(const SystemRealization& sys, const NamedCandidate& c,
                            const RunConfig& cfg) {
  const Tolerances& tols = cfg.solver.tols;
  const StorageOperator h(HermitianOperator(c.h), tols.pd_tol);
  const MembershipVerdict v = membership(sys, h, tols);
  nlohmann::json j = membership_to_json(v);
  j["candidate"] = c.name;
  j["H"] = matrix_to_json(h.matrix());
  j["h_passive"] = h_passivity_check(sys, h, tols.tol);
  j["equality_gap"] = v.in_ri ? nlohmann::json(equality_gap(sys, h, tols))
                              : nlohmann::json(nullptr);
  return j;
}

inline nlohmann::json extremes(const SystemRealization& sys, const RunConfig& cfg,
                               SectionRunner& section) {
  nlohmann::json out = nlohmann::json::object();
  section(out, "minimal", [&] { return extremal_to_json(minimal_solution(sys, cfg.solver)); });
  section(out, "maximal", [&] { return extremal_to_json(maximal_solution(sys, cfg.solver)); });
  section(out, "duality", [&] {
    const DualityReport r = duality_check(sys, cfg.solver);
    nlohmann::json inv = nlohmann::json::array(), adj = nlohmann::json::array();
    for (const Matrix& m : r.re_inverse_image) inv.push_back(matrix_to_json(m));
    for (const Matrix& m : r.re_adjoint) adj.push_back(matrix_to_json(m));
    return nlohmann::json{{"samples_checked", r.samples.size()},
                          {"all_samples_passed", r.all_samples_passed},
                          {"re_inverse_image", std::move(inv)},
                          {"re_adjoint", std::move(adj)},
                          {"re_inversion_matches", r.re_inversion_matches}};
  });
  return out;
}

inline nlohmann::json simulate_json(const SystemRealization& sys,
                                    const SimulationInputs& in,
                                    const NamedCandidate* candidate,
                                    const RunConfig& cfg) {
  const Trajectory t = simulate(sys, in.x0, in.inputs);
  nlohmann::json states = nlohmann::json::array(), outputs = nlohmann::json::array();
  for (const Vector& x : t.states) states.push_back(vector_to_json(x));
  for (const Vector& y : t.outputs) outputs.push_back(vector_to_json(y));
  nlohmann::json j{{"steps", t.inputs.size()},
                   {"states", std::move(states)},
                   {"outputs", std::move(outputs)},
                   {"dissipation", nullptr}};
  if (candidate != nullptr) {
    const std::vector<double> margins = dissipation_check(
        t, HermitianOperator(candidate->h), cfg.solver.tols.pd_tol);
    double worst = margins.empty() ? 0.0 : margins.front();
    for (double m : margins) worst = std::min(worst, m);
    j["dissipation"] = {{"candidate", candidate->name},
                        {"margins", margins},
                        {"min_margin", worst}};
  }
  return j;
}

inline const NamedCandidate& require_candidate(const SystemDocument& doc,
                                               const RunConfig& cfg) {
  if (!cfg.candidate) throw UsageError("this command needs --candidate <name>");
  const NamedCandidate* c = doc.find_candidate(*cfg.candidate);
  if (c == nullptr) {
    throw UsageError("no candidate named '" + *cfg.candidate + "' in the system file");
  }
  return *c;
}

}  // namespace internal

/// Runs `command` on `doc`. Library errors are serialized into the report and
/// reflected in Report::exit_code(); usage problems throw UsageError.
inline Report run(std::string_view command, const SystemDocument& doc,
                  const RunConfig& cfg) {
  bool known = false;
  for (const std::string& c : commands()) known = known || c == command;
  if (!known) throw UsageError("unknown command '" + std::string(command) + "'");
  if (command == "check") (void)internal::require_candidate(doc, cfg);
  if (command == "simulate" && !cfg.inputs) {
    throw UsageError("simulate needs --inputs <path>");
  }
  if (cfg.candidate && doc.find_candidate(*cfg.candidate) == nullptr) {
    (void)internal::require_candidate(doc, cfg);
  }

  Report report;
  nlohmann::json& body = report.body;
  body["command"] = std::string(command);
  body["config"] = config_to_json(cfg);
  internal::SectionRunner section(report, cfg.timings);

  std::optional<SystemRealization> sys;
  section(body, "system", [&] {
    sys = doc.system();
    return nlohmann::json{{"name", doc.name},
                          {"state_dim", sys->state_dim()},
                          {"input_dim", sys->input_dim()},
                          {"output_dim", sys->output_dim()},
                          {"candidates", doc.candidates.size()}};
  });
  auto finish = [&] {
    body["exit_code"] = report.exit_code();
    body["ok"] = !report.first_error.has_value();
  };
  if (!sys) {
    finish();
    return report;
  }

  const bool all = command == "report";
  if (all || command == "analyze") {
    body["analyze"] = internal::analyze(*sys, cfg, section);
  }
  if (all || command == "check") {
    nlohmann::json checks = nlohmann::json::object();
    if (cfg.candidate) {
      const NamedCandidate& c = internal::require_candidate(doc, cfg);
      section(checks, c.name, [&] { return internal::check(*sys, c, cfg); },
              "check:" + c.name);
    } else {
      for (const NamedCandidate& c : doc.candidates) {
        section(checks, c.name, [&] { return internal::check(*sys, c, cfg); },
                "check:" + c.name);
      }
    }
    body["check"] = std::move(checks);
  }
  if (all || command == "solve-re") {
    section(body, "solve_re", [&] {
      nlohmann::json j = solution_set_to_json(rkyp::internal::solve_re_any(*sys, cfg.solver));
      j["scalar_route"] = sys->state_dim() == 1 && sys->input_dim() == 1 &&
                          sys->output_dim() == 1;
      return j;
    });
  }
  if (all || command == "extremes") {
    body["extremes"] = internal::extremes(*sys, cfg, section);
  }
  if ((all && cfg.inputs) || command == "simulate") {
    const NamedCandidate* c =
        cfg.candidate ? doc.find_candidate(*cfg.candidate) : nullptr;
    section(body, "simulate",
            [&] { return internal::simulate_json(*sys, *cfg.inputs, c, cfg); });
  }
  finish();
  return report;
}

}  // namespace rkyp::cli
