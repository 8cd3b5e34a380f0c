// riccati-kyp: command-line front end for the rkyp library.
//
//   riccati-kyp <command> --system <path> [--candidate <name>]
//               [--inputs <path>] [--tol <x>] [--grid <k>] [--seed <s>]
//               [--out <path>] [--no-timings]
//
// Exit status: 0 on success, 2 for usage errors, 10 + error code for library
// errors (see rkyp/error.hpp).

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "rkyp/cli.hpp"
#include "rkyp/document.hpp"

int main(int argc, char** argv) {
  using namespace rkyp;

  CLI::App app{"Riccati / KYP analysis of discrete-time passive systems"};
  app.set_version_flag("--version", "riccati-kyp 0.1.0");

  std::string command;
  std::string system_path;
  std::optional<std::string> candidate;
  std::optional<std::string> inputs_path;
  std::optional<std::string> out_path;
  std::optional<double> tol, rank_tol, pd_tol, boundary_band, minimality_tol;
  std::optional<double> iter_tol, dedup_tol;
  cli::RunConfig cfg;
  bool no_timings = false;

  app.add_option("command", command, "analyze | check | solve-re | extremes | simulate | report")
      ->required()
      ->check(CLI::IsMember(cli::commands()));
  app.add_option("--system", system_path, "system document (JSON)")->required();
  app.add_option("--candidate", candidate, "name of a candidate storage operator in the document");
  app.add_option("--inputs", inputs_path, "input sequence for simulate (JSON)");
  app.add_option("--tol", tol, "base tolerance; scales the whole tolerance family");
  app.add_option("--rank-tol", rank_tol, "relative rank cut for delta(H)");
  app.add_option("--pd-tol", pd_tol, "positive definiteness threshold for H");
  app.add_option("--boundary-band", boundary_band, "band for boundary-case route disagreements");
  app.add_option("--minimality-tol", minimality_tol, "rank cut for Krylov subspaces");
  app.add_option("--iter-tol", iter_tol, "fixed-point stopping tolerance");
  app.add_option("--dedup-tol", dedup_tol, "distance below which solutions coincide");
  app.add_option("--grid", cfg.grid, "unit circle samples")->capture_default_str();
  app.add_option("--schur-grid", cfg.schur_grid, "radii x angles sampled on the disc")
      ->capture_default_str();
  app.add_option("--schur-radius", cfg.schur_radius, "disc radius for the Schur margin")
      ->capture_default_str();
  app.add_option("--seed", cfg.solver.seed, "random seed")->capture_default_str();
  app.add_option("--starts", cfg.solver.starts, "Newton multi-start count")->capture_default_str();
  app.add_option("--max-dim", cfg.solver.max_dim, "largest state dimension for solve-re")
      ->capture_default_str();
  app.add_option("--max-iter", cfg.solver.max_iter, "fixed-point iteration cap")
      ->capture_default_str();
  app.add_option("--ri-samples", cfg.solver.ri_samples, "RI samples used by certificates")
      ->capture_default_str();
  app.add_option("--out", out_path, "write the report here instead of stdout");
  app.add_flag("--no-timings", no_timings, "omit wall-clock timings (byte-stable reports)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return cli::kExitUsage;
  }

  if (tol) {
    cfg.base_tol = *tol;
    cfg.solver.tols = Tolerances::scaled(*tol);
  }
  if (rank_tol) cfg.solver.tols.rank_tol = *rank_tol;
  if (pd_tol) cfg.solver.tols.pd_tol = *pd_tol;
  if (boundary_band) cfg.solver.tols.boundary_band = *boundary_band;
  if (minimality_tol) cfg.solver.tols.minimality_tol = *minimality_tol;
  if (iter_tol) cfg.solver.iter_tol = *iter_tol;
  if (dedup_tol) cfg.solver.dedup_tol = *dedup_tol;
  cfg.candidate = candidate;
  cfg.timings = !no_timings;

  cli::Report report;
  try {
    const SystemDocument doc = parse_system(system_path);
    if (inputs_path) cfg.inputs = parse_inputs_text(read_file(*inputs_path));
    report = cli::run(command, doc, cfg);
  } catch (const cli::UsageError& e) {
    std::cerr << "riccati-kyp: " << e.what() << "\n";
    return cli::kExitUsage;
  } catch (const Error& e) {
    // Input could not be read: report the error in the same JSON shape.
    report.body = {{"command", command},
                   {"config", cli::config_to_json(cfg)},
                   {"error", cli::error_to_json(e)}};
    report.first_error = e.code();
    report.body["exit_code"] = report.exit_code();
    report.body["ok"] = false;
    std::cerr << "riccati-kyp: " << e.what() << "\n";
  }

  const std::string text = report.body.dump(2) + "\n";
  if (out_path) {
    std::ofstream out(*out_path, std::ios::binary);
    if (!out) {
      std::cerr << "riccati-kyp: cannot write '" << *out_path << "'\n";
      return cli::kExitUsage;
    }
    out << text;
  } else {
    std::cout << text;
  }
  return report.exit_code();
}
