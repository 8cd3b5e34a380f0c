#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <string>

#include "rkyp/cli.hpp"
#include "rkyp/document.hpp"
#include "test_support.hpp"

namespace rkyp {
namespace {

const std::string kSystems = RKYP_SYSTEMS_DIR;

ErrorCode parse_code(const std::string& text) {
  try {
    parse_system_text(text);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected a parse failure";
  return ErrorCode::kParseError;
}

cli::RunConfig quiet() {
  cli::RunConfig cfg;
  cfg.timings = false;
  cfg.grid = 512;
  return cfg;
}

TEST(Document, ParsesScalarExample) {
  const SystemDocument doc = parse_system_text(
      R"({"A":[[[-0.125,0]]],"B":[[[1,0]]],"C":[[[0.1875,0]]],"D":[[[0.5,0]]]})");
  EXPECT_EQ(doc.system(), testing::scalar_example());
  EXPECT_TRUE(doc.candidates.empty());
}

TEST(Document, ParsesShippedSystems) {
  for (const char* name : {"scalar.json", "scalar_adjoint.json", "two_state.json",
                           "coinner.json"}) {
    const SystemDocument doc = parse_system(kSystems + "/" + name);
    EXPECT_FALSE(doc.candidates.empty()) << name;
  }
  EXPECT_EQ(parse_system(kSystems + "/two_state.json").system(), testing::two_state_example());
}

TEST(Document, EmptyMatrixIsParseError) {
  EXPECT_EQ(parse_code(R"({"A":[],"B":[[[1,0]]],"C":[[[1,0]]],"D":[[[0,0]]]})"),
            ErrorCode::kParseError);
  EXPECT_EQ(parse_code(R"({"A":[[]],"B":[[[1,0]]],"C":[[[1,0]]],"D":[[[0,0]]]})"),
            ErrorCode::kParseError);
}

TEST(Document, MismatchedRowsIsDimensionMismatch) {
  EXPECT_EQ(parse_code(R"({"A":[[[0,0]]],"B":[[[1,0]],[[1,0]]],"C":[[[1,0]]],"D":[[[0,0]]]})"),
            ErrorCode::kDimensionMismatch);
  EXPECT_EQ(parse_code(R"({"A":[[[0,0]]],"B":[[[1,0]]],"C":[[[1,0]]],"D":[[[0,0]]],
                          "candidates":[{"name":"x","H":[[[1,0],[0,0]],[[0,0],[1,0]]]}]})"),
            ErrorCode::kDimensionMismatch);
}

TEST(Document, MalformedInputIsParseError) {
  EXPECT_EQ(parse_code("{\n\"A\": [[[0, 0]]],\n oops"), ErrorCode::kParseError);
  EXPECT_EQ(parse_code(R"({"A":[[[0]]],"B":[[[1,0]]],"C":[[[1,0]]],"D":[[[0,0]]]})"),
            ErrorCode::kParseError);
  EXPECT_EQ(parse_code(R"({"A":[[[0,0]]],"B":[[[1,0]]],"C":[[[1,0]]]})"), ErrorCode::kParseError);
  EXPECT_EQ(parse_code(R"({"A":[[[0,0],[1,0]],[[0,0]]],"B":[[[1,0]],[[1,0]]],"C":[[[1,0],[1,0]]],"D":[[[0,0]]]})"),
            ErrorCode::kParseError);
  try {
    parse_system_text("{\n\"A\": [[[0, 0]]],\n oops");
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
  try {
    parse_system_text(R"({"A":[[[0,0]]],"B":[[["x",0]]],"C":[[[1,0]]],"D":[[[0,0]]]})");
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("B[0][0]"), std::string::npos) << e.what();
  }
}

TEST(Document, MissingFileIsParseError) {
  try {
    parse_system(kSystems + "/nope.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParseError);
  }
}

TEST(Document, RoundTripIsBitExact) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> expo(-300.0, 300.0);
  for (int trial = 0; trial < 50; ++trial) {
    SystemDocument doc;
    doc.name = "random " + std::to_string(trial);
    const Index n = 1 + trial % 3, m = 1 + trial % 2, p = 1 + trial % 4;
    auto awkward = [&](Index r, Index c) {
      Matrix out = testing::random_complex(r, c, rng);
      for (Index i = 0; i < out.size(); ++i) {
        out.data()[i] *= std::pow(10.0, expo(rng));
      }
      out(0, 0) = Complex(0.1, -0.0);
      return out;
    };
    doc.A = awkward(n, n);
    doc.B = awkward(n, m);
    doc.C = awkward(p, n);
    doc.D = awkward(p, m);
    doc.candidates.push_back({"H", awkward(n, n)});
    doc.candidates.back().h(0, 0) = std::numeric_limits<double>::denorm_min();
    const SystemDocument back = parse_system_text(write_system(doc));
    EXPECT_EQ(back, doc);
    for (Index i = 0; i < doc.A.size(); ++i) {
      EXPECT_EQ(std::signbit(back.A.data()[i].imag()), std::signbit(doc.A.data()[i].imag()));
    }
  }
}

TEST(Run, ExtremesOnScalarExample) {
  const SystemDocument doc = parse_system(kSystems + "/scalar.json");
  const cli::Report r = cli::run("extremes", doc, quiet());
  EXPECT_EQ(r.exit_code(), 0);
  const nlohmann::json& e = r.body["extremes"];
  EXPECT_NEAR(e["minimal"]["H"][0][0][0].get<double>(), 3.0 / 64.0, 1e-9);
  EXPECT_NEAR(e["maximal"]["H"][0][0][0].get<double>(), 0.75, 1e-9);
  EXPECT_FALSE(e["duality"]["re_inversion_matches"].get<bool>());
  EXPECT_FALSE(r.body.contains("timings_ms"));
}

TEST(Run, CheckIdentityOnTwoStateExample) {
  const SystemDocument doc = parse_system(kSystems + "/two_state.json");
  cli::RunConfig cfg = quiet();
  cfg.candidate = "H1";
  const cli::Report r = cli::run("check", doc, cfg);
  EXPECT_EQ(r.exit_code(), 0);
  EXPECT_TRUE(r.body["check"]["H1"]["in_re"].get<bool>());
  EXPECT_TRUE(r.body["check"]["H1"]["h_passive"].get<bool>());
  EXPECT_LE(r.body["check"]["H1"]["equality_gap"].get<double>(), 1e-10);
}

TEST(Run, CheckAllCandidates) {
  const SystemDocument doc = parse_system(kSystems + "/scalar.json");
  const cli::Report r = cli::run("check", doc, [] {
    cli::RunConfig cfg = quiet();
    cfg.candidate = "h_max";
    return cfg;
  }());
  EXPECT_TRUE(r.body["check"]["h_max"]["in_ri"].get<bool>());
  EXPECT_FALSE(r.body["check"]["h_max"]["in_re"].get<bool>());

  cli::RunConfig cfg = quiet();
  const cli::Report all = cli::run("report", doc, cfg);
  EXPECT_EQ(all.exit_code(), 0);
  EXPECT_TRUE(all.body["check"]["h_min"]["in_re"].get<bool>());
  EXPECT_FALSE(all.body["check"]["h_low"]["in_ri"].get<bool>());
  EXPECT_TRUE(all.body["check"]["h_low"]["equality_gap"].is_null());
  EXPECT_FALSE(all.body.contains("simulate"));
}

TEST(Run, AnalyzeCoInnerExample) {
  const SystemDocument doc = parse_system(kSystems + "/coinner.json");
  const cli::Report r = cli::run("analyze", doc, quiet());
  EXPECT_EQ(r.exit_code(), 0);
  const nlohmann::json& a = r.body["analyze"];
  EXPECT_TRUE(a["circle"]["coinner"].get<bool>());
  EXPECT_FALSE(a["circle"]["inner"].get<bool>());
  EXPECT_EQ(a["uniqueness"]["verdict"], "UniqueSingleton");
  EXPECT_EQ(a["uniqueness"]["reason"], "CoInnerFl0");
  EXPECT_TRUE(a["minimality"]["minimal"].get<bool>());
}

TEST(Run, SolveReTwoState) {
  const SystemDocument doc = parse_system(kSystems + "/two_state.json");
  const cli::Report r = cli::run("solve-re", doc, quiet());
  EXPECT_EQ(r.body["solve_re"]["members"].size(), 4u);
  EXPECT_EQ(r.body["solve_re"]["minimal_index"], 0);
  EXPECT_EQ(r.body["solve_re"]["maximal_index"], 3);
  EXPECT_EQ(r.body["solve_re"]["comparisons"][1][2], "Incomparable");
}

TEST(Run, SimulateWithDissipation) {
  const SystemDocument doc = parse_system(kSystems + "/scalar.json");
  cli::RunConfig cfg = quiet();
  cfg.candidate = "h_mid";
  cfg.inputs = parse_inputs_text(read_file(kSystems + "/inputs_scalar.json"));
  const cli::Report r = cli::run("simulate", doc, cfg);
  EXPECT_EQ(r.exit_code(), 0);
  EXPECT_EQ(r.body["simulate"]["steps"], 20);
  EXPECT_GE(r.body["simulate"]["dissipation"]["min_margin"].get<double>(), -1e-10);
}

TEST(Run, LibraryErrorsSetExitCode) {
  // Not minimal: the uniqueness certificate refuses it.
  SystemDocument doc;
  doc.A = testing::scalar(0.5);
  doc.B = testing::scalar(0.0);
  doc.C = testing::scalar(1.0);
  doc.D = testing::scalar(0.0);
  const cli::Report r = cli::run("analyze", doc, quiet());
  EXPECT_EQ(r.exit_code(), cli::exit_code_for(ErrorCode::kNotMinimal));
  EXPECT_EQ(r.body["analyze"]["uniqueness"]["error"]["code"], "NotMinimal");
  EXPECT_FALSE(r.body["ok"].get<bool>());
  // Sections that did not fail are still reported.
  EXPECT_FALSE(r.body["analyze"]["minimality"]["minimal"].get<bool>());
}

TEST(Run, ExitCodesAreDistinctPerCategory) {
  std::set<int> codes;
  for (int c = static_cast<int>(ErrorCode::kDimensionMismatch);
       c <= static_cast<int>(ErrorCode::kNotHermitian); ++c) {
    codes.insert(cli::exit_code_for(static_cast<ErrorCode>(c)));
  }
  EXPECT_EQ(codes.size(), static_cast<std::size_t>(ErrorCode::kNotHermitian));
  EXPECT_EQ(codes.count(cli::kExitOk), 0u);
  EXPECT_EQ(codes.count(cli::kExitUsage), 0u);
}

TEST(Run, UsageErrors) {
  const SystemDocument doc = parse_system(kSystems + "/scalar.json");
  EXPECT_THROW(cli::run("bogus", doc, quiet()), cli::UsageError);
  EXPECT_THROW(cli::run("check", doc, quiet()), cli::UsageError);
  EXPECT_THROW(cli::run("simulate", doc, quiet()), cli::UsageError);
  cli::RunConfig cfg = quiet();
  cfg.candidate = "missing";
  EXPECT_THROW(cli::run("check", doc, cfg), cli::UsageError);
}

TEST(Run, ReportsAreDeterministic) {
  const SystemDocument doc = parse_system(kSystems + "/two_state.json");
  const std::string a = cli::run("report", doc, quiet()).body.dump();
  const std::string b = cli::run("report", doc, quiet()).body.dump();
  EXPECT_EQ(a, b);
}

TEST(Run, ConfigEmbeddedVerbatim) {
  const SystemDocument doc = parse_system(kSystems + "/scalar.json");
  cli::RunConfig cfg = quiet();
  cfg.base_tol = 1e-7;
  cfg.solver.tols = Tolerances::scaled(1e-7);
  cfg.solver.seed = 99;
  const cli::Report r = cli::run("solve-re", doc, cfg);
  EXPECT_EQ(r.body["config"]["tol_base"].get<double>(), 1e-7);
  EXPECT_EQ(r.body["config"]["tol"].get<double>(), cfg.solver.tols.tol);
  EXPECT_EQ(r.body["config"]["rank_tol"].get<double>(), cfg.solver.tols.rank_tol);
  EXPECT_EQ(r.body["config"]["seed"].get<std::uint64_t>(), 99u);
  EXPECT_EQ(r.body["config"]["grid"].get<int>(), 512);
}

TEST(Run, TimingsPresentWhenEnabled) {
  const SystemDocument doc = parse_system(kSystems + "/scalar.json");
  cli::RunConfig cfg = quiet();
  cfg.timings = true;
  const cli::Report r = cli::run("solve-re", doc, cfg);
  EXPECT_TRUE(r.body["timings_ms"].contains("solve_re"));
}

}  // namespace
}  // namespace rkyp
