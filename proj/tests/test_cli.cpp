#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>
#include <sys/wait.h>

#include "ratopt/error.hpp"
#include "ratopt/hierarchy.hpp"
#include "ratopt/problem_file.hpp"
#include "ratopt/shekel.hpp"

using namespace ratopt;

namespace {

Polynomial X(std::size_t n, std::size_t j) { return Polynomial::variable(n, j); }
Polynomial C(std::size_t n, double v) { return Polynomial::constant(n, v); }

std::string read(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string problem_path(const std::string& name) { return std::string(RATOPT_PROBLEMS_DIR) + "/" + name; }

ParseError::Kind error_kind(const std::string& text) {
  try {
    parse_problem(text);
  } catch (const ParseError& e) {
    return e.kind();
  }
  FAIL("no parse error for: " << text);
  return ParseError::Kind::Syntax;
}

struct Run {
  int code;
  std::string out;
};

Run run_cli(const std::string& args) {
  const std::string cmd = std::string(RATOPT_CLI) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe);
  std::string out;
  char buf[4096];
  while (std::size_t got = fread(buf, 1, sizeof buf, pipe)) out.append(buf, got);
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

}  // namespace

TEST_CASE("parse examples") {
  const auto f = parse_problem(
      "variables: x y\n"
      "minimize:\n"
      "  (1 + x + x^2) / (1 + x^2)   # first term\n"
      "  -y^2\n"
      "subject to:\n"
      "  4 - x^2 - y^2 >= 0\n"
      "  x <= y\n"
      "  x*y == 1\n");
  CHECK(f.variables == std::vector<std::string>{"x", "y"});
  CHECK(f.sense == Sense::Minimize);
  REQUIRE(f.terms.size() == 2);
  const auto x = X(2, 0), y = X(2, 1);
  CHECK(f.terms[0].numerator == C(2, 1) + x + x * x);
  CHECK(f.terms[0].denominator == C(2, 1) + x * x);
  CHECK(f.terms[1].numerator == -(y * y));
  CHECK(f.terms[1].denominator == C(2, 1));
  REQUIRE(f.constraints.size() == 3);
  CHECK(f.constraints[0].g == C(2, 4) - x * x - y * y);
  CHECK(f.constraints[1].g == y - x);
  CHECK(f.constraints[2].relation == Relation::Equal);
  CHECK(f.constraints[2].g == x * y - C(2, 1));

  CHECK(parse_expression("(x - 1)^2", {"x"}) == X(1, 0) * X(1, 0) - 2.0 * X(1, 0) + C(1, 1));
  CHECK(parse_expression("-2*x^3 - (-x)", {"x"}) == -2.0 * X(1, 0) * X(1, 0) * X(1, 0) + X(1, 0));
}

TEST_CASE("parse error kinds") {
  const std::string head = "variables: x1 x2 x3\nminimize:\n";
  CHECK(error_kind(head + "  x1*x2 / x3^-1\n") == ParseError::Kind::MalformedExponent);
  CHECK(error_kind(head + "  x1^1.5\n") == ParseError::Kind::MalformedExponent);
  CHECK(error_kind(head + "  x1 / x2 / x3\n") == ParseError::Kind::MisplacedDivision);
  CHECK(error_kind(head + "  (x1 / x2)\n") == ParseError::Kind::MisplacedDivision);
  CHECK(error_kind(head + "  x1\nsubject to:\n  x1 / x2 >= 0\n") == ParseError::Kind::MisplacedDivision);
  CHECK(error_kind(head + "  x4\n") == ParseError::Kind::UndeclaredIdentifier);
  CHECK(error_kind(head + "  x1 +* x2\n") == ParseError::Kind::Syntax);
  CHECK(error_kind("variables: x\nminimize:\n") == ParseError::Kind::EmptyObjective);
  CHECK(error_kind("variables: x\nminimize:\n  x\noptions:\n  ranktol = abc\n") == ParseError::Kind::NonNumeric);

  try {
    parse_problem(head + "  x1\n  x2 +\n");
  } catch (const ParseError& e) {
    CHECK(e.line() == 4);
  }
}

TEST_CASE("clique lines are checked against the terms") {
  const std::string base = "variables: x y\nminimize:\n  x\n  y\n";
  CHECK_NOTHROW(parse_problem(base + "clique: x\nclique: y\n"));
  CHECK_THROWS_AS(parse_problem(base + "clique: x\n"), ParseError);
  CHECK_THROWS_AS(parse_problem(base + "clique: y\nclique: y\n"), ParseError);
}

TEST_CASE("format then parse reproduces every shipped problem") {
  for (const auto* name : {"wilkinson.rp", "bounds.rp", "sparse4.rp", "ratex.rp", "rosenbrock_n.rp"}) {
    INFO(name);
    const auto f = parse_problem(read(problem_path(name)));
    const auto g = parse_problem(format_problem(f));
    CHECK(g.variables == f.variables);
    CHECK(g.sense == f.sense);
    REQUIRE(g.terms.size() == f.terms.size());
    for (std::size_t i = 0; i < f.terms.size(); ++i) {
      CHECK(g.terms[i].numerator == f.terms[i].numerator);
      CHECK(g.terms[i].denominator == f.terms[i].denominator);
    }
    REQUIRE(g.constraints.size() == f.constraints.size());
    for (std::size_t j = 0; j < f.constraints.size(); ++j) CHECK(g.constraints[j].g == f.constraints[j].g);
    CHECK(g.cliques == f.cliques);
  }
}

TEST_CASE("shipped problems prepare cleanly") {
  for (const auto* name : {"wilkinson.rp", "bounds.rp", "sparse4.rp", "ratex.rp", "rosenbrock_n.rp"}) {
    INFO(std::string(name));
    const auto f = parse_problem(read(problem_path(name)));
    std::vector<std::string> warnings;
    const auto p = prepare_program(f, f.settings, &warnings);
    CHECK_NOTHROW(p.validate());
    // The two unconstrained examples get the compactness notice and nothing else.
    if (p.constraints.empty()) {
      REQUIRE(warnings.size() == 1);
      CHECK(warnings[0].find("compact") != std::string::npos);
    } else {
      CHECK(warnings.empty());
    }
  }
}

TEST_CASE("report formats") {
  const auto w = parse_problem(read(problem_path("wilkinson.rp")));
  const auto report = run_hierarchy(w);
  CHECK(report.verdict == CertStatus::CertifiedOptimal);
  CHECK(exit_code(report) == 0);

  const auto csv = emit_report(report, ReportFormat::Csv);
  CHECK(csv.rfind("k,bound,status,certified,atoms\n", 0) == 0);

  const auto j = nlohmann::json::parse(emit_report(report, ReportFormat::Json));
  REQUIRE(j["rows"].size() == 1);
  const auto& atoms = j["rows"][0]["atoms"];
  REQUIRE(atoms.size() == 1);
  REQUIRE(atoms[0].size() == 1);
  CHECK(std::abs(atoms[0][0].get<double>()) <= 1e-6);
  CHECK(j["verdict"] == "certified");

  RunSettings empty;
  empty.orders = OrderRange{3, 2};
  const auto none = run_hierarchy(w, empty);
  CHECK(none.rows.empty());
  CHECK(emit_report(none, ReportFormat::Csv) == "k,bound,status,certified,atoms\n");
}

TEST_CASE("foxholes data ingestion") {
  const auto f = shekel_problem("1 2\n3 4\n0.5 0.7\n");
  CHECK(f.variables == std::vector<std::string>{"x1", "x2"});
  CHECK(f.sense == Sense::Minimize);
  REQUIRE(f.terms.size() == 2);
  const auto x1 = X(2, 0), x2 = X(2, 1);
  CHECK(f.terms[0].numerator == C(2, -1));
  const auto d1 = x1 - C(2, 1), d2 = x2 - C(2, 2);
  CHECK(f.terms[0].denominator == d1 * d1 + d2 * d2 + C(2, 0.5));
  const auto p = f.program();
  const std::vector<double> at{1.0, 2.0};
  const double e1 = 1.0 / 0.5, e2 = 1.0 / (2 * 2 + 2 * 2 + 0.7);
  CHECK(p.objective(at) == doctest::Approx(-(e1 + e2)));

  CHECK_THROWS_AS(shekel_problem("1 2\n3\n0.5 0.7\n"), ParseError);
  CHECK_THROWS_AS(shekel_problem("1 2\n3 4\n0.5 -1\n"), ParseError);
  CHECK_THROWS_AS(shekel_problem("1 2\n3 y\n0.5 0.7\n"), ParseError);
}

TEST_CASE("command line exit codes") {
  CHECK(run_cli(problem_path("wilkinson.rp")).code == 0);
  const auto bound_only = run_cli(problem_path("bounds.rp") + " --match-degree 2 --format csv");
  CHECK(bound_only.code == 2);
  CHECK(bound_only.out.rfind("k,bound,status,certified,atoms\n", 0) == 0);
  CHECK(run_cli(problem_path("wilkinson.rp") + " --solver external:/nonexistent/sdpa").code == 3);
  CHECK(run_cli("/nonexistent.rp").code == 4);
  CHECK(run_cli(problem_path("wilkinson.rp") + " --format xml").code == 4);
  CHECK(run_cli(problem_path("wilkinson.rp") + " --bounds y:0:1").code == 4);

  const auto tmp = std::filesystem::temp_directory_path() / "ratopt_cli_bad.rp";
  std::ofstream(tmp) << "variables: x\nminimize:\n  x / x^-1\n";
  CHECK(run_cli(tmp.string()).code == 4);
  std::filesystem::remove(tmp);
}
