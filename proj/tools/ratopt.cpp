// ratopt: certified bounds for sums of rational functions.
//
//   ratopt problems/bounds.rp --match-degree 0:9 --all-orders --format csv
//   ratopt problems/sparse4.rp --sparse --order 2
//   ratopt --shekel-data foxholes.txt --ball 50 --scale ... --order 3

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ratopt/error.hpp"
#include "ratopt/hierarchy.hpp"
#include "ratopt/problem_file.hpp"
#include "ratopt/shekel.hpp"

namespace {

constexpr int kInputError = 4;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Certified lower bounds and minimizers for sums of rational functions"};
  app.set_version_flag("--version", "ratopt 1.0");

  std::string problem_path;
  std::string order, match_degree, epigraph, lift_bounds, solver, export_dir, format = "table", shekel_path;
  std::vector<std::string> bounds, scales;
  double ball = 0.0, ranktol = 0.0;
  std::uint64_t seed = 0;
  bool sparse = false, infer = false, all_orders = false, do_polish = false, print_problem = false;

  app.add_option("problem", problem_path, "Problem file (.rp)");
  auto* o_order = app.add_option("--order", order, "Relaxation order k or range A:B");
  auto* o_match = app.add_option("--match-degree", match_degree,
                                 "Sweep the matching-monomial degree instead of the order (A or A:B)");
  app.add_flag("--sparse", sparse, "Use the sparse hierarchy over the declared cliques");
  app.add_flag("--infer-cliques", infer, "Take each term's support as its clique");
  auto* o_epi = app.add_option("--epigraph", epigraph, "Epigraph lifting with ineq or eq constraints")
                    ->check(CLI::IsMember({"ineq", "eq"}));
  auto* o_lift = app.add_option("--lift-bounds", lift_bounds, "Bounds lo:hi for the lifting variables");
  auto* o_ball = app.add_option("--ball", ball, "Append M - |x|^2 >= 0 (per clique in sparse mode)");
  app.add_option("--bounds", bounds, "Per-variable bounds name:lo:hi (repeatable)");
  app.add_option("--scale", scales, "Change of variables name:a:b meaning x = a z + b (repeatable)");
  auto* o_rank = app.add_option("--ranktol", ranktol, "Relative rank tolerance");
  auto* o_solver = app.add_option("--solver", solver, "internal or external:PATH");
  auto* o_export = app.add_option("--export-sdpa", export_dir, "Write each relaxation as DIR/order_k.dat-s");
  app.add_option("--format", format, "Report format")->check(CLI::IsMember({"table", "csv", "json"}));
  app.add_flag("--all-orders", all_orders, "Do not stop at the first certified order");
  auto* o_seed = app.add_option("--seed", seed, "Seed for the extraction's random combination");
  app.add_option("--shekel-data", shekel_path, "Build a foxholes problem from a data file");
  app.add_flag("--polish", do_polish, "Refine extracted points with damped Newton");
  app.add_flag("--print-problem", print_problem, "Echo the parsed problem and exit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kInputError;
  }

  try {
    if (problem_path.empty() == shekel_path.empty()) {
      std::cerr << "error: give either a problem file or --shekel-data\n";
      return kInputError;
    }
    ratopt::ProblemFile file = shekel_path.empty() ? ratopt::parse_problem(read_file(problem_path))
                                                   : ratopt::shekel_problem(read_file(shekel_path));
    if (print_problem) {
      std::cout << ratopt::format_problem(file);
      return 0;
    }

    ratopt::RunSettings over;
    const auto& vars = file.variables;
    if (*o_order) over.orders = ratopt::parse_range(order);
    if (*o_match) over.match_degrees = ratopt::parse_range(match_degree);
    if (sparse) over.sparse = true;
    if (infer) over.infer_cliques = true;
    if (*o_epi) ratopt::apply_setting(over, "epigraph", epigraph, vars);
    if (*o_lift) over.lift_bounds = ratopt::parse_interval(lift_bounds);
    if (*o_ball) over.ball = ball;
    for (const auto& b : bounds) over.bounds.push_back(ratopt::parse_bound(b, vars));
    for (const auto& s : scales) over.scales.push_back(ratopt::parse_scale(s, vars));
    if (*o_rank) over.rank_tol = ranktol;
    if (*o_solver) ratopt::apply_setting(over, "solver", solver, vars);
    if (*o_export) over.export_sdpa = export_dir;
    if (all_orders) over.all_orders = true;
    if (*o_seed) over.seed = seed;
    if (do_polish) over.polish = true;
    if (!shekel_path.empty() && over.sparse.value_or(false)) {
      std::cerr << "note: every foxholes term involves all variables; building dense relaxations\n";
      over.sparse = false;
    }

    const auto report = ratopt::run_hierarchy(file, over);
    const auto fmt = format == "csv"    ? ratopt::ReportFormat::Csv
                     : format == "json" ? ratopt::ReportFormat::Json
                                        : ratopt::ReportFormat::Table;
    std::cout << ratopt::emit_report(report, fmt);
    return ratopt::exit_code(report);
  } catch (const ratopt::ParseError& e) {
    std::cerr << (problem_path.empty() ? shekel_path : problem_path) << ": " << e.what() << '\n';
    return kInputError;
  } catch (const ratopt::ModelingError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const ratopt::OrderError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  }
}
