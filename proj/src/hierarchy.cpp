#include "ratopt/hierarchy.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "ratopt/error.hpp"
#include "ratopt/sdpa_io.hpp"

namespace ratopt {

namespace {

std::string range_text(const OrderRange& r) {
  return r.first == r.last ? std::to_string(r.first) : std::to_string(r.first) + ":" + std::to_string(r.last);
}

std::vector<std::pair<std::string, std::string>> echo(const RunSettings& s, const std::vector<std::string>& names,
                                                      RelaxationKind kind, const OrderRange& range) {
  std::vector<std::pair<std::string, std::string>> out;
  out.emplace_back("relaxation", to_string(kind));
  out.emplace_back(s.match_degrees ? "match-degree" : "order", range_text(range));
  if (s.ball) out.emplace_back("ball", format_double(*s.ball));
  for (const auto& b : s.bounds) {
    out.emplace_back("bounds", names[b.var] + ":" + format_double(b.lo) + ":" + format_double(b.hi));
  }
  for (const auto& c : s.scales) {
    out.emplace_back("scale", names[c.var] + ":" + format_double(c.a) + ":" + format_double(c.b));
  }
  if (s.epigraph) out.emplace_back("epigraph", *s.epigraph == EpigraphMode::Equality ? "eq" : "ineq");
  if (s.lift_bounds) {
    out.emplace_back("lift-bounds", format_double(s.lift_bounds->lo) + ":" + format_double(s.lift_bounds->hi));
  }
  out.emplace_back("ranktol", format_double(s.rank_tol.value_or(1e-3)));
  out.emplace_back("solver", s.solver.value_or("internal"));
  out.emplace_back("all-orders", s.all_orders.value_or(false) ? "true" : "false");
  out.emplace_back("seed", std::to_string(s.seed.value_or(0)));
  return out;
}

double now_seconds() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

}  // namespace

RationalProgram prepare_program(const ProblemFile& file, const RunSettings& s, std::vector<std::string>* warnings) {
  RationalProgram program = file.program();
  const std::size_t n = program.n;
  for (const auto& b : s.bounds) {
    const Polynomial x = Polynomial::variable(n, b.var);
    program.constraints.push_back({(x - Polynomial::constant(n, b.lo)) * (Polynomial::constant(n, b.hi) - x),
                                   Relation::GreaterEqual, ConstraintOrigin::User});
  }
  if (!s.scales.empty()) {
    VariableScaling scaling = VariableScaling::identity(n);
    for (const auto& c : s.scales) {
      scaling.multiplier[c.var] = c.a;
      scaling.offset[c.var] = c.b;
    }
    program.scaling = scaling;
  }
  const bool sparse = s.sparse.value_or(false);
  if (sparse) {
    if (!file.cliques.empty()) {
      program.pattern = assign_constraints(file.cliques, program);
    } else if (s.infer_cliques.value_or(false)) {
      program.pattern = infer_cliques(program);
    } else {
      throw ModelingError("sparse mode needs clique declarations or --infer-cliques");
    }
    const auto rip = check_rip(*program.pattern);
    if (!rip.holds && warnings) {
      warnings->push_back("cliques violate the running intersection property at clique " +
                          std::to_string(*rip.witness + 1) + "; convergence is not guaranteed");
    }
  } else if (s.infer_cliques.value_or(false) && s.epigraph) {
    program.pattern = infer_cliques(program);
  } else if (!file.cliques.empty() && s.epigraph) {
    program.pattern = assign_constraints(file.cliques, program);
  }
  if (s.ball) {
    if (!(*s.ball > 0.0)) throw ModelingError("ball radius must be positive");
    program = add_ball_constraints(program, *s.ball, program.pattern ? BallMode::PerClique : BallMode::Dense);
  } else if (warnings && program.constraints.empty()) {
    warnings->push_back("no ball or bounds given: the feasible set is not known to be compact, so "
                        "convergence is not guaranteed");
  }
  program.validate();
  return program;
}

SDPSolution solve_external(const SDPProblem& problem, const std::string& path) {
  namespace fs = std::filesystem;
  SDPSolution sol;
  const fs::path dir = fs::temp_directory_path();
  const auto stamp = std::to_string(std::chrono::steady_clock::now().time_since_epoch().count());
  const fs::path in = dir / ("ratopt_" + stamp + ".dat-s");
  const fs::path out = dir / ("ratopt_" + stamp + ".out");
  {
    std::ofstream f(in);
    f << export_sdpa(problem);
  }
  const std::string cmd = "\"" + path + "\" \"" + in.string() + "\" \"" + out.string() + "\" > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  std::ifstream f(out);
  std::stringstream text;
  text << f.rdbuf();
  const auto result = parse_sdpa_result(text.str(), problem.num_vars);
  std::error_code ec;
  fs::remove(in, ec);
  fs::remove(out, ec);
  if (!result.ok) {
    sol.message = "external solver (exit " + std::to_string(rc) + "): " + result.message;
    return sol;
  }
  sol.status = SolveStatus::Optimal;
  sol.y = result.y;
  sol.objective = result.objective;
  sol.dual_objective = result.objective;
  sol.message = "external solver";
  return sol;
}

RunReport run_hierarchy(const ProblemFile& file, const RunSettings& overrides) {
  RunSettings s = file.settings;
  s.merge(overrides);
  RunReport report;
  report.sense = file.sense;
  report.variables = file.variables;

  const RationalProgram program = prepare_program(file, s, &report.warnings);
  const bool epigraph = s.epigraph.has_value();
  if (epigraph && !s.lift_bounds) throw ModelingError("the epigraph relaxation needs --lift-bounds lo:hi");
  report.kind = epigraph ? RelaxationKind::Epigraph
                         : (program.pattern ? RelaxationKind::Sparse : RelaxationKind::Dense);

  // Denominator screen on whatever box the data implies.
  {
    std::vector<Interval> box(program.n, {-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()});
    for (const auto& b : s.bounds) box[b.var] = {std::max(box[b.var].lo, b.lo), std::min(box[b.var].hi, b.hi)};
    if (s.ball) {
      const double r = std::sqrt(*s.ball);
      for (auto& iv : box) iv = {std::max(iv.lo, -r), std::min(iv.hi, r)};
    }
    const bool finite = std::all_of(box.begin(), box.end(), [](const Interval& iv) { return std::isfinite(iv.lo) && std::isfinite(iv.hi); });
    if (finite) {
      const auto d = validate_denominators(program, 2000, box, s.seed.value_or(0x5eed));
      if (d.verdict == DenominatorVerdict::Suspect) report.warnings.push_back("denominator screen: " + d.note);
    }
  }

  std::vector<Interval> lift;
  if (epigraph) lift.push_back(*s.lift_bounds);

  const int k_min = epigraph ? min_order(lift_epigraph(program, *s.epigraph, lift)) : min_order(program);
  OrderRange range{k_min, k_min + 5};
  if (s.match_degrees) {
    range = *s.match_degrees;
    report.match_degree_sweep = true;
  } else if (s.orders) {
    range = *s.orders;
  }
  report.settings = echo(s, file.variables, report.kind, range);

  std::optional<std::vector<Interval>> polish_box;
  if (!s.bounds.empty()) {
    std::vector<Interval> box(program.n, {-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()});
    for (const auto& b : s.bounds) box[b.var] = {std::max(box[b.var].lo, b.lo), std::min(box[b.var].hi, b.hi)};
    polish_box = box;
  }
  // Polishing works in user coordinates on the unscaled data.
  RationalProgram original = program;
  original.scaling.reset();

  SolverOptions solver_options;
  solver_options.seed = s.seed.value_or(0);
  CertifyOptions certify_options;
  certify_options.rank_tol = s.rank_tol.value_or(1e-3);
  certify_options.seed = s.seed.value_or(0);

  for (int a = range.first; a <= range.last; ++a) {
    RunRow row;
    row.k = a;
    RelaxOptions relax_options;
    int k = a;
    if (report.match_degree_sweep) {
      if (epigraph) throw ModelingError("match-degree sweeps apply to the dense and sparse hierarchies only");
      relax_options.match_degree = a;
      row.match_degree = a;
      k = order_for_match_degree(program, a);
    }
    row.relaxation_order = k;
    const double t0 = now_seconds();
    SDPRelaxation relaxation;
    if (epigraph) relaxation = build_epigraph(program, k, *s.epigraph, lift, relax_options);
    else if (program.pattern) relaxation = build_sparse(program, *program.pattern, k, relax_options);
    else relaxation = build_dense(program, k, relax_options);
    for (const auto& w : relaxation.warnings) {
      if (std::find(report.warnings.begin(), report.warnings.end(), w) == report.warnings.end()) report.warnings.push_back(w);
    }
    for (const auto& b : relaxation.problem.blocks) row.block_sizes.push_back(b.size);
    row.equalities = static_cast<int>(relaxation.problem.equalities.size());

    if (s.export_sdpa) {
      std::filesystem::create_directories(*s.export_sdpa);
      std::ofstream f(std::filesystem::path(*s.export_sdpa) / ("order_" + std::to_string(a) + ".dat-s"));
      f << export_sdpa(relaxation.problem);
    }

    SDPSolution solution;
    const std::string solver = s.solver.value_or("internal");
    if (solver.starts_with("external:")) solution = solve_external(relaxation.problem, solver.substr(9));
    else solution = solve(relaxation.problem, solver_options);

    const Certificate cert = check_flat_and_extract(solution, relaxation, certify_options);
    row.seconds = now_seconds() - t0;
    row.bound = cert.bound;
    row.solver_status = solution.status;
    row.reduced_accuracy = solution.reduced_accuracy;
    row.iterations = solution.iterations;
    row.status = cert.status;
    row.ranks = cert.ranks;
    row.atoms = cert.atoms;
    row.approximate_minimizer = cert.approximate_minimizer;
    row.diagnostics = cert.diagnostics;
    if (!solution.message.empty() && solution.status != SolveStatus::Optimal) {
      row.diagnostics.insert(row.diagnostics.begin(), "solver: " + solution.message);
    }

    if (s.polish.value_or(false)) {
      PolishOptions po;
      po.bounds = polish_box;
      if (!row.atoms.empty()) {
        for (const auto& atom : row.atoms) row.polished.push_back(polish(original, atom.x, po));
      } else if (row.approximate_minimizer) {
        row.polished.push_back(polish(original, *row.approximate_minimizer, po));
      }
    }
    report.rows.push_back(std::move(row));
    if (cert.status == CertStatus::CertifiedOptimal && !s.all_orders.value_or(false)) break;
  }

  report.verdict = CertStatus::SolverFailed;
  for (const auto& r : report.rows) {
    if (r.status == CertStatus::CertifiedOptimal) report.verdict = CertStatus::CertifiedOptimal;
    else if (r.status == CertStatus::LowerBoundOnly && report.verdict == CertStatus::SolverFailed) {
      report.verdict = CertStatus::LowerBoundOnly;
    }
  }
  return report;
}

int exit_code(const RunReport& report) {
  switch (report.verdict) {
    case CertStatus::CertifiedOptimal: return 0;
    case CertStatus::LowerBoundOnly: return 2;
    case CertStatus::SolverFailed: return 3;
  }
  return 3;
}

namespace {

std::string point_text(const std::vector<double>& x, const char* sep) {
  std::string s;
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (j) s += sep;
    s += format_double(x[j]);
  }
  return s;
}

std::string fixed(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

std::string emit_csv(const RunReport& report) {
  std::string out = "k,bound,status,certified,atoms\n";
  for (const auto& r : report.rows) {
    // Only certified atoms; rejected candidates are in the json dump.
    std::string atoms;
    const std::size_t shown = r.status == CertStatus::CertifiedOptimal ? r.atoms.size() : 0;
    for (std::size_t i = 0; i < shown; ++i) {
      if (i) atoms += ';';
      atoms += point_text(r.atoms[i].x, " ");
    }
    out += std::to_string(r.k) + "," + format_double(r.bound) + "," + to_string(r.status) + "," +
           (r.status == CertStatus::CertifiedOptimal ? "true" : "false") + ",\"" + atoms + "\"\n";
  }
  return out;
}

std::string emit_table(const RunReport& report) {
  std::ostringstream os;
  const bool maximize = report.sense == Sense::Maximize;
  os << to_string(report.kind) << " relaxation, " << (maximize ? "maximize" : "minimize") << " over (";
  for (std::size_t j = 0; j < report.variables.size(); ++j) os << (j ? ", " : "") << report.variables[j];
  os << ")\n";
  for (const auto& w : report.warnings) os << "warning: " << w << '\n';
  os << '\n';
  const char* kname = report.match_degree_sweep ? "deg" : "k";
  os << std::setw(4) << kname << std::setw(6) << "order" << std::setw(16) << (maximize ? "upper bound" : "lower bound")
     << std::setw(20) << "solver" << std::setw(6) << "it" << std::setw(15) << "status" << std::setw(9) << "time"
     << "  ranks\n";
  for (const auto& r : report.rows) {
    std::string ranks;
    for (std::size_t i = 0; i < r.ranks.measures.size(); ++i) {
      const auto& m = r.ranks.measures[i];
      if (i) ranks += ' ';
      for (std::size_t t = 0; t < m.ranks.size(); ++t) ranks += (t ? "," : "") + std::to_string(m.ranks[t]);
      if (i == 3 && r.ranks.measures.size() > 5) {
        ranks += " ... (" + std::to_string(r.ranks.measures.size()) + " measures)";
        break;
      }
    }
    std::string solver = to_string(r.solver_status);
    if (r.reduced_accuracy) solver += "*";
    os << std::setw(4) << r.k << std::setw(6) << r.relaxation_order << std::setw(16) << fixed(r.bound, 8)
       << std::setw(20) << solver << std::setw(6) << r.iterations << std::setw(15) << to_string(r.status)
       << std::setw(8) << fixed(r.seconds, 2) << "s  " << ranks << '\n';
    for (std::size_t i = 0; i < r.atoms.size(); ++i) {
      os << (r.status == CertStatus::CertifiedOptimal ? "      atom " : "      candidate ") << i + 1 << ": (" << point_text(r.atoms[i].x, ", ") << ")  f = " << format_double(r.atoms[i].objective)
         << "  weight " << fixed(r.atoms[i].weight, 4) << '\n';
    }
    if (r.approximate_minimizer) {
      os << "      approximate minimizer (first-order moments, assumes uniqueness): ("
         << point_text(*r.approximate_minimizer, ", ") << ")\n";
    }
    for (const auto& p : r.polished) {
      os << "      polished: (" << point_text(p.x, ", ") << ")  f = " << format_double(p.value)
         << (p.converged ? "" : "  [" + p.message + "]") << '\n';
    }
  }
  if (std::any_of(report.rows.begin(), report.rows.end(), [](const RunRow& r) { return r.reduced_accuracy; })) {
    os << "\n* solver stalled; best iterate accepted at reduced accuracy\n";
  }
  os << "\nverdict: " << to_string(report.verdict) << '\n';
  return os.str();
}

std::string emit_json(const RunReport& report) {
  using json = nlohmann::ordered_json;
  json j;
  j["relaxation"] = to_string(report.kind);
  j["sense"] = report.sense == Sense::Maximize ? "maximize" : "minimize";
  j["variables"] = report.variables;
  j["sweep"] = report.match_degree_sweep ? "match-degree" : "order";
  json settings = json::object();
  for (const auto& [k, v] : report.settings) {
    if (settings.contains(k)) {
      if (!settings[k].is_array()) settings[k] = json::array({settings[k]});
      settings[k].push_back(v);
    } else {
      settings[k] = v;
    }
  }
  j["settings"] = settings;
  j["warnings"] = report.warnings;
  j["rows"] = json::array();
  for (const auto& r : report.rows) {
    json row;
    row["k"] = r.k;
    row["relaxation_order"] = r.relaxation_order;
    if (r.match_degree) row["match_degree"] = *r.match_degree;
    row["bound"] = r.bound;
    row["solver_status"] = to_string(r.solver_status);
    row["reduced_accuracy"] = r.reduced_accuracy;
    row["iterations"] = r.iterations;
    row["status"] = to_string(r.status);
    row["block_sizes"] = r.block_sizes;
    row["equalities"] = r.equalities;
    json measures = json::array();
    for (const auto& m : r.ranks.measures) {
      json jm;
      jm["ranks"] = m.ranks;
      jm["offset"] = m.offset;
      jm["flat_order"] = m.flat_order ? json(*m.flat_order) : json(nullptr);
      jm["mass"] = m.mass;
      jm["singular_values"] = m.singular_values;
      measures.push_back(jm);
    }
    row["ranks"] = measures;
    json overlaps = json::array();
    for (const auto& o : r.ranks.overlaps) overlaps.push_back({{"cliques", {o.first + 1, o.second + 1}}, {"rank", o.rank}});
    row["overlaps"] = overlaps;
    json atoms = json::array();
    json atom_detail = json::array();
    for (const auto& a : r.atoms) {
      atoms.push_back(a.x);
      atom_detail.push_back({{"x", a.x}, {"weight", a.weight}, {"objective", a.objective}, {"violation", a.violation}});
    }
    row["atoms"] = atoms;
    row["atom_detail"] = atom_detail;
    row["approximate_minimizer"] = r.approximate_minimizer ? json(*r.approximate_minimizer) : json(nullptr);
    json polished = json::array();
    for (const auto& p : r.polished) {
      polished.push_back({{"x", p.x}, {"value", p.value}, {"converged", p.converged}, {"aborted", p.aborted}});
    }
    row["polished"] = polished;
    row["seconds"] = r.seconds;
    row["diagnostics"] = r.diagnostics;
    j["rows"].push_back(row);
  }
  j["verdict"] = to_string(report.verdict);
  return j.dump(2) + "\n";
}

}  // namespace

std::string emit_report(const RunReport& report, ReportFormat format) {
  switch (format) {
    case ReportFormat::Csv: return emit_csv(report);
    case ReportFormat::Json: return emit_json(report);
    case ReportFormat::Table: break;
  }
  return emit_table(report);
}

}  // namespace ratopt
