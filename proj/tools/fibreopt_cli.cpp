// fibreopt: build lookup tables for catalog families and answer queries.
//
//   fibreopt problems list [--json]
//   fibreopt tables build [--config FILE] [--problem NAME] [--param K=V]... [-o FILE]
//   fibreopt solve --table FILE (--theta ANGLES... | --thetas-file FILE) [--mode MODE] [--json]
//   fibreopt validate --table FILE [--seed N] [--samples N]
//   fibreopt bench --table FILE [--queries N] [--seed N] [--mode MODE]
//
// Exit status: 0 ok, 1 usage, 2 configuration, 3 I/O or unreadable table,
// 4 degenerate critical point, 5 tracking failure, 6 validation failure,
// 7 table/problem mismatch.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fibreopt/fibreopt.hpp"
#include "fibreopt/run_config.hpp"

using namespace fibreopt;

namespace {

std::string fmt_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

// One angle vector from a line such as "0.1 2.3" or "0.1,2.3".
AngleVec parse_angles(const std::string& text, int dim) {
  std::string s = text;
  std::replace(s.begin(), s.end(), ',', ' ');
  std::istringstream in(s);
  std::vector<double> v;
  std::string tok;
  while (in >> tok) {
    std::size_t used = 0;
    double x = 0.0;
    try {
      x = std::stod(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tok.size()) throw Error(ErrorKind::invalid_input, "not a number: '" + tok + "'");
    v.push_back(x);
  }
  if (static_cast<int>(v.size()) != dim) {
    throw Error(ErrorKind::invalid_input, "expected " + std::to_string(dim) + " angle(s) in '" + text + "'");
  }
  return wrap(v);
}

std::vector<std::string> read_theta_lines(const std::string& path) {
  std::istringstream in(read_file(path));
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    lines.push_back(line);
  }
  return lines;
}

int report_error(const Error& e) {
  std::cerr << "error: " << e.what() << "\n";
  return exit_code_for(e.kind());
}

// ---------------------------------------------------------------- problems

int cmd_problems_list(bool as_json) {
  if (as_json) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& e : catalog()) {
      const auto p = e.make({});
      out.push_back({{"name", e.name},
                     {"formula", e.formula},
                     {"notes", e.notes},
                     {"fibre_dim", p.shape.fibre_dim},
                     {"base_dim", p.shape.base_dim},
                     {"parameters", p.parameters}});
    }
    std::cout << out.dump(2) << "\n";
    return 0;
  }
  for (const auto& e : catalog()) {
    const auto p = e.make({});
    std::cout << e.name << "  (k=" << p.shape.fibre_dim << ", m=" << p.shape.base_dim << ")\n"
              << "    " << e.formula << "\n"
              << "    " << e.notes << "\n";
    for (const auto& [k, v] : p.parameters) std::cout << "    parameter " << k << " = " << fmt_real(v) << "\n";
  }
  return 0;
}

// ------------------------------------------------------------------ tables

struct BuildFlags {
  std::string config_path;
  std::string problem;
  std::vector<std::string> params;
  std::optional<int> anchors, fibre_grid, region_grid, bounds_grid, max_iter;
  std::optional<double> tol, value_tol, alpha, beta;
  std::optional<std::uint64_t> seed;
  std::string out;
};

RunConfig resolve_build_config(const BuildFlags& f) {
  RunConfig c = f.config_path.empty() ? RunConfig{} : load_run_config(f.config_path);
  if (!f.problem.empty()) {
    if (f.problem != c.problem) c.parameters.clear();
    c.problem = f.problem;
  }
  for (const auto& kv : f.params) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) throw Error(ErrorKind::invalid_config, "--param expects NAME=VALUE");
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(kv.substr(eq + 1), &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != kv.size() - eq - 1) throw Error(ErrorKind::invalid_config, "bad value in --param " + kv);
    c.parameters[kv.substr(0, eq)] = v;
  }
  if (f.anchors) c.table.anchors_per_dim = *f.anchors;
  if (f.fibre_grid) c.table.fibre_grid_per_dim = *f.fibre_grid;
  if (f.region_grid) c.table.region_grid_per_dim = *f.region_grid;
  if (f.bounds_grid) c.table.bounds_grid_per_dim = *f.bounds_grid;
  if (f.max_iter) c.table.max_newton_iter = *f.max_iter;
  if (f.tol) c.table.tol = *f.tol;
  if (f.value_tol) c.table.value_tol = *f.value_tol;
  if (f.alpha) c.table.alpha = *f.alpha;
  if (f.beta) c.table.beta = *f.beta;
  if (f.seed) c.table.seed = *f.seed;
  if (!f.out.empty()) c.table_out = f.out;
  c.validate();
  return c;
}

std::string summary_line(const PrecomputedTable& t) {
  std::string b;
  for (const auto& c : t.topology.components) b += (b.empty() ? "" : ",") + std::to_string(c.b);
  return std::to_string(t.topology.num_components()) + " components; b=[" + b +
         "]; min components: " + std::to_string(t.topology.num_min_components()) +
         "; region zones: " + std::to_string(t.regions.zone_count());
}

int cmd_tables_build(const BuildFlags& flags) {
  const RunConfig c = resolve_build_config(flags);
  if (c.table_out.empty()) throw Error(ErrorKind::invalid_config, "no output path (use -o or table_out)");
  const PrecomputedTable t = build_table(c.make_problem(), c.table);
  save_table(t, c.table_out);
  std::cout << summary_line(t) << "\n";
  std::cout << "bounds: alpha=" << fmt_real(t.bounds.alpha) << " beta=" << fmt_real(t.bounds.beta) << " ("
            << to_string(t.bounds.source) << ")\n";
  std::cout << "wrote " << c.table_out << "\n";
  return 0;
}

// ------------------------------------------------------------------- solve

struct SolveFlags {
  std::string table;
  std::vector<std::string> thetas;
  std::string thetas_file;
  std::string mode = "track-all-minima";
  bool json = false;
};

std::string result_line(const SolveResult& r) {
  std::string s = "theta=" + format_angles(r.theta);
  for (const auto& m : r.minimizers) s += " x=" + format_angles(m.x);
  s += " f=" + fmt_real(r.f_value);
  s += " evals=" + std::to_string(r.evaluations.value) + "/" + std::to_string(r.evaluations.grad) + "/" +
       std::to_string(r.evaluations.hess) + "/" + std::to_string(r.evaluations.mixed);
  s += " steps=" + std::to_string(r.steps());
  s += std::string(" certified=") + (r.all_steps_certified ? "yes" : "no");
  return s;
}

nlohmann::json result_json(const SolveResult& r) {
  nlohmann::json mins = nlohmann::json::array();
  for (const auto& m : r.minimizers) mins.push_back(m.x.coords());
  return {{"theta", r.theta.coords()},
          {"minimizers", mins},
          {"components", r.minimizer_components},
          {"f", r.f_value},
          {"evaluations",
           {{"value", r.evaluations.value}, {"grad", r.evaluations.grad}, {"hess", r.evaluations.hess},
            {"mixed", r.evaluations.mixed}}},
          {"steps", r.steps()},
          {"certified", r.all_steps_certified}};
}

int cmd_solve(const SolveFlags& f) {
  const QueryMode mode = parse_query_mode(f.mode);
  std::vector<std::string> inputs = f.thetas;
  if (!f.thetas_file.empty()) {
    const auto more = read_theta_lines(f.thetas_file);
    inputs.insert(inputs.end(), more.begin(), more.end());
  }
  if (inputs.empty()) throw Error(ErrorKind::invalid_config, "no theta given (use --theta or --thetas-file)");
  const PrecomputedTable table = load_table(f.table);
  const ProblemDefinition problem = catalog_problem_for(table);

  int status = 0;
  for (const auto& text : inputs) {
    try {
      const SolveResult r = query(table, problem, parse_angles(text, table.shape.base_dim), mode);
      if (f.json) {
        std::cout << result_json(r).dump() << "\n";
      } else {
        std::cout << result_line(r) << "\n";
      }
    } catch (const Error& e) {
      if (f.json) {
        std::cout << nlohmann::json{{"input", text}, {"error", e.what()}}.dump() << "\n";
      } else {
        std::cout << "input=\"" << text << "\" error: " << e.what() << "\n";
      }
      if (status == 0) status = exit_code_for(e.kind());
    }
  }
  return status;
}

// ---------------------------------------------------------------- validate

int cmd_validate(const std::string& path, std::uint64_t seed, int samples) {
  if (samples <= 0) throw Error(ErrorKind::invalid_config, "--samples must be positive");
  // Version and checksum are enforced here; semantic checks are reported
  // below rather than aborting, so that a damaged table still gets a full report.
  const PrecomputedTable table = parse_table_unchecked(read_file(path));
  const ProblemDefinition problem = catalog_problem_for(table);

  bool ok = true;
  try {
    validate_table(table, problem);
    std::cout << "PASS table-consistency\n";
  } catch (const Error& e) {
    ok = false;
    std::cout << "FAIL table-consistency: " << e.what() << "\n";
  }

  InvariantOptions opt;
  opt.oracle_samples = samples;
  opt.count_samples = std::min(samples, 200);
  try {
    const InvariantReport rep = run_invariant_suite(problem, table, seed, opt);
    for (const auto& r : rep.results) {
      std::cout << (r.passed ? "PASS " : "FAIL ") << r.name;
      if (!r.detail.empty()) std::cout << " (" << r.detail << ")";
      std::cout << "\n";
      for (const auto& c : r.counterexamples) std::cout << "    counterexample: " << c << "\n";
      ok = ok && r.passed;
    }
  } catch (const Error& e) {
    ok = false;
    std::cout << "FAIL invariant-suite: " << e.what() << "\n";
  }
  std::cout << (ok ? "table valid" : "table INVALID") << "\n";
  return ok ? 0 : kExitValidationFailed;
}

// ------------------------------------------------------------------- bench

template <class T>
void print_stats(const char* label, std::vector<T> v) {
  std::sort(v.begin(), v.end());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  const double median = v.size() % 2 ? static_cast<double>(v[v.size() / 2])
                                      : 0.5 * (static_cast<double>(v[v.size() / 2 - 1]) + static_cast<double>(v[v.size() / 2]));
  std::printf("%-16s mean %12.2f  median %12.2f  max %12.2f\n", label, mean, median, static_cast<double>(v.back()));
}

int cmd_bench(const std::string& path, int n, std::uint64_t seed, const std::string& mode_name, int oracle_samples) {
  if (n < 0) throw Error(ErrorKind::invalid_config, "--queries must be nonnegative");
  const QueryMode mode = parse_query_mode(mode_name);
  const PrecomputedTable table = load_table(path);
  const ProblemDefinition problem = catalog_problem_for(table);
  std::printf("problem %s, mode %s, %d queries\n", table.problem_name.c_str(), to_string(mode), n);
  if (n == 0) {
    std::printf("no queries; no statistics\n");
    return 0;
  }

  std::mt19937_64 rng(seed);
  std::vector<AngleVec> thetas;
  for (int i = 0; i < n; ++i) thetas.push_back(random_angles(rng, table.shape.base_dim));

  std::vector<std::uint64_t> values, grads, hesses, steps, paths;
  std::vector<double> micros;
  int uncertified = 0;
  for (const auto& th : thetas) {
    const auto t0 = std::chrono::steady_clock::now();
    const SolveResult r = query(table, problem, th, mode);
    const auto t1 = std::chrono::steady_clock::now();
    micros.push_back(std::chrono::duration<double, std::micro>(t1 - t0).count());
    values.push_back(r.evaluations.value);
    grads.push_back(r.evaluations.grad);
    hesses.push_back(r.evaluations.hess);
    steps.push_back(r.steps());
    paths.push_back(r.tracked.size());
    uncertified += r.all_steps_certified ? 0 : 1;
  }
  print_stats("value evals", values);
  print_stats("gradient evals", grads);
  print_stats("Hessian evals", hesses);
  print_stats("steps", steps);
  print_stats("paths tracked", paths);
  print_stats("wall time (us)", micros);
  std::printf("uncertified queries: %d\n", uncertified);

  const int grid = default_oracle_grid(table.shape.fibre_dim);
  const int m = std::min(n, std::max(oracle_samples, 1));
  double oracle_evals = 0.0;
  for (int i = 0; i < m; ++i) {
    oracle_evals += static_cast<double>(oracle_fibre_minimum(problem, thetas[static_cast<std::size_t>(i)], grid).evaluations);
  }
  oracle_evals /= m;
  const double mean_values = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  std::printf("oracle value evals (grid %d): %.0f; ratio %.1fx\n", grid, oracle_evals, oracle_evals / mean_values);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fibre-wise optimisation over a torus bundle via precomputed critical circles"};
  app.require_subcommand(1);

  auto* problems = app.add_subcommand("problems", "Catalog of cost families");
  problems->require_subcommand(1);
  bool list_json = false;
  auto* list = problems->add_subcommand("list", "List catalog families");
  list->add_flag("--json", list_json, "Machine-readable output");

  auto* tables = app.add_subcommand("tables", "Lookup tables");
  tables->require_subcommand(1);
  BuildFlags bf;
  auto* build = tables->add_subcommand("build", "Build and save a table");
  build->add_option("--config", bf.config_path, "JSON run configuration");
  build->add_option("--problem", bf.problem, "Catalog family name");
  build->add_option("--param", bf.params, "Family parameter NAME=VALUE (repeatable)");
  build->add_option("--anchors", bf.anchors, "Anchors per base dimension");
  build->add_option("--fibre-grid", bf.fibre_grid, "Fibre seed grid per dimension");
  build->add_option("--region-grid", bf.region_grid, "Region map cells per base dimension");
  build->add_option("--bounds-grid", bf.bounds_grid, "Grid for derivative-bound estimates");
  build->add_option("--max-newton-iter", bf.max_iter, "Newton iteration cap");
  build->add_option("--tol", bf.tol, "Gradient tolerance");
  build->add_option("--value-tol", bf.value_tol, "Tie tolerance on f");
  build->add_option("--alpha", bf.alpha, "Hessian Lipschitz bound (with --beta)");
  build->add_option("--beta", bf.beta, "Mixed-partial bound (with --alpha)");
  build->add_option("--seed", bf.seed, "Seed");
  build->add_option("-o,--out", bf.out, "Output table file");

  SolveFlags sf;
  auto* solve = app.add_subcommand("solve", "Minimise f(.; theta) using a table");
  solve->add_option("--table", sf.table, "Table file")->required();
  solve->add_option("--theta", sf.thetas, "Parameter angles, comma or space separated (repeatable)");
  solve->add_option("--thetas-file", sf.thetas_file, "File with one angle vector per line");
  solve->add_option("--mode", sf.mode, "track-all-minima | region-guided");
  solve->add_flag("--json", sf.json, "One JSON object per line");

  std::string vpath;
  std::uint64_t vseed = 0;
  int vsamples = 500;
  auto* validate = app.add_subcommand("validate", "Check a table against brute force and invariants");
  validate->add_option("--table", vpath, "Table file")->required();
  validate->add_option("--seed", vseed, "Seed");
  validate->add_option("--samples", vsamples, "Random theta samples");

  std::string bpath;
  int bqueries = 1000;
  std::uint64_t bseed = 0;
  std::string bmode = "track-all-minima";
  int boracle = 20;
  auto* bench = app.add_subcommand("bench", "Query statistics and the oracle evaluation ratio");
  bench->add_option("--table", bpath, "Table file")->required();
  bench->add_option("--queries", bqueries, "Number of random queries");
  bench->add_option("--seed", bseed, "Seed");
  bench->add_option("--mode", bmode, "track-all-minima | region-guided");
  bench->add_option("--oracle-samples", boracle, "Queries also solved by the oracle for the ratio");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (list->parsed()) return cmd_problems_list(list_json);
    if (build->parsed()) return cmd_tables_build(bf);
    if (solve->parsed()) return cmd_solve(sf);
    if (validate->parsed()) return cmd_validate(vpath, vseed, vsamples);
    if (bench->parsed()) return cmd_bench(bpath, bqueries, bseed, bmode, boracle);
  } catch (const Error& e) {
    return report_error(e);
  }
  return kExitUsage;
}
