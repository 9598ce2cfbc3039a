// SPDX-License-Identifier: Apache-2.0

#include "ddrom/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace ddrom {

namespace fs = std::filesystem;
using nlohmann::json;

void write_json(const json& j, const std::string& path) {
  fs::create_directories(fs::path(path).parent_path());
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write '" + path + "'");
  os << j.dump(2) << "\n";
}

void write_csv(const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows, const std::string& path) {
  fs::create_directories(fs::path(path).parent_path());
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write '" + path + "'");
  for (size_t i = 0; i < header.size(); ++i) os << header[i] << (i + 1 < header.size() ? "," : "\n");
  for (const auto& row : rows)
    for (size_t i = 0; i < row.size(); ++i) os << row[i] << (i + 1 < row.size() ? "," : "\n");
}

namespace {

std::string fmt(double v) {
  std::ostringstream ss;
  ss << std::setprecision(12) << v;
  return ss.str();
}

}  // namespace

json offline_report(const Problem& problem, const SurrogateLibrary& lib) {
  json report;
  report["benchmark"] = lib.benchmark;
  report["strategy"] = lib.strategy;
  report["seed"] = lib.seed;
  report["tolerances"] = {{"enrich", lib.enrich_tol}, {"compress", lib.comp_tol}};
  report["t_offline_seconds"] = lib.t_offline_seconds;

  const int n_aip = lib.strategy.rfind("aip:", 0) == 0 ? std::stoi(lib.strategy.substr(4)) : 0;
  json domains = json::array();
  for (size_t d = 0; d < lib.locals.size(); ++d) {
    const LocalSurrogate& ls = lib.locals[d];
    const BuildDomain& dom = problem.domains[d];
    json entry;
    entry["domain"] = dom.name;
    entry["n_dp"] = ls.data_report.termination == "zero_rhs" ? 0 : 1;
    entry["n_ip"] = static_cast<int>(ls.interface_parts.size());
    entry["d_ip"] = 2 + dom.grid->ndims() + n_aip;
    entry["modes"] = ls.modes_total(false);
    entry["modes_before_compression"] = ls.modes_total(true);
    domains.push_back(std::move(entry));
  }
  report["n_aip"] = n_aip;
  report["domains"] = std::move(domains);
  return report;
}

OfflineRun run_offline(const Config& cfg) {
  const Problem problem = make_problem(cfg.benchmark, cfg.problem);
  OfflineRun run;
  run.library = build_library(problem, cfg.offline_options());
  run.library_dir = cfg.out + "/library";
  save_library(run.library, run.library_dir);
  run.report = offline_report(problem, run.library);
  write_json(run.report, cfg.out + "/report.json");

  std::vector<std::vector<std::string>> rows;
  for (const auto& d : run.report.at("domains"))
    rows.push_back({run.library.strategy, std::to_string(run.report.at("n_aip").get<int>()),
                    d.at("domain").get<std::string>(), std::to_string(d.at("n_dp").get<int>()),
                    std::to_string(d.at("n_ip").get<int>()), std::to_string(d.at("d_ip").get<int>()),
                    std::to_string(d.at("modes").get<int>()),
                    std::to_string(d.at("modes_before_compression").get<int>())});
  write_csv({"strategy", "n_aip", "domain", "n_dp", "n_ip", "d_ip", "modes", "modes_before"}, rows,
            cfg.out + "/tables/offline.csv");
  return run;
}

json online_report(const Config& cfg, const Problem& problem, const CouplingSolution& sol,
                   const std::vector<double>& query) {
  json report;
  report["benchmark"] = problem.id;
  report["strategy"] = cfg.strategy;
  report["mu"] = query;
  report["interface_dim"] = sol.interface_dim;
  report["n_gmres"] = sol.iterations;
  report["residual_history"] = sol.residual_history;
  report["t_online_seconds"] = sol.online_seconds;

  if (cfg.reference == "analytic") {
    if (!problem.exact) throw ConfigError("benchmark has no analytic reference");
    Vector exact_nodal(sol.global.mesh.num_nodes());
    for (int i = 0; i < sol.global.mesh.num_nodes(); ++i)
      exact_nodal[i] =
          problem.exact(sol.global.mesh.nodes[i].x(), sol.global.mesh.nodes[i].y(), query);
    report["e2"] = error_l2_analytic(sol.global.mesh, sol.global.values, [&](double x, double y) {
      return problem.exact(x, y, query);
    });
    report["einf"] = error_linf(sol.global.values, exact_nodal);
  } else if (cfg.reference == "monolithic") {
    const FullOrderSolution ref = solve_monolithic(problem, query);
    const Vector ref_vals = remap_field(ref.mesh, ref.values, sol.global.mesh);
    report["e2"] = error_l2(sol.global.mesh, sol.global.values, ref_vals);
    report["einf"] = error_linf(sol.global.values, ref_vals);
  } else if (cfg.reference == "ddfem") {
    const FullOrderSolution ref = solve_ddfem(problem, query, {cfg.gmres_tol, 0, false});
    const Vector ref_vals = remap_field(ref.mesh, ref.values, sol.global.mesh);
    report["e2"] = error_l2(sol.global.mesh, sol.global.values, ref_vals);
    report["einf"] = error_linf(sol.global.values, ref_vals);
    report["reference_iterations"] = ref.iterations;
  } else if (cfg.reference != "none") {
    throw ConfigError("unknown reference '" + cfg.reference + "'");
  }
  return report;
}

OnlineRun run_online(const Config& cfg, const std::string& library_dir,
                     const std::vector<double>& query) {
  const Problem problem = make_problem(cfg.benchmark, cfg.problem);
  const SurrogateLibrary lib = load_library(library_dir);
  OnlineRun run;
  run.solution = solve_online(problem, lib, query, cfg.gmres_tol, cfg.clamp_aip);
  run.report = online_report(cfg, problem, run.solution, query);

  fs::create_directories(cfg.out + "/fields");
  write_solution_csv(run.solution, cfg.out + "/fields/solution.csv");
  if (run.report.contains("einf")) {
    // scaled nodal error map against the configured reference
    Vector ref_vals;
    if (cfg.reference == "analytic") {
      ref_vals.resize(run.solution.global.mesh.num_nodes());
      for (int i = 0; i < run.solution.global.mesh.num_nodes(); ++i)
        ref_vals[i] = problem.exact(run.solution.global.mesh.nodes[i].x(),
                                    run.solution.global.mesh.nodes[i].y(), query);
    } else if (cfg.reference == "monolithic") {
      const FullOrderSolution ref = solve_monolithic(problem, query);
      ref_vals = remap_field(ref.mesh, ref.values, run.solution.global.mesh);
    } else {
      const FullOrderSolution ref = solve_ddfem(problem, query, {cfg.gmres_tol, 0, false});
      ref_vals = remap_field(ref.mesh, ref.values, run.solution.global.mesh);
    }
    write_error_map_csv(run.solution.global.mesh,
                        error_map(run.solution.global.values, ref_vals),
                        cfg.out + "/fields/error_map.csv");
  }
  write_json(run.report, cfg.out + "/report.json");
  return run;
}

FullOrderRun run_fullorder(const Config& cfg, const std::vector<double>& query, bool monolithic,
                           bool ddfem, bool blackbox_timing) {
  const Problem problem = make_problem(cfg.benchmark, cfg.problem);
  FullOrderRun run;
  run.report["benchmark"] = problem.id;
  run.report["mu"] = query;

  if (monolithic) {
    const FullOrderSolution sol = solve_monolithic(problem, query);
    json m = {{"t_seconds", sol.wall_seconds}};
    if (problem.exact)
      m["e2_vs_exact"] = error_l2_analytic(sol.mesh, sol.values, [&](double x, double y) {
        return problem.exact(x, y, query);
      });
    run.report["monolithic"] = std::move(m);
  }
  if (ddfem) {
    const FullOrderSolution sol = solve_ddfem(problem, query, {cfg.gmres_tol, 0, false});
    json d = {{"iterations", sol.iterations},
              {"interface_dim", sol.interface_dim},
              {"t_seconds", sol.wall_seconds}};
    if (blackbox_timing) {
      const FullOrderSolution bb = solve_ddfem(problem, query, {cfg.gmres_tol, 0, true});
      d["t_seconds_blackbox"] = bb.wall_seconds;
    }
    run.report["ddfem"] = std::move(d);
  }
  write_json(run.report, cfg.out + "/report.json");
  return run;
}

json run_compare(const Config& base, const std::vector<std::string>& strategies) {
  if (strategies.size() < 2) throw ConfigError("compare needs at least two strategies");
  std::vector<std::string> sorted = strategies;
  std::sort(sorted.begin(), sorted.end());

  const Problem problem = make_problem(base.benchmark, base.problem);
  const std::vector<double> query = base.query.empty() ? problem.default_query : base.query;

  json comparison = json::array();
  std::vector<std::vector<std::string>> rows;
  for (const std::string& strategy : sorted) {
    Config cfg = base;
    cfg.strategy = strategy;
    cfg.out = base.out + "/" + strategy;
    OfflineRun off = run_offline(cfg);
    OnlineRun on = run_online(cfg, off.library_dir, query);

    json row;
    row["strategy"] = strategy;
    row["t_off_seconds"] = off.library.t_offline_seconds;
    int modes = 0, modes_before = 0;
    for (const auto& l : off.library.locals) {
      modes += l.modes_total(false);
      modes_before += l.modes_total(true);
    }
    row["modes"] = modes;
    row["modes_before_compression"] = modes_before;
    row["n_gmres"] = on.solution.iterations;
    row["t_on_seconds"] = on.solution.online_seconds;
    if (on.report.contains("e2")) row["e2"] = on.report.at("e2");
    if (on.report.contains("einf")) row["einf"] = on.report.at("einf");
    rows.push_back({strategy, std::to_string(modes), std::to_string(modes_before),
                    std::to_string(on.solution.iterations),
                    on.report.contains("e2") ? fmt(on.report.at("e2").get<double>()) : "",
                    on.report.contains("einf") ? fmt(on.report.at("einf").get<double>()) : ""});
    comparison.push_back(std::move(row));
  }
  write_csv({"strategy", "modes", "modes_before", "n_gmres", "e2", "einf"}, rows,
            base.out + "/tables/compare.csv");
  write_json(comparison, base.out + "/compare.json");
  return comparison;
}

}  // namespace ddrom
