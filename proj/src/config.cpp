// SPDX-License-Identifier: Apache-2.0

#include "ddrom/config.hpp"

#include <fstream>
#include <sstream>

namespace ddrom {

using nlohmann::json;

Config Config::preset(const std::string& benchmark) {
  Config c;
  c.benchmark = benchmark;
  if (benchmark == "poisson_2d" || benchmark == "poisson_single") {
    c.reference = "analytic";
  } else if (benchmark == "graetz") {
    c.reference = "monolithic";
  } else if (benchmark == "thermal_cross") {
    c.reference = "ddfem";
  } else {
    throw ConfigError("unknown benchmark '" + benchmark + "'");
  }
  return c;
}

int Config::n_aip() const {
  if (strategy == "reduced") return 0;
  if (strategy.rfind("aip:", 0) == 0) {
    try {
      const int n = std::stoi(strategy.substr(4));
      if (n >= 1) return n;
    } catch (const std::exception&) {
    }
  }
  throw ConfigError("strategy must be 'reduced' or 'aip:N', got '" + strategy + "'");
}

OfflineOptions Config::offline_options() const {
  OfflineOptions o;
  o.strategy = n_aip() > 0 ? "aip" : "reduced";
  o.n_aip = n_aip() > 0 ? n_aip() : 1;
  o.aip_points = aip_points;
  o.aip_scale = aip_scale;
  o.aip_interval = aip_interval;
  o.greedy.enrich_tol = enrich_tol;
  o.greedy.max_modes = max_modes;
  o.greedy.max_sweeps = max_sweeps;
  o.greedy.sweep_tol = sweep_tol;
  o.greedy.seed = seed;
  o.comp_tol = comp_tol;
  o.jobs = jobs;
  return o;
}

namespace {

GridDim grid_from(const json& j, const GridDim& base) {
  GridDim d = base;
  if (j.contains("lo")) d.lo = j.at("lo").get<double>();
  if (j.contains("hi")) d.hi = j.at("hi").get<double>();
  if (j.contains("n")) d.n = j.at("n").get<int>();
  if (d.n < 2 || !(d.hi > d.lo)) throw ConfigError("grid '" + d.name + "' is empty or inverted");
  return d;
}

}  // namespace

Config Config::from_json(const json& j) {
  if (j.contains("schema_version") && j.at("schema_version").get<int>() != 1)
    throw ConfigError("unsupported config schema version");
  Config c = preset(j.value("benchmark", std::string("poisson_2d")));
  c.strategy = j.value("strategy", c.strategy);
  if (j.contains("tolerances")) {
    const auto& t = j.at("tolerances");
    c.enrich_tol = t.value("enrich", c.enrich_tol);
    c.comp_tol = t.value("compress", c.comp_tol);
    c.gmres_tol = t.value("gmres", c.gmres_tol);
  }
  if (c.enrich_tol <= 0 || c.comp_tol <= 0 || c.gmres_tol <= 0)
    throw ConfigError("tolerances must be positive");
  if (j.contains("pgd")) {
    const auto& p = j.at("pgd");
    c.max_modes = p.value("max_modes", c.max_modes);
    c.max_sweeps = p.value("max_sweeps", c.max_sweeps);
    c.sweep_tol = p.value("sweep_tol", c.sweep_tol);
  }
  if (j.contains("aip")) {
    const auto& a = j.at("aip");
    c.aip_points = a.value("points", c.aip_points);
    c.aip_scale = a.value("scale", c.aip_scale);
    c.clamp_aip = a.value("clamp", c.clamp_aip);
    if (a.contains("interval")) {
      const auto& iv = a.at("interval");
      c.aip_interval = std::make_pair(iv.at(0).get<double>(), iv.at(1).get<double>());
    }
  }
  c.query = j.value("query", c.query);
  c.reference = j.value("reference", c.reference);
  c.seed = j.value("seed", c.seed);
  c.jobs = j.value("jobs", c.jobs);
  c.out = j.value("out", c.out);

  if (j.contains("mesh")) {
    const auto& m = j.at("mesh");
    c.problem.poisson_h = m.value("poisson_h", c.problem.poisson_h);
    c.problem.graetz_y_rows = m.value("graetz_y_rows", c.problem.graetz_y_rows);
    c.problem.graetz_y_first = m.value("graetz_y_first", c.problem.graetz_y_first);
    c.problem.graetz_inlet_cols = m.value("graetz_inlet_cols", c.problem.graetz_inlet_cols);
    c.problem.graetz_channel_cols = m.value("graetz_channel_cols", c.problem.graetz_channel_cols);
    c.problem.graetz_overlap_cols = m.value("graetz_overlap_cols", c.problem.graetz_overlap_cols);
    c.problem.cross.wing_depth = m.value("cross_wing_depth", c.problem.cross.wing_depth);
    c.problem.cross.center_h = m.value("cross_center_h", c.problem.cross.center_h);
    c.problem.cross.wing_h = m.value("cross_wing_h", c.problem.cross.wing_h);
  }
  if (j.contains("grids")) {
    const auto& g = j.at("grids");
    if (g.contains("mu")) c.problem.poisson_mu = grid_from(g.at("mu"), c.problem.poisson_mu);
    if (g.contains("mu1")) c.problem.graetz_mu1 = grid_from(g.at("mu1"), c.problem.graetz_mu1);
    if (g.contains("mu2")) c.problem.graetz_mu2 = grid_from(g.at("mu2"), c.problem.graetz_mu2);
    if (g.contains("mu_hat")) c.problem.cross_mu = grid_from(g.at("mu_hat"), c.problem.cross_mu);
  }
  return c;
}

Config Config::load_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config '" + path + "'");
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config parse error: " + std::string(e.what()));
  }
  return from_json(j);
}

json Config::to_json() const {
  json j;
  j["schema_version"] = 1;
  j["benchmark"] = benchmark;
  j["strategy"] = strategy;
  j["tolerances"] = {{"enrich", enrich_tol}, {"compress", comp_tol}, {"gmres", gmres_tol}};
  j["pgd"] = {{"max_modes", max_modes}, {"max_sweeps", max_sweeps}, {"sweep_tol", sweep_tol}};
  json a = {{"points", aip_points}, {"scale", aip_scale}, {"clamp", clamp_aip}};
  if (aip_interval) a["interval"] = {aip_interval->first, aip_interval->second};
  j["aip"] = std::move(a);
  j["query"] = query;
  j["reference"] = reference;
  j["seed"] = seed;
  j["jobs"] = jobs;
  j["out"] = out;
  j["mesh"] = {{"poisson_h", problem.poisson_h},
               {"graetz_y_rows", problem.graetz_y_rows},
               {"graetz_y_first", problem.graetz_y_first},
               {"graetz_inlet_cols", problem.graetz_inlet_cols},
               {"graetz_channel_cols", problem.graetz_channel_cols},
               {"graetz_overlap_cols", problem.graetz_overlap_cols},
               {"cross_wing_depth", problem.cross.wing_depth},
               {"cross_center_h", problem.cross.center_h},
               {"cross_wing_h", problem.cross.wing_h}};
  auto dim_json = [](const GridDim& d) {
    return json{{"lo", d.lo}, {"hi", d.hi}, {"n", d.n}};
  };
  j["grids"] = {{"mu", dim_json(problem.poisson_mu)},
                {"mu1", dim_json(problem.graetz_mu1)},
                {"mu2", dim_json(problem.graetz_mu2)},
                {"mu_hat", dim_json(problem.cross_mu)}};
  return j;
}

std::vector<double> parse_mu_list(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      size_t pos = 0;
      out.push_back(std::stod(item, &pos));
      if (pos != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ParameterError("cannot parse parameter value '" + item + "'");
    }
  }
  return out;
}

int exit_code_for_current_exception() {
  try {
    throw;
  } catch (const ParameterError&) {
    return 3;
  } catch (const NumericalError&) {
    return 4;
  } catch (const ConfigError&) {
    return 2;
  } catch (const std::exception&) {
    return 4;
  }
}

}  // namespace ddrom
