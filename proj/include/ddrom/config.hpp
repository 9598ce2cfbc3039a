// SPDX-License-Identifier: Apache-2.0

#ifndef DDROM_CONFIG_HPP
#define DDROM_CONFIG_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ddrom/dd_offline.hpp"

namespace ddrom {

// Benchmark run configuration. Presets embed the published setups; a JSON
// config (or CLI flags) overrides individual fields.
struct Config {
  std::string benchmark = "poisson_2d";
  std::string strategy = "reduced";  // "reduced" | "aip:N"

  double enrich_tol = 1e-4;
  double comp_tol = 1e-3;
  double gmres_tol = 1e-6;
  int max_modes = 60;
  int max_sweeps = 30;
  double sweep_tol = 1e-6;

  int aip_points = 21;
  double aip_scale = 1.5;
  std::optional<std::pair<double, double>> aip_interval;
  bool clamp_aip = false;

  std::vector<double> query;  // empty: benchmark default
  std::string reference = "none";  // none | analytic | monolithic | ddfem
  std::uint64_t seed = 20240605;
  int jobs = 1;
  std::string out = "out";

  ProblemOptions problem;

  static Config preset(const std::string& benchmark);
  static Config from_json(const nlohmann::json& j);
  static Config load_file(const std::string& path);
  nlohmann::json to_json() const;

  int n_aip() const;                       // 0 for the reduced strategy
  OfflineOptions offline_options() const;  // greedy/compression/aip settings
};

std::vector<double> parse_mu_list(const std::string& csv);

// Exit-code mapping: 0 ok, 2 usage/config/schema, 3 parameter/domain,
// 4 numerical failure.
int exit_code_for_current_exception();

}  // namespace ddrom

#endif
