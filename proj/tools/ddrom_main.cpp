// SPDX-License-Identifier: Apache-2.0

#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ddrom/pipeline.hpp"

namespace {

ddrom::Config make_config(const std::string& config_path, const std::string& benchmark,
                          const std::string& strategy, const std::string& out, int jobs,
                          std::uint64_t seed, bool have_seed) {
  ddrom::Config cfg = config_path.empty() ? ddrom::Config::preset(benchmark.empty() ? "poisson_2d" : benchmark)
                                          : ddrom::Config::load_file(config_path);
  if (!benchmark.empty() && config_path.empty()) cfg.benchmark = benchmark;
  if (!benchmark.empty() && !config_path.empty() && benchmark != cfg.benchmark)
    throw ddrom::ConfigError("--benchmark disagrees with the config file");
  if (!strategy.empty()) cfg.strategy = strategy;
  if (!out.empty()) cfg.out = out;
  if (jobs > 0) cfg.jobs = jobs;
  if (have_seed) cfg.seed = seed;
  (void)cfg.n_aip();  // validates the strategy string
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PGD-based local surrogate models coupled by overlapping domain decomposition"};
  app.require_subcommand(1);

  std::string config_path, benchmark, strategy, out, mu_csv, library_dir, strategies_csv;
  int jobs = 0;
  std::uint64_t seed = 0;
  bool have_seed = false;
  bool flag_monolithic = false, flag_ddfem = false, flag_blackbox = false, flag_clamp = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON configuration file");
    cmd->add_option("--benchmark", benchmark, "poisson_2d | graetz | thermal_cross");
    cmd->add_option("--strategy", strategy, "reduced | aip:N");
    cmd->add_option("--out", out, "output directory");
    cmd->add_option("--jobs", jobs, "concurrent offline builds");
    cmd->add_option("--seed", seed, "PGD initialization seed")->each([&](const std::string&) {
      have_seed = true;
    });
  };

  CLI::App* offline = app.add_subcommand("offline", "build and persist the surrogate library");
  add_common(offline);

  CLI::App* online = app.add_subcommand("online", "couple the surrogates at a parameter point");
  add_common(online);
  online->add_option("--library", library_dir, "surrogate library directory");
  online->add_option("--mu", mu_csv, "comma-separated query parameters");
  online->add_flag("--clamp-aip", flag_clamp, "clamp interface parameters into their box");

  CLI::App* fullorder = app.add_subcommand("fullorder", "full-order reference solves");
  add_common(fullorder);
  fullorder->add_option("--mu", mu_csv, "comma-separated query parameters");
  fullorder->add_flag("--monolithic", flag_monolithic, "monolithic Galerkin solve");
  fullorder->add_flag("--ddfem", flag_ddfem, "overlapping Schwarz reference solve");
  fullorder->add_flag("--blackbox-timing", flag_blackbox,
                      "also time DD-FEM with per-application local assembly");

  CLI::App* compare = app.add_subcommand("compare", "side-by-side strategy comparison");
  add_common(compare);
  compare->add_option("--mu", mu_csv, "comma-separated query parameters");
  compare->add_option("--strategies", strategies_csv, "comma-separated strategy list");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    ddrom::Config cfg = make_config(config_path, benchmark, strategy, out, jobs, seed, have_seed);
    cfg.clamp_aip = cfg.clamp_aip || flag_clamp;
    const ddrom::Problem probe = ddrom::make_problem(cfg.benchmark, cfg.problem);
    std::vector<double> query = mu_csv.empty() ? cfg.query : ddrom::parse_mu_list(mu_csv);
    if (query.empty()) query = probe.default_query;

    if (*offline) {
      auto run = ddrom::run_offline(cfg);
      std::cout << "library: " << run.library_dir << "\n"
                << run.report.dump(2) << std::endl;
    } else if (*online) {
      if (library_dir.empty()) library_dir = cfg.out + "/library";
      auto run = ddrom::run_online(cfg, library_dir, query);
      std::cout << run.report.dump(2) << std::endl;
    } else if (*fullorder) {
      if (!flag_monolithic && !flag_ddfem) flag_monolithic = flag_ddfem = true;
      auto run = ddrom::run_fullorder(cfg, query, flag_monolithic, flag_ddfem, flag_blackbox);
      std::cout << run.report.dump(2) << std::endl;
    } else if (*compare) {
      std::vector<std::string> strategies;
      std::stringstream ss(strategies_csv.empty() ? std::string("reduced,aip:3") : strategies_csv);
      std::string item;
      while (std::getline(ss, item, ',')) strategies.push_back(item);
      cfg.query = query;
      auto comparison = ddrom::run_compare(cfg, strategies);
      std::cout << comparison.dump(2) << std::endl;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return ddrom::exit_code_for_current_exception();
  }
  return 0;
}
