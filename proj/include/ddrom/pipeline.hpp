// SPDX-License-Identifier: Apache-2.0

#ifndef DDROM_PIPELINE_HPP
#define DDROM_PIPELINE_HPP

#include "ddrom/config.hpp"
#include "ddrom/dd_online.hpp"

namespace ddrom {

// High-level benchmark pipelines behind the CLI subcommands. Each writes its
// artifacts under cfg.out and returns the run report.

struct OfflineRun {
  SurrogateLibrary library;
  nlohmann::json report;
  std::string library_dir;
};
OfflineRun run_offline(const Config& cfg);

struct OnlineRun {
  CouplingSolution solution;
  nlohmann::json report;
};
OnlineRun run_online(const Config& cfg, const std::string& library_dir,
                     const std::vector<double>& query);

struct FullOrderRun {
  nlohmann::json report;
};
FullOrderRun run_fullorder(const Config& cfg, const std::vector<double>& query, bool monolithic,
                           bool ddfem, bool blackbox_timing);

nlohmann::json run_compare(const Config& base, const std::vector<std::string>& strategies);

// Report helpers shared by the pipelines and the acceptance suite.
nlohmann::json offline_report(const Problem& problem, const SurrogateLibrary& lib);
nlohmann::json online_report(const Config& cfg, const Problem& problem,
                             const CouplingSolution& sol, const std::vector<double>& query);
void write_json(const nlohmann::json& j, const std::string& path);
void write_csv(const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows, const std::string& path);

}  // namespace ddrom

#endif
