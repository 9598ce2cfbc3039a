// SPDX-License-Identifier: Apache-2.0

#ifndef DDROM_DD_OFFLINE_HPP
#define DDROM_DD_OFFLINE_HPP

#include <optional>
#include <utility>

#include "ddrom/pgd.hpp"
#include "ddrom/problems.hpp"

namespace ddrom {

struct OfflineOptions {
  std::string strategy = "reduced";  // "reduced" | "aip"
  int n_aip = 3;                     // cluster size for the aip strategy
  int aip_points = 21;               // collocation points per interface parameter
  double aip_scale = 1.5;            // interval = scale * [-S, S] with S from a midpoint solve
  std::optional<std::pair<double, double>> aip_interval;  // explicit override
  GreedyOptions greedy;
  double comp_tol = 1e-3;
  int jobs = 1;
};

// Per-subdomain surrogate bundle: the data-problem expansion plus one
// expansion per interface dof (reduced) or per cluster of active interface
// parameters (aip).
struct LocalSurrogate {
  std::string strategy;
  int domain = 0;
  SeparatedTensor data_part;
  std::vector<SeparatedTensor> interface_parts;
  std::vector<std::vector<int>> clusters;  // aip only: interface-dof indices per cluster
  std::pair<double, double> aip_interval{0.0, 0.0};
  EnrichmentReport data_report;
  std::vector<EnrichmentReport> part_reports;

  int modes_total(bool before_compression = false) const;
};

struct SurrogateLibrary {
  std::string benchmark;
  std::string strategy;  // "reduced" or "aip:N"
  std::uint64_t seed = 0;
  double enrich_tol = 1e-4;
  double comp_tol = 1e-3;
  std::vector<LocalSurrogate> locals;  // one per build domain
  double t_offline_seconds = 0.0;
};

// Independent per-problem seeds, stable under build order.
std::uint64_t mix_seed(std::uint64_t base, int domain, int index);

// u_PGD^{0,f}: greedy solve of the data problem (load minus operator applied
// to the separated Dirichlet lift), compressed.
SeparatedTensor build_data_surrogate(const BuildDomain& dom, const GreedyOptions& greedy,
                                     double comp_tol, EnrichmentReport& report);

// One expansion per interface dof, each driven by the trace basis function
// with value one at that dof: A(u^j, v; mu) = -A(phi^j, v; mu).
std::vector<SeparatedTensor> build_unitary_surrogates(const BuildDomain& dom,
                                                      const GreedyOptions& greedy, double comp_tol,
                                                      std::vector<EnrichmentReport>& reports,
                                                      int jobs = 1);

// One expansion per cluster of active interface parameters, over the extended
// grid (mu dims + one dim per clustered nodal value).
std::vector<SeparatedTensor> build_clustered_surrogates(
    const BuildDomain& dom, int n_aip, int aip_points, std::pair<double, double> interval,
    const GreedyOptions& greedy, double comp_tol, std::vector<std::vector<int>>& clusters,
    std::vector<EnrichmentReport>& reports, int jobs = 1);

SurrogateLibrary build_library(const Problem& problem, const OfflineOptions& options);

// Directory container: manifest.json plus one little-endian f64 binary per
// tensor with a u64 header [rank][spatial_dim][grid sizes...].
void save_library(const SurrogateLibrary& lib, const std::string& dir);
SurrogateLibrary load_library(const std::string& dir);

void save_tensor(const SeparatedTensor& t, const std::string& path);
SeparatedTensor load_tensor(const std::string& path, const GridPtr& grid);

}  // namespace ddrom

#endif
