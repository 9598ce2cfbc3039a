// SPDX-License-Identifier: Apache-2.0

#include "ddrom/dd_offline.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <thread>

#include <json.hpp>

#include "ddrom/linalg.hpp"

namespace ddrom {

namespace fs = std::filesystem;
using nlohmann::json;

std::uint64_t mix_seed(std::uint64_t base, int domain, int index) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ull * (static_cast<std::uint64_t>(domain) * 8191u +
                                                    static_cast<std::uint64_t>(index) + 1u);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

int LocalSurrogate::modes_total(bool before_compression) const {
  if (before_compression) {
    int n = data_report.modes_before_compression;
    for (const auto& r : part_reports) n += r.modes_before_compression;
    return n;
  }
  int n = data_part.rank();
  for (const auto& t : interface_parts) n += t.rank();
  return n;
}

namespace {

// Runs fn(i) for i in [0, n) on up to `jobs` worker threads.
void parallel_for(int n, int jobs, const std::function<void(int)>& fn) {
  if (jobs <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<size_t>(std::min(jobs, n)));
  for (size_t w = 0; w < errors.size(); ++w) {
    pool.emplace_back([&, w] {
      try {
        for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

// Load of the data problem: F minus the operator applied to the separated lift.
SeparatedLoad data_problem_load(const BuildDomain& dom) {
  SeparatedLoad rhs = dom.load;
  rhs.grid = dom.grid;
  const DofPartition& part = dom.topo.partition;
  for (const Mode& lm : dom.lift.terms) {
    Vector l_free(part.n_free()), l_con(part.n_constrained());
    for (int i = 0; i < part.n_free(); ++i) l_free[i] = lm.spatial[part.free_nodes[static_cast<size_t>(i)]];
    for (int i = 0; i < part.n_constrained(); ++i)
      l_con[i] = lm.spatial[part.constrained_nodes[static_cast<size_t>(i)]];
    for (const AffineTerm& term : dom.op.terms) {
      LoadTerm t;
      t.f = -(term.ff * l_free + term.fc * l_con);
      t.factors.reserve(term.factors.size());
      for (size_t k = 0; k < term.factors.size(); ++k)
        t.factors.push_back((term.factors[k].array() * lm.factors[k].array()).matrix());
      rhs.terms.push_back(std::move(t));
    }
  }
  return rhs;
}

}  // namespace

SeparatedTensor build_data_surrogate(const BuildDomain& dom, const GreedyOptions& greedy,
                                     double comp_tol, EnrichmentReport& report) {
  SeparatedLoad rhs = data_problem_load(dom);
  if (rhs.terms.empty()) {
    report = EnrichmentReport{};
    report.termination = "zero_rhs";
    report.seed = greedy.seed;
    return SeparatedTensor::zero(dom.op.n_free, dom.grid);
  }
  auto [tensor, rep] = greedy_solve(dom.op, rhs, greedy);
  SeparatedTensor compressed = compress(tensor, comp_tol);
  rep.modes_after = compressed.rank();
  report = std::move(rep);
  return compressed;
}

std::vector<SeparatedTensor> build_unitary_surrogates(const BuildDomain& dom,
                                                      const GreedyOptions& greedy, double comp_tol,
                                                      std::vector<EnrichmentReport>& reports,
                                                      int jobs) {
  const int n = dom.topo.total_interface_dofs();
  std::vector<SeparatedTensor> parts(static_cast<size_t>(n));
  reports.assign(static_cast<size_t>(n), {});

  parallel_for(n, jobs, [&](int j) {
    const int node = dom.topo.interface_node(j);
    const int cidx = dom.topo.partition.node_to_constrained[node];
    SeparatedLoad rhs;
    rhs.grid = dom.grid;
    for (const AffineTerm& term : dom.op.terms) {
      LoadTerm t;
      t.f = -Vector(term.fc.col(cidx));
      t.factors = term.factors;
      rhs.terms.push_back(std::move(t));
    }
    GreedyOptions local = greedy;
    local.seed = mix_seed(greedy.seed, 0, j);
    try {
      auto [tensor, rep] = greedy_solve(dom.op, rhs, local);
      SeparatedTensor compressed = compress(tensor, comp_tol);
      rep.modes_after = compressed.rank();
      parts[static_cast<size_t>(j)] = std::move(compressed);
      reports[static_cast<size_t>(j)] = std::move(rep);
    } catch (const EnrichmentError& e) {
      throw EnrichmentError("interface problem " + std::to_string(j) + ": " + e.what(),
                            e.partial_result);
    }
  });
  return parts;
}

std::vector<SeparatedTensor> build_clustered_surrogates(
    const BuildDomain& dom, int n_aip, int aip_points, std::pair<double, double> interval,
    const GreedyOptions& greedy, double comp_tol, std::vector<std::vector<int>>& clusters,
    std::vector<EnrichmentReport>& reports, int jobs) {
  if (n_aip < 1) throw ConfigError("cluster size must be >= 1");
  const int n = dom.topo.total_interface_dofs();
  clusters.clear();
  for (int start = 0; start < n; start += n_aip) {
    std::vector<int> c;
    for (int j = start; j < std::min(start + n_aip, n); ++j) c.push_back(j);
    clusters.push_back(std::move(c));
  }
  if (!clusters.empty() && clusters.back().empty()) throw ConfigError("empty cluster");

  const int nc = static_cast<int>(clusters.size());
  std::vector<SeparatedTensor> parts(static_cast<size_t>(nc));
  reports.assign(static_cast<size_t>(nc), {});

  parallel_for(nc, jobs, [&](int ci) {
    const auto& cluster = clusters[static_cast<size_t>(ci)];
    auto grid = std::make_shared<ParametricGrid>(*dom.grid);
    for (int q : cluster)
      grid->dims.push_back(
          {"lambda_" + std::to_string(q), interval.first, interval.second, aip_points});

    AffineOperator op;
    op.grid = grid;
    op.n_free = dom.op.n_free;
    op.n_constrained = dom.op.n_constrained;
    for (const AffineTerm& term : dom.op.terms) {
      AffineTerm ext = term;
      for (size_t q = 0; q < cluster.size(); ++q) ext.factors.push_back(Vector::Ones(aip_points));
      op.terms.push_back(std::move(ext));
    }

    SeparatedLoad rhs;
    rhs.grid = grid;
    const int base_dims = dom.grid->ndims();
    for (size_t q = 0; q < cluster.size(); ++q) {
      const int node = dom.topo.interface_node(cluster[q]);
      const int cidx = dom.topo.partition.node_to_constrained[node];
      for (const AffineTerm& term : dom.op.terms) {
        LoadTerm t;
        t.f = -Vector(term.fc.col(cidx));
        t.factors = term.factors;
        for (size_t q2 = 0; q2 < cluster.size(); ++q2)
          t.factors.push_back(q2 == q ? grid->dims[static_cast<size_t>(base_dims) + q2].points()
                                      : Vector::Ones(aip_points));
        rhs.terms.push_back(std::move(t));
      }
    }

    GreedyOptions local = greedy;
    local.seed = mix_seed(greedy.seed, 1, ci);
    auto [tensor, rep] = greedy_solve(op, rhs, local);
    SeparatedTensor compressed = compress(tensor, comp_tol);
    rep.modes_after = compressed.rank();
    parts[static_cast<size_t>(ci)] = std::move(compressed);
    reports[static_cast<size_t>(ci)] = std::move(rep);
  });
  return parts;
}

SurrogateLibrary build_library(const Problem& problem, const OfflineOptions& options) {
  const auto t0 = std::chrono::steady_clock::now();
  SurrogateLibrary lib;
  lib.benchmark = problem.id;
  lib.strategy =
      options.strategy == "aip" ? "aip:" + std::to_string(options.n_aip) : options.strategy;
  lib.seed = options.greedy.seed;
  lib.enrich_tol = options.greedy.enrich_tol;
  lib.comp_tol = options.comp_tol;

  std::pair<double, double> interval{0.0, 0.0};
  if (options.strategy == "aip") {
    if (options.aip_interval) {
      interval = *options.aip_interval;
    } else {
      // amplitude scale from one full-order solve at the parameter-box midpoint
      if (!problem.monolithic)
        throw ConfigError("aip strategy needs an interval override for this benchmark");
      std::vector<double> mid(static_cast<size_t>(problem.n_query), 0.0);
      for (size_t i = 0; i < problem.instances.size(); ++i) {
        const auto& inst = problem.instances[i];
        const auto& dims = problem.domains[static_cast<size_t>(inst.domain)].grid->dims;
        for (size_t k = 0; k < inst.mu_slots.size(); ++k)
          mid[static_cast<size_t>(inst.mu_slots[k])] = 0.5 * (dims[k].lo + dims[k].hi);
      }
      MonolithicProblem mono = problem.monolithic(mid);
      Vector lc(mono.dofs.n_constrained());
      for (int i = 0; i < mono.dofs.n_constrained(); ++i)
        lc[i] = mono.lift[mono.dofs.constrained_nodes[static_cast<size_t>(i)]];
      SparseFactorization lu(mono.ff);
      const Vector u_free = lu.solve(mono.load_free - mono.fc * lc);
      const double scale = std::max(u_free.lpNorm<Eigen::Infinity>(),
                                    mono.lift.lpNorm<Eigen::Infinity>());
      interval = {-options.aip_scale * scale, options.aip_scale * scale};
    }
  }

  for (size_t d = 0; d < problem.domains.size(); ++d) {
    const BuildDomain& dom = problem.domains[d];
    LocalSurrogate local;
    local.domain = static_cast<int>(d);
    local.strategy = options.strategy == "aip" ? "clustered" : "reduced_dim";

    GreedyOptions greedy = options.greedy;
    greedy.seed = mix_seed(options.greedy.seed, static_cast<int>(d), 0);
    local.data_part = build_data_surrogate(dom, greedy, options.comp_tol, local.data_report);

    if (options.strategy == "aip") {
      local.aip_interval = interval;
      local.interface_parts = build_clustered_surrogates(
          dom, options.n_aip, options.aip_points, interval, greedy, options.comp_tol,
          local.clusters, local.part_reports, options.jobs);
    } else {
      local.interface_parts =
          build_unitary_surrogates(dom, greedy, options.comp_tol, local.part_reports, options.jobs);
    }
    lib.locals.push_back(std::move(local));
  }

  lib.t_offline_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return lib;
}

// ---------------------------------------------------------------------------
// Persistence
// ---------------------------------------------------------------------------

namespace {

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw SchemaError("cannot read '" + path + "'");
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

std::string tensor_bytes(const SeparatedTensor& t) {
  std::string out;
  auto put_u64 = [&out](std::uint64_t v) {
    out.append(reinterpret_cast<const char*>(&v), sizeof(v));
  };
  auto put_vec = [&out](const Vector& v) {
    out.append(reinterpret_cast<const char*>(v.data()),
               static_cast<size_t>(v.size()) * sizeof(double));
  };
  put_u64(static_cast<std::uint64_t>(t.rank()));
  put_u64(static_cast<std::uint64_t>(t.spatial_dim));
  for (const auto& d : t.grid->dims) put_u64(static_cast<std::uint64_t>(d.n));
  for (const Mode& m : t.terms) {
    put_vec(m.spatial);
    for (const Vector& f : m.factors) put_vec(f);
  }
  return out;
}

json grid_to_json(const GridPtr& grid) {
  json dims = json::array();
  for (const auto& d : grid->dims)
    dims.push_back({{"name", d.name}, {"lo", d.lo}, {"hi", d.hi}, {"n", d.n}});
  return dims;
}

GridPtr grid_from_json(const json& dims) {
  auto grid = std::make_shared<ParametricGrid>();
  for (const auto& d : dims)
    grid->dims.push_back({d.at("name").get<std::string>(), d.at("lo").get<double>(),
                          d.at("hi").get<double>(), d.at("n").get<int>()});
  return grid;
}

json report_to_json(const EnrichmentReport& r) {
  return {{"modes_before", r.modes_before_compression}, {"modes_after", r.modes_after},
          {"amplitudes", r.amplitudes},                 {"termination", r.termination},
          {"seed", r.seed},                             {"sweeps", r.total_sweeps}};
}

EnrichmentReport report_from_json(const json& j) {
  EnrichmentReport r;
  r.modes_before_compression = j.at("modes_before").get<int>();
  r.modes_after = j.at("modes_after").get<int>();
  r.amplitudes = j.at("amplitudes").get<std::vector<double>>();
  r.termination = j.at("termination").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.total_sweeps = j.at("sweeps").get<int>();
  return r;
}

}  // namespace

void save_tensor(const SeparatedTensor& t, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot write '" + path + "'");
  const std::string bytes = tensor_bytes(t);
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

SeparatedTensor load_tensor(const std::string& path, const GridPtr& grid) {
  const std::string bytes = read_file(path);
  size_t off = 0;
  auto get_u64 = [&]() {
    if (off + 8 > bytes.size()) throw SchemaError("corrupt-library: truncated tensor file");
    std::uint64_t v;
    std::memcpy(&v, bytes.data() + off, 8);
    off += 8;
    return v;
  };
  const auto rank = get_u64();
  const auto spatial_dim = get_u64();
  std::vector<std::uint64_t> sizes;
  for (int k = 0; k < grid->ndims(); ++k) sizes.push_back(get_u64());
  for (int k = 0; k < grid->ndims(); ++k)
    if (sizes[static_cast<size_t>(k)] != static_cast<std::uint64_t>(grid->dims[k].n))
      throw SchemaError("corrupt-library: grid size mismatch in tensor header");

  SeparatedTensor t = SeparatedTensor::zero(static_cast<int>(spatial_dim), grid);
  auto get_vec = [&](int n) {
    Vector v(n);
    if (off + static_cast<size_t>(n) * 8 > bytes.size())
      throw SchemaError("corrupt-library: truncated tensor payload");
    std::memcpy(v.data(), bytes.data() + off, static_cast<size_t>(n) * 8);
    off += static_cast<size_t>(n) * 8;
    return v;
  };
  for (std::uint64_t m = 0; m < rank; ++m) {
    Mode mode;
    mode.spatial = get_vec(static_cast<int>(spatial_dim));
    for (int k = 0; k < grid->ndims(); ++k) mode.factors.push_back(get_vec(grid->dims[k].n));
    t.terms.push_back(std::move(mode));
  }
  if (off != bytes.size()) throw SchemaError("corrupt-library: trailing bytes in tensor file");
  return t;
}

void save_library(const SurrogateLibrary& lib, const std::string& dir) {
  fs::create_directories(dir);
  json manifest;
  manifest["schema_version"] = 1;
  manifest["benchmark"] = lib.benchmark;
  manifest["strategy"] = lib.strategy;
  manifest["seed"] = lib.seed;
  manifest["tolerances"] = {{"enrich", lib.enrich_tol}, {"compress", lib.comp_tol}};
  manifest["t_offline_seconds"] = lib.t_offline_seconds;

  json locals = json::array();
  for (size_t i = 0; i < lib.locals.size(); ++i) {
    const LocalSurrogate& ls = lib.locals[i];
    json entry;
    entry["domain"] = ls.domain;
    entry["strategy"] = ls.strategy;
    entry["clusters"] = ls.clusters;
    entry["aip_interval"] = {ls.aip_interval.first, ls.aip_interval.second};

    char name[64];
    std::snprintf(name, sizeof(name), "domain%02zu_data.bin", i);
    save_tensor(ls.data_part, dir + "/" + name);
    entry["data"] = {{"file", name},
                     {"rank", ls.data_part.rank()},
                     {"grid", grid_to_json(ls.data_part.grid)},
                     {"checksum", fnv1a(read_file(dir + "/" + name))},
                     {"report", report_to_json(ls.data_report)}};

    json parts = json::array();
    for (size_t j = 0; j < ls.interface_parts.size(); ++j) {
      std::snprintf(name, sizeof(name), "domain%02zu_part%04zu.bin", i, j);
      save_tensor(ls.interface_parts[j], dir + "/" + name);
      parts.push_back({{"file", name},
                       {"rank", ls.interface_parts[j].rank()},
                       {"grid", grid_to_json(ls.interface_parts[j].grid)},
                       {"checksum", fnv1a(read_file(dir + "/" + name))},
                       {"report", report_to_json(ls.part_reports[j])}});
    }
    entry["parts"] = std::move(parts);
    locals.push_back(std::move(entry));
  }
  manifest["locals"] = std::move(locals);

  std::ofstream os(dir + "/manifest.json");
  if (!os) throw ConfigError("cannot write manifest in '" + dir + "'");
  os << manifest.dump(2) << "\n";
}

SurrogateLibrary load_library(const std::string& dir) {
  json manifest;
  {
    std::ifstream is(dir + "/manifest.json");
    if (!is) throw SchemaError("no manifest.json in '" + dir + "'");
    is >> manifest;
  }
  if (manifest.at("schema_version").get<int>() != 1)
    throw SchemaError("unsupported library schema version");

  SurrogateLibrary lib;
  lib.benchmark = manifest.at("benchmark").get<std::string>();
  lib.strategy = manifest.at("strategy").get<std::string>();
  lib.seed = manifest.at("seed").get<std::uint64_t>();
  lib.enrich_tol = manifest.at("tolerances").at("enrich").get<double>();
  lib.comp_tol = manifest.at("tolerances").at("compress").get<double>();
  lib.t_offline_seconds = manifest.at("t_offline_seconds").get<double>();

  auto load_entry = [&](const json& e) {
    const std::string file = dir + "/" + e.at("file").get<std::string>();
    if (fnv1a(read_file(file)) != e.at("checksum").get<std::uint64_t>())
      throw SchemaError("corrupt-library: checksum mismatch for " + file);
    SeparatedTensor t = load_tensor(file, grid_from_json(e.at("grid")));
    if (t.rank() != e.at("rank").get<int>())
      throw SchemaError("corrupt-library: manifest rank disagrees with stored tensor");
    return t;
  };

  for (const auto& entry : manifest.at("locals")) {
    LocalSurrogate ls;
    ls.domain = entry.at("domain").get<int>();
    ls.strategy = entry.at("strategy").get<std::string>();
    ls.clusters = entry.at("clusters").get<std::vector<std::vector<int>>>();
    const auto iv = entry.at("aip_interval");
    ls.aip_interval = {iv[0].get<double>(), iv[1].get<double>()};
    ls.data_part = load_entry(entry.at("data"));
    ls.data_report = report_from_json(entry.at("data").at("report"));
    for (const auto& pj : entry.at("parts")) {
      ls.interface_parts.push_back(load_entry(pj));
      ls.part_reports.push_back(report_from_json(pj.at("report")));
    }
    lib.locals.push_back(std::move(ls));
  }
  return lib;
}

}  // namespace ddrom
