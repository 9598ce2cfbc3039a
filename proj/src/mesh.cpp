// SPDX-License-Identifier: Apache-2.0

#include "ddrom/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

namespace ddrom {

void QuadMesh::validate() const {
  const int n = num_nodes();
  for (int e = 0; e < num_elements(); ++e) {
    const auto& el = elements[e];
    for (int k = 0; k < 4; ++k) {
      if (el[k] < 0 || el[k] >= n)
        throw GeometryError("element " + std::to_string(e) + " references missing node");
      for (int l = k + 1; l < 4; ++l)
        if (el[k] == el[l]) throw GeometryError("element " + std::to_string(e) + " has repeated nodes");
    }
    // corner Jacobians of the bilinear map must be positive
    for (int k = 0; k < 4; ++k) {
      const Eigen::Vector2d& p = nodes[el[k]];
      const Eigen::Vector2d& q = nodes[el[(k + 1) % 4]];
      const Eigen::Vector2d& r = nodes[el[(k + 3) % 4]];
      const double det = (q.x() - p.x()) * (r.y() - p.y()) - (q.y() - p.y()) * (r.x() - p.x());
      if (det <= 0.0)
        throw GeometryError("element " + std::to_string(e) + " has non-positive corner Jacobian");
    }
  }
}

namespace {

void check_strictly_increasing(const std::vector<double>& c, const char* axis) {
  if (c.size() < 2)
    throw GeometryError(std::string("coordinate array '") + axis + "' needs at least 2 entries");
  for (size_t i = 1; i < c.size(); ++i)
    if (!(c[i] > c[i - 1]))
      throw GeometryError(std::string("coordinate array '") + axis + "' not strictly increasing");
}

void apply_tags(QuadMesh& mesh, const TagRule& rule) {
  if (!rule) return;
  for (int n : boundary_nodes(mesh)) {
    auto tag = rule(mesh.nodes[n].x(), mesh.nodes[n].y());
    if (tag) mesh.boundary_tags[n] = *tag;
  }
}

}  // namespace

QuadMesh build_rect_mesh(const std::vector<double>& x_coords, const std::vector<double>& y_coords,
                         const TagRule& tag_rule) {
  check_strictly_increasing(x_coords, "x");
  check_strictly_increasing(y_coords, "y");
  const int nx = static_cast<int>(x_coords.size());
  const int ny = static_cast<int>(y_coords.size());

  QuadMesh mesh;
  mesh.x_coords = x_coords;
  mesh.y_coords = y_coords;
  mesh.nodes.reserve(static_cast<size_t>(nx) * ny);
  for (int iy = 0; iy < ny; ++iy)
    for (int ix = 0; ix < nx; ++ix) mesh.nodes.emplace_back(x_coords[ix], y_coords[iy]);

  mesh.elements.reserve(static_cast<size_t>(nx - 1) * (ny - 1));
  auto id = [nx](int ix, int iy) { return iy * nx + ix; };
  for (int iy = 0; iy + 1 < ny; ++iy)
    for (int ix = 0; ix + 1 < nx; ++ix)
      mesh.elements.push_back({id(ix, iy), id(ix + 1, iy), id(ix + 1, iy + 1), id(ix, iy + 1)});

  apply_tags(mesh, tag_rule);
  mesh.validate();
  return mesh;
}

std::vector<double> uniform_spacing(double a, double b, double h) {
  const double len = b - a;
  const double steps = len / h;
  const long long n = std::llround(steps);
  if (n < 1 || std::abs(steps - static_cast<double>(n)) > 1e-9)
    throw GeometryError("mesh size does not divide segment length");
  std::vector<double> c(static_cast<size_t>(n) + 1);
  for (long long i = 0; i <= n; ++i) c[static_cast<size_t>(i)] = a + len * (static_cast<double>(i) / static_cast<double>(n));
  return c;
}

QuadMesh build_cross_mesh(const CrossSpec& spec, const TagRule& tag_rule) {
  if (spec.wing_depth < 0.0) throw GeometryError("negative wing depth");
  auto cx = uniform_spacing(0.0, 1.0, spec.center_h);
  auto cy = uniform_spacing(0.0, 1.0, spec.center_h);
  QuadMesh center = build_rect_mesh(cx, cy);
  if (spec.wing_depth == 0.0) {
    apply_tags(center, tag_rule);
    center.validate();
    return center;
  }

  const double d = spec.wing_depth;
  auto wx = uniform_spacing(0.0, d, spec.wing_h);  // refined wing-normal spacing
  std::vector<double> left_x(wx.size()), right_x(wx.size());
  for (size_t i = 0; i < wx.size(); ++i) {
    left_x[i] = -d + wx[i];
    right_x[i] = 1.0 + wx[i];
  }
  std::vector<double> bottom_y = left_x, top_y = right_x;

  QuadMesh left = build_rect_mesh(left_x, cy);
  QuadMesh right = build_rect_mesh(right_x, cy);
  QuadMesh bottom = build_rect_mesh(cx, bottom_y);
  QuadMesh top = build_rect_mesh(cx, top_y);

  QuadMesh merged = merge_meshes({&center, &left, &right, &bottom, &top}, tag_rule);
  merged.validate();
  return merged;
}

QuadMesh merge_meshes(const std::vector<const QuadMesh*>& parts, const TagRule& tag_rule,
                      double tol) {
  QuadMesh out;
  const double q = 1.0 / tol;
  auto key = [q](double x, double y) {
    return (static_cast<long long>(std::llround(x * q)) << 21) ^
           static_cast<long long>(std::llround(y * q) & ((1ll << 21) - 1));
  };
  std::unordered_multimap<long long, int> index;
  auto find_or_add = [&](const Eigen::Vector2d& p) {
    for (int dx = -1; dx <= 1; ++dx)
      for (int dy = -1; dy <= 1; ++dy) {
        auto range = index.equal_range(key(p.x() + dx * tol, p.y() + dy * tol));
        for (auto it = range.first; it != range.second; ++it)
          if ((out.nodes[it->second] - p).lpNorm<Eigen::Infinity>() <= tol) return it->second;
      }
    out.nodes.push_back(p);
    const int id = static_cast<int>(out.nodes.size()) - 1;
    index.emplace(key(p.x(), p.y()), id);
    return id;
  };

  std::set<std::array<int, 4>> seen;  // drop duplicate elements in overlaps
  for (const QuadMesh* part : parts) {
    for (const auto& el : part->elements) {
      std::array<int, 4> mapped;
      for (int k = 0; k < 4; ++k) mapped[k] = find_or_add(part->nodes[el[k]]);
      std::array<int, 4> sorted = mapped;
      std::sort(sorted.begin(), sorted.end());
      if (seen.insert(sorted).second) out.elements.push_back(mapped);
    }
  }
  apply_tags(out, tag_rule);
  return out;
}

std::vector<std::array<int, 2>> boundary_edges(const QuadMesh& mesh) {
  std::map<std::pair<int, int>, int> count;
  auto norm = [](int a, int b) { return a < b ? std::make_pair(a, b) : std::make_pair(b, a); };
  for (const auto& el : mesh.elements)
    for (int k = 0; k < 4; ++k) count[norm(el[k], el[(k + 1) % 4])]++;
  std::vector<std::array<int, 2>> edges;
  for (const auto& [e, c] : count)
    if (c == 1) edges.push_back({e.first, e.second});
  return edges;
}

std::vector<int> boundary_nodes(const QuadMesh& mesh) {
  std::set<int> set;
  for (const auto& e : boundary_edges(mesh)) {
    set.insert(e[0]);
    set.insert(e[1]);
  }
  return {set.begin(), set.end()};
}

CoordIndex::CoordIndex(const QuadMesh& mesh, double tol) : mesh_(mesh), tol_(tol) {
  const double q = 1.0 / tol_;
  for (int i = 0; i < mesh.num_nodes(); ++i) {
    const long long k = (static_cast<long long>(std::llround(mesh.nodes[i].x() * q)) << 21) ^
                        static_cast<long long>(std::llround(mesh.nodes[i].y() * q) & ((1ll << 21) - 1));
    buckets_.emplace(k, i);
  }
}

int CoordIndex::find(double x, double y) const {
  const double q = 1.0 / tol_;
  int best = -1;
  double best_d = tol_;
  for (int dx = -1; dx <= 1; ++dx)
    for (int dy = -1; dy <= 1; ++dy) {
      const long long k =
          (static_cast<long long>(std::llround((x + dx * tol_) * q)) << 21) ^
          static_cast<long long>(std::llround((y + dy * tol_) * q) & ((1ll << 21) - 1));
      auto range = buckets_.equal_range(k);
      for (auto it = range.first; it != range.second; ++it) {
        const double d = (mesh_.nodes[it->second] - Eigen::Vector2d(x, y)).lpNorm<Eigen::Infinity>();
        if (d <= best_d) {
          best = it->second;
          best_d = d;
        }
      }
    }
  return best;
}

InterfaceDofSet extract_interface(const QuadMesh& mesh, const Segment& segment, EndpointRule rule,
                                  const std::string& name) {
  const Eigen::Vector2d dir = segment.b - segment.a;
  const double len = dir.norm();
  if (len <= 0.0) throw GeometryError("degenerate interface segment");
  if (std::abs(dir.x()) > 1e-12 && std::abs(dir.y()) > 1e-12)
    throw GeometryError("interface segment must be axis-aligned");

  const double geom_tol = 1e-12 * std::max(1.0, len);
  std::vector<std::pair<double, int>> hits;  // (arclength parameter, node)
  for (int i = 0; i < mesh.num_nodes(); ++i) {
    const Eigen::Vector2d r = mesh.nodes[i] - segment.a;
    const double t = r.dot(dir) / (len * len);
    if (t < -geom_tol || t > 1.0 + geom_tol) continue;
    const double off = std::abs(r.x() * dir.y() - r.y() * dir.x()) / len;
    if (off <= geom_tol) hits.emplace_back(t, i);
  }
  if (hits.empty()) throw GeometryError("interface segment does not coincide with a mesh line");
  std::sort(hits.begin(), hits.end());

  InterfaceDofSet set;
  set.name = name;
  for (const auto& [t, node] : hits) {
    const bool endpoint = t <= geom_tol || t >= 1.0 - geom_tol;
    if (endpoint) {
      if (rule == EndpointRule::Exclude) continue;
      if (rule == EndpointRule::Auto) {
        auto it = mesh.boundary_tags.find(node);
        if (it != mesh.boundary_tags.end() && it->second.kind == TagKind::DirichletExternal)
          continue;
      }
      set.includes_endpoints = true;
    }
    set.dof_indices.push_back(node);
  }
  return set;
}

DofPartition DofPartition::build(const QuadMesh& mesh,
                                 const std::vector<InterfaceDofSet>& interfaces) {
  const int n = mesh.num_nodes();
  DofPartition p;
  p.node_to_free.assign(n, -1);
  p.node_to_constrained.assign(n, -1);

  std::vector<char> constrained(n, 0);
  for (const auto& [node, tag] : mesh.boundary_tags)
    if (tag.kind == TagKind::DirichletExternal) constrained[node] = 1;
  for (const auto& s : interfaces)
    for (int node : s.dof_indices) {
      if (constrained[node]) throw TopologyError("interface dof is also Dirichlet-constrained");
      constrained[node] = 2;
    }

  for (int i = 0; i < n; ++i)
    if (constrained[i] == 1) {
      p.node_to_constrained[i] = static_cast<int>(p.constrained_nodes.size());
      p.constrained_nodes.push_back(i);
    }
  for (const auto& s : interfaces) {
    p.interface_offsets.push_back(static_cast<int>(p.constrained_nodes.size()));
    for (int node : s.dof_indices) {
      p.node_to_constrained[node] = static_cast<int>(p.constrained_nodes.size());
      p.constrained_nodes.push_back(node);
    }
  }
  for (int i = 0; i < n; ++i)
    if (!constrained[i]) {
      p.node_to_free[i] = static_cast<int>(p.free_nodes.size());
      p.free_nodes.push_back(i);
    }
  return p;
}

Vector DofPartition::scatter(const Vector& free_values) const {
  Vector out = Vector::Zero(node_to_free.size());
  for (size_t i = 0; i < free_nodes.size(); ++i) out[free_nodes[i]] = free_values[static_cast<int>(i)];
  return out;
}

int SubdomainTopology::interface_node(int j) const {
  for (const auto& s : interfaces) {
    if (j < s.size()) return s.dof_indices[j];
    j -= s.size();
  }
  throw TopologyError("interface dof index out of range");
}

SubdomainTopology SubdomainTopology::build(int id, QuadMesh mesh,
                                           std::vector<InterfaceDofSet> ifaces) {
  SubdomainTopology t;
  t.id = id;
  t.mesh = std::move(mesh);
  t.interfaces = std::move(ifaces);
  t.partition = DofPartition::build(t.mesh, t.interfaces);
  t.links.resize(t.interfaces.size());
  return t;
}

Vector restrict_to_nodes(const Vector& field, const std::vector<int>& nodes) {
  Vector out(static_cast<int>(nodes.size()));
  for (size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i] < 0 || nodes[i] >= field.size())
      throw TopologyError("restriction node index out of range");
    out[static_cast<int>(i)] = field[nodes[i]];
  }
  return out;
}

Vector extend_interface(const SubdomainTopology& topo, const std::string& interface_name,
                        const Vector& coeffs) {
  for (const auto& s : topo.interfaces) {
    if (s.name != interface_name) continue;
    if (coeffs.size() != s.size()) throw ShapeError("extend: coefficient count mismatch");
    Vector out = Vector::Zero(topo.mesh.num_nodes());
    for (int j = 0; j < s.size(); ++j) out[s.dof_indices[j]] = coeffs[j];
    return out;
  }
  throw TopologyError("unknown interface '" + interface_name + "'");
}

Vector extend_all_interfaces(const SubdomainTopology& topo, const Vector& stacked) {
  if (stacked.size() != topo.total_interface_dofs())
    throw ShapeError("extend: stacked coefficient count mismatch");
  Vector out = Vector::Zero(topo.mesh.num_nodes());
  int off = 0;
  for (const auto& s : topo.interfaces) {
    for (int j = 0; j < s.size(); ++j) out[s.dof_indices[j]] = stacked[off + j];
    off += s.size();
  }
  return out;
}

GeometryMap GeometryMap::identity() { return {}; }

GeometryMap GeometryMap::rigid(double angle, const Eigen::Vector2d& center,
                               const Eigen::Vector2d& translation) {
  const double turns = angle / (M_PI / 2.0);
  const long long q = std::llround(turns);
  if (std::abs(turns - static_cast<double>(q)) > 1e-12)
    throw GeometryError("rigid map rotation must be a multiple of pi/2");
  GeometryMap m;
  m.kind = Kind::Rigid;
  m.quarter_turns = static_cast<int>(((q % 4) + 4) % 4);
  m.center = center;
  m.translation = translation;
  return m;
}

GeometryMap GeometryMap::graetz(double hbar, int mu_index) {
  GeometryMap m;
  m.kind = Kind::GraetzStretch;
  m.hbar = hbar;
  m.mu_index = mu_index;
  return m;
}

Eigen::Vector2d GeometryMap::apply_point(const Eigen::Vector2d& p,
                                         const std::vector<double>& mu) const {
  switch (kind) {
    case Kind::Identity:
      return p;
    case Kind::Rigid: {
      const Eigen::Vector2d r = p - center;
      Eigen::Vector2d rot;
      switch (quarter_turns) {  // exact quarter-turn rotations
        case 0: rot = r; break;
        case 1: rot = {-r.y(), r.x()}; break;
        case 2: rot = {-r.x(), -r.y()}; break;
        default: rot = {r.y(), -r.x()}; break;
      }
      return rot + center + translation;
    }
    case Kind::GraetzStretch: {
      if (mu_index < 0 || mu_index >= static_cast<int>(mu.size()))
        throw ParameterError("graetz stretch: missing geometric parameter");
      const double m2 = mu[mu_index];
      const double xh = p.x();
      double x;
      if (xh <= hbar)
        x = 1.0 + xh;
      else
        x = (1.0 - hbar * xh) / (1.0 - hbar) + m2 * (xh - hbar) / (1.0 - hbar);
      return {x, p.y()};
    }
  }
  return p;
}

QuadMesh apply_geometry_map(const GeometryMap& map, const QuadMesh& mesh,
                            const std::vector<double>& mu) {
  QuadMesh out = mesh;
  for (auto& p : out.nodes) p = map.apply_point(p, mu);
  if (map.kind != GeometryMap::Kind::Identity) {
    out.x_coords.clear();
    out.y_coords.clear();
  }
  out.validate();
  return out;
}

void write_mesh_text(const QuadMesh& mesh, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot open '" + path + "' for writing");
  os.precision(17);
  for (int i = 0; i < mesh.num_nodes(); ++i)
    os << i << " " << mesh.nodes[i].x() << " " << mesh.nodes[i].y() << "\n";
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto& el = mesh.elements[e];
    os << e << " " << el[0] << " " << el[1] << " " << el[2] << " " << el[3] << "\n";
  }
}

}  // namespace ddrom
