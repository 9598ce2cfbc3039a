// SPDX-License-Identifier: Apache-2.0

#ifndef DDROM_MESH_HPP
#define DDROM_MESH_HPP

#include <array>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "ddrom/core.hpp"

namespace ddrom {

enum class TagKind { DirichletExternal, NeumannHomogeneous, NeumannInflow, Interface };

struct BoundaryTag {
  TagKind kind = TagKind::NeumannHomogeneous;
  std::string name;  // interface name for TagKind::Interface
};

// Structured quadrilateral mesh. Elements are counter-clockwise node quads.
struct QuadMesh {
  std::vector<Eigen::Vector2d> nodes;
  std::vector<std::array<int, 4>> elements;
  std::map<int, BoundaryTag> boundary_tags;
  // Node-coordinate arrays of the generating tensor product, when applicable.
  std::vector<double> x_coords;
  std::vector<double> y_coords;

  int num_nodes() const { return static_cast<int>(nodes.size()); }
  int num_elements() const { return static_cast<int>(elements.size()); }

  // Checks element node distinctness, index ranges and corner Jacobians.
  void validate() const;
};

// Assigns a tag to a boundary node, or nothing (plain free boundary node).
using TagRule = std::function<std::optional<BoundaryTag>(double x, double y)>;

QuadMesh build_rect_mesh(const std::vector<double>& x_coords,
                         const std::vector<double>& y_coords,
                         const TagRule& tag_rule = nullptr);

// a, a+h, ..., b; throws GeometryError when h does not divide b-a.
std::vector<double> uniform_spacing(double a, double b, double h);

// Central square [0,1]^2 with four wings of the given depth spanning the full
// unit side. The wing-normal direction carries the refined spacing.
struct CrossSpec {
  double wing_depth = 0.2625;
  double center_h = 5e-2;
  double wing_h = 1.25e-2;
};

QuadMesh build_cross_mesh(const CrossSpec& spec, const TagRule& tag_rule = nullptr);

// Conforming union of meshes whose nodes coincide where they overlap.
QuadMesh merge_meshes(const std::vector<const QuadMesh*>& parts, const TagRule& tag_rule = nullptr,
                      double tol = 1e-9);

// Nodes of element edges that belong to exactly one element, i.e. the mesh boundary.
std::vector<int> boundary_nodes(const QuadMesh& mesh);
// Boundary edges as node pairs.
std::vector<std::array<int, 2>> boundary_edges(const QuadMesh& mesh);

// Hash lookup of nodes by coordinates (quantized key with neighborhood probe).
class CoordIndex {
public:
  explicit CoordIndex(const QuadMesh& mesh, double tol = 1e-9);
  // Node index at the given point, or -1.
  int find(double x, double y) const;

private:
  const QuadMesh& mesh_;
  double tol_;
  std::unordered_multimap<long long, int> buckets_;
};

struct Segment {
  Eigen::Vector2d a;
  Eigen::Vector2d b;
};

enum class EndpointRule {
  Auto,     // endpoints kept iff not Dirichlet-tagged
  Include,  // endpoints always kept
  Exclude   // endpoints always dropped
};

// Ordered interface degrees of freedom on an axis-aligned mesh line.
struct InterfaceDofSet {
  std::string name;
  std::vector<int> dof_indices;  // mesh node indices, ordered by arclength
  bool includes_endpoints = false;

  int size() const { return static_cast<int>(dof_indices.size()); }
};

InterfaceDofSet extract_interface(const QuadMesh& mesh, const Segment& segment,
                                  EndpointRule rule = EndpointRule::Auto,
                                  const std::string& name = "");

// Free/constrained split of the mesh nodes. Constrained nodes are the external
// Dirichlet nodes followed by the interface DOF sets in declared order.
struct DofPartition {
  std::vector<int> free_nodes;         // free dof -> node
  std::vector<int> constrained_nodes;  // constrained dof -> node
  std::vector<int> node_to_free;       // node -> free dof, -1 if constrained
  std::vector<int> node_to_constrained;
  std::vector<int> interface_offsets;  // start of each interface block in constrained numbering

  int n_free() const { return static_cast<int>(free_nodes.size()); }
  int n_constrained() const { return static_cast<int>(constrained_nodes.size()); }

  static DofPartition build(const QuadMesh& mesh, const std::vector<InterfaceDofSet>& interfaces);

  // Scatter a free-dof vector to all nodes (zeros at constrained nodes).
  Vector scatter(const Vector& free_values) const;
};

// Interface wiring toward the neighbouring subdomain that contains it.
struct NeighborLink {
  int neighbor = -1;                  // neighbor subdomain/instance id; -1 when fixed
  std::vector<int> nodes_in_neighbor; // per interface dof: node index in the neighbor mesh
  bool fixed = false;                 // interface carries a known Dirichlet value instead
  double fixed_value = 0.0;
};

// Per-subdomain bundle of mesh, own interfaces and index machinery.
struct SubdomainTopology {
  int id = 0;
  QuadMesh mesh;
  std::vector<InterfaceDofSet> interfaces;
  DofPartition partition;
  std::vector<NeighborLink> links;  // parallel to interfaces; may be filled later

  int total_interface_dofs() const {
    int n = 0;
    for (const auto& s : interfaces) n += s.size();
    return n;
  }
  // Mesh node of interface dof j (j in the stacked per-subdomain numbering).
  int interface_node(int j) const;

  static SubdomainTopology build(int id, QuadMesh mesh, std::vector<InterfaceDofSet> ifaces);
};

// Values of a nodal field at the nodes listed in `nodes`.
Vector restrict_to_nodes(const Vector& field, const std::vector<int>& nodes);

// Nodal extension of interface coefficients: value at the interface nodes of
// one interface, zero everywhere else (Lagrange basis extension).
Vector extend_interface(const SubdomainTopology& topo, const std::string& interface_name,
                        const Vector& coeffs);
// Extension of stacked coefficients over all own interfaces.
Vector extend_all_interfaces(const SubdomainTopology& topo, const Vector& stacked);

// Geometric placements: identity, quarter-turn rigid motions, and the
// piecewise-affine channel stretch with break at x_hat = hbar.
struct GeometryMap {
  enum class Kind { Identity, Rigid, GraetzStretch };
  Kind kind = Kind::Identity;
  // Rigid: rotation by quarter_turns * pi/2 about `center`, then translation.
  int quarter_turns = 0;
  Eigen::Vector2d center{0.5, 0.5};
  Eigen::Vector2d translation{0.0, 0.0};
  // GraetzStretch: x <- piecewise map driven by mu[mu_index], y unchanged.
  double hbar = 5e-2;
  int mu_index = 1;

  static GeometryMap identity();
  static GeometryMap rigid(double angle, const Eigen::Vector2d& center,
                           const Eigen::Vector2d& translation);
  static GeometryMap graetz(double hbar, int mu_index);

  Eigen::Vector2d apply_point(const Eigen::Vector2d& p, const std::vector<double>& mu) const;
};

QuadMesh apply_geometry_map(const GeometryMap& map, const QuadMesh& mesh,
                            const std::vector<double>& mu);

// Plain-text nodes/elements debug dump: "id x y" then "id n0 n1 n2 n3".
void write_mesh_text(const QuadMesh& mesh, const std::string& path);

}  // namespace ddrom

#endif
