#pragma once

#include "lmor/types.hpp"

#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace lmor {

// ---------------------------------------------------------------------------
// Fine scale: representative coarse grid element (RCE)
// ---------------------------------------------------------------------------

struct Aggregate {
  Vec2 center;    // mm, RCE-local coordinates
  double radius;  // mm
};

/// Geometry of one RCE: a square [0, side_length]^2 with disk-shaped inclusions.
struct RceGeometry {
  double side_length = 1.0;
  std::vector<Aggregate> aggregates;
  int n_verts_per_edge = 7;

  /// Throws std::invalid_argument when an invariant is violated.
  void validate() const;
};

/// Mesh of 6-node quadratic triangles.
///
/// Node order inside an element: three vertices counter-clockwise, then the
/// midside nodes of edges (0,1), (1,2), (2,0). Material labels are 0-based
/// phase indices (0 = matrix, 1 = aggregate).
struct FineMesh {
  std::vector<Vec2> nodes;
  std::vector<std::array<int, 6>> elements;
  std::vector<int> material_label;
  /// Node chains along bottom, right, top, left in canonical orientation
  /// (left to right, bottom to top).
  std::array<std::vector<int>, 4> boundary_edges;
  /// True for element vertices, false for midside nodes.
  std::vector<bool> is_vertex;
  /// Spacing of the structured node lattice (half the element edge length).
  double lattice_step = 0.0;

  int n_nodes() const { return static_cast<int>(nodes.size()); }
  int n_dofs() const { return kDim * n_nodes(); }
  int n_elements() const { return static_cast<int>(elements.size()); }
  const std::vector<int>& boundary(Side s) const { return boundary_edges[static_cast<int>(s)]; }
};

FineMesh build_rce_mesh(const RceGeometry& geom);

/// Boundary DoFs of all four edges, sorted and unique.
std::vector<int> boundary_dofs(const FineMesh& mesh);

/// Interleaved DoFs of a node chain: (n0x, n0y, n1x, n1y, ...).
std::vector<int> chain_dofs(std::span<const int> chain);

// ---------------------------------------------------------------------------
// Coarse scale
// ---------------------------------------------------------------------------

enum class GridShape { rectangle, lpanel };

struct GridLayout {
  GridShape shape = GridShape::rectangle;
  int nx = 1;
  int ny = 1;
};

/// Structured grid of congruent square cells.
///
/// Cells list their vertices as (bottom-left, bottom-right, top-right,
/// top-left) and their edges as (bottom, right, top, left). Edges are
/// oriented left to right (horizontal) and bottom to top (vertical).
struct CoarseGrid {
  GridLayout layout;
  double cell_size = 1.0;
  Vec2 origin = Vec2::Zero();
  std::vector<Vec2> vertices;
  std::vector<std::array<int, 4>> cells;
  std::vector<std::array<int, 2>> cell_ij;
  std::vector<std::array<int, 2>> edges;
  std::vector<std::array<int, 4>> cell_edges;
  std::vector<std::vector<int>> edge_cells;

  int n_cells() const { return static_cast<int>(cells.size()); }
  int n_vertices() const { return static_cast<int>(vertices.size()); }
  int n_edges() const { return static_cast<int>(edges.size()); }
  /// Cell id at lattice position (ix, iy), or -1 outside the (masked) grid.
  int cell_at(int ix, int iy) const;
  bool is_boundary_edge(int e) const { return edge_cells[e].size() == 1; }
  bool is_horizontal(int e) const;
  Vec2 cell_origin(int c) const { return vertices[cells[c][0]]; }

  std::vector<int> cell_lookup;  // (iy * nx + ix) -> cell id or -1
};

CoarseGrid build_coarse_grid(const GridLayout& layout, double cell_size, Vec2 origin = Vec2::Zero());

// ---------------------------------------------------------------------------
// Global boundary conditions, expressed on coarse boundary edges
// ---------------------------------------------------------------------------

enum class BcType { free, dirichlet, neumann };

struct EdgeBc {
  BcType type = BcType::free;
  std::array<bool, 2> fixed{true, true};  // Dirichlet components
};

struct PointConstraint {
  int vertex;     // coarse vertex id
  int component;  // 0 = x, 1 = y
};

using VectorField = std::function<Vec2(const Vec2&)>;

struct GlobalBc {
  std::vector<EdgeBc> edges;  // indexed by coarse edge id
  std::vector<PointConstraint> points;
  VectorField dirichlet;  // g_D; null means zero
  VectorField traction;   // t on Neumann edges; null means zero
  /// When set, every oversampling problem is an interior patch with the
  /// full patch boundary as training boundary.
  bool ignore_in_oversampling = false;

  Vec2 dirichlet_value(const Vec2& x) const { return dirichlet ? dirichlet(x) : Vec2::Zero(); }
  Vec2 traction_value(const Vec2& x) const { return traction ? traction(x) : Vec2::Zero(); }
  const EdgeBc& edge(int e) const { return edges.at(e); }
};

/// All boundary edges traction free.
GlobalBc free_bc(const CoarseGrid& grid);

/// Boundary edges whose midpoint satisfies `pred` receive `bc`.
void assign_edges(GlobalBc& bc, const CoarseGrid& grid, const std::function<bool(const Vec2&)>& pred,
                  const EdgeBc& edge_bc);

// ---------------------------------------------------------------------------
// Patches: RCE copies composed over a set of coarse cells
// ---------------------------------------------------------------------------

struct PatchMesh {
  FineMesh mesh;  // boundary_edges hold the bounding-box sides
  std::vector<int> cells;
  std::vector<int> cell_of_element;
  /// Per patch cell (same order as `cells`): RCE-local DoF -> patch DoF.
  std::vector<std::vector<int>> cell_dofs;
  /// Per coarse edge touched by the patch: node chain in canonical orientation.
  std::map<int, std::vector<int>> edge_nodes;
  /// Coarse edges on the patch boundary.
  std::vector<int> boundary_coarse_edges;
  /// Patch boundary edges not on the global boundary.
  std::vector<int> gamma_mu_edges;
  /// DoFs of all nodes on the training boundary, sorted.
  std::vector<int> gamma_mu_dofs;

  int local_index(int cell) const;
  /// Restricts a patch field to a member cell in RCE DoF layout.
  Vector restrict_to_cell(const Vector& patch_field, int cell) const;
  /// Number of element vertices (not midside nodes) on the training boundary.
  int gamma_mu_vertex_count() const;
};

/// Translates and merges RCE copies. Throws for empty or disconnected cell sets.
PatchMesh compose_patch(const CoarseGrid& grid, std::span<const int> cells, const FineMesh& rce);

// ---------------------------------------------------------------------------
// Oversampling configurations
// ---------------------------------------------------------------------------

enum class EdgeRole { gamma_mu, dirichlet, neumann, free };

struct PatchBoundarySpec {
  int coarse_edge;
  EdgeRole role;
};

/// One oversampling problem, shared by all member cells.
///
/// `grid` is the coarse grid the patch lives on: the global grid, or a
/// synthetic 5x5 grid for configurations that ignore global boundaries.
struct Configuration {
  int id = 0;
  std::string key;
  std::shared_ptr<const CoarseGrid> grid;
  int target_cell = 0;
  std::vector<int> patch_cells;
  std::vector<PatchBoundarySpec> bc_spec;
  std::vector<int> members;  // cells of the global grid
  /// 0 = interior, 1 = touches a traction-free boundary, 2 = touches a
  /// Dirichlet / loaded boundary (layout-specific class).
  int priority = 0;
  /// Per target side: on the global boundary of `grid`.
  std::array<bool, 4> target_on_boundary{};
  bool uses_global_bc = true;
};

/// Groups cells into oversampling classes.
///
/// Cells touching a Dirichlet or loaded boundary (or owning a point
/// constraint) are keyed by their full patch layout; all other cells are
/// keyed only by which target sides are traction free.
std::vector<Configuration> classify_configurations(const CoarseGrid& grid, const GlobalBc& bc);

/// Patch around `cell`: the cell and its (up to 8) neighbours.
std::vector<int> neighbourhood(const CoarseGrid& grid, int cell);

// ---------------------------------------------------------------------------
// Export
// ---------------------------------------------------------------------------

/// Plain-text dump: node table, element table with labels, boundary chains.
void write_mesh_text(const FineMesh& mesh, const std::string& path);

}  // namespace lmor
