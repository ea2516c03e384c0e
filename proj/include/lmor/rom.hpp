#pragma once

#include "lmor/basis.hpp"
#include "lmor/fem.hpp"
#include "lmor/mesh.hpp"
#include "lmor/parallel.hpp"

#include <span>
#include <utility>
#include <vector>

namespace lmor {

// ---------------------------------------------------------------------------
// Global DoF layout
// ---------------------------------------------------------------------------

/// Vertex DoFs first (2 per vertex, interleaved), then the edge DoFs in edge
/// order. A cell lists its DoFs in BasisMatrix column order.
struct DofMap {
  int n_vertices = 0;
  std::vector<int> edge_count;   // modes per coarse edge
  std::vector<int> edge_offset;  // first global DoF of each edge
  std::vector<std::vector<int>> cell_dofs;
  int n_dofs = 0;

  int vertex_dof(int v, int comp) const { return dof_of(v, comp); }
  int edge_dof(int e, int k) const { return edge_offset[e] + k; }
};

DofMap build_dof_map(const CoarseGrid& grid, int n_mpe);
DofMap build_dof_map(const CoarseGrid& grid, std::span<const int> modes_per_edge);

// ---------------------------------------------------------------------------
// Edge modes per coarse edge
// ---------------------------------------------------------------------------

/// Trace modes of every coarse edge, in canonical orientation. `source`
/// identifies where a set came from; edges with equal source hold equal modes.
struct GlobalEdgeModes {
  std::vector<Matrix> modes;
  std::vector<int> source;

  std::vector<int> counts() const;
  GlobalEdgeModes truncated(int n_mpe) const;
};

/// Each edge takes the modes of the adjacent cell whose configuration has
/// the higher priority; ties go to the lower cell id. `cell_modes[c]` are the
/// modes computed for the configuration of cell c, `cell_config[c]` its index.
GlobalEdgeModes assign_edge_modes(const CoarseGrid& grid, std::span<const int> cell_config,
                                  std::span<const int> config_priority, std::span<const EdgeModeSet> config_modes);

/// The same set on every edge (hierarchical basis).
GlobalEdgeModes uniform_edge_modes(const CoarseGrid& grid, const EdgeModeSet& modes);

/// Basis matrices of all cells. Cells whose four edges share sources reuse
/// one extension.
std::vector<BasisMatrix> build_cell_bases(const RceOperator& op, const CoarseGrid& grid, const GlobalEdgeModes& modes,
                                          BasisKind kind, Exec exec = Exec::parallel);

// ---------------------------------------------------------------------------
// Reduction and global system
// ---------------------------------------------------------------------------

struct ReducedLocal {
  Matrix a;
  Vector f;
  int cell = 0;
  BasisKind kind = BasisKind::empirical;
};

ReducedLocal reduce_local(const SparseMatrix& a_loc, const Vector& f_loc, const BasisMatrix& b, int cell);

/// Consistent load of cell c from the global traction on its Neumann edges.
Vector cell_load(const FineMesh& rce, const CoarseGrid& grid, const GlobalBc& bc, int cell);

struct ReducedSystem {
  SparseMatrix a;
  Vector f;
};

ReducedSystem assemble_global(std::span<const ReducedLocal> locals, const DofMap& dofs);

/// Prescribed ROM DoFs from the Dirichlet data. Vertex DoFs take g_D at the
/// vertex. On a Dirichlet edge, a mode is constrained when it has a nonzero
/// fixed component; the constrained coefficients are the L2 projection of
/// the fixed components of (g_D - linear interpolant) onto those modes.
std::vector<std::pair<int, double>> project_dirichlet(const FineMesh& rce, const CoarseGrid& grid, const GlobalBc& bc,
                                                      const DofMap& dofs, const GlobalEdgeModes& modes);

Vector solve_rom(const ReducedSystem& system, std::span<const std::pair<int, double>> constraints);

/// Fine field of one cell in RCE layout.
Vector reconstruct(const Vector& u_n, const DofMap& dofs, const BasisMatrix& b, int cell);

// ---------------------------------------------------------------------------
// Full-order reference on the composed global mesh
// ---------------------------------------------------------------------------

struct FomSolution {
  PatchMesh mesh;
  Vector u;

  Vector cell_field(int cell) const { return mesh.restrict_to_cell(u, cell); }
};

FomSolution solve_fom(const CoarseGrid& grid, const FineMesh& rce, const Material& material, const GlobalBc& bc,
                      Exec exec = Exec::parallel);

/// Solution of a full ROM pipeline on one basis.
struct RomSolution {
  DofMap dofs;
  ReducedSystem system;
  std::vector<std::pair<int, double>> constraints;
  Vector u;
  std::vector<Vector> cell_fields;
};

RomSolution solve_reduced(const RceOperator& op, const CoarseGrid& grid, const GlobalBc& bc,
                          const GlobalEdgeModes& modes, std::span<const BasisMatrix> bases, Exec exec = Exec::parallel);

}  // namespace lmor
