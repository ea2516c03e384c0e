#pragma once

#include "lmor/fem.hpp"
#include "lmor/mesh.hpp"
#include "lmor/parallel.hpp"

#include <array>
#include <string>

namespace lmor {

enum class BasisKind { empirical, hierarchical, spectral };

std::string to_string(BasisKind kind);
BasisKind basis_kind_from_string(const std::string& name);

/// Fine-scale edge modes of one subdomain. modes[s] holds one mode per
/// column over the trace DoFs of side s (interleaved x/y, canonical
/// orientation, endpoints included).
struct EdgeModeSet {
  std::array<Matrix, 4> modes;

  int count(Side s) const { return static_cast<int>(modes[static_cast<int>(s)].cols()); }
  const Matrix& operator[](Side s) const { return modes[static_cast<int>(s)]; }
  Matrix& operator[](Side s) { return modes[static_cast<int>(s)]; }
  /// First n modes of every side (fewer where a side has fewer).
  EdgeModeSet truncated(int n) const;
};

/// RCE stiffness with the interior block factorized once, for harmonic
/// extension of boundary data.
class RceOperator {
 public:
  RceOperator(FineMesh mesh, const Material& material, Exec exec = Exec::parallel);

  const FineMesh& mesh() const { return mesh_; }
  const SparseMatrix& stiffness() const { return stiffness_; }
  /// Sorted DoFs on the RCE boundary.
  const std::vector<int>& boundary() const { return solver_.constrained(); }
  double side_length() const { return side_; }
  /// Reference coordinate in [-1, 1] of every node of a boundary chain.
  std::vector<double> edge_coordinates(Side s) const;

  /// Discrete a-harmonic field with the given values on boundary().
  Vector extend(const Vector& boundary_values) const;
  Matrix extend(const Matrix& boundary_values, Exec exec = Exec::parallel) const;

 private:
  FineMesh mesh_;
  SparseMatrix stiffness_;
  ConstrainedSolver solver_;
  double side_;
};

/// Harmonic extensions of the bilinear vertex shapes. Column order:
/// (bl_x, bl_y, br_x, br_y, tr_x, tr_y, tl_x, tl_y).
Matrix extend_coarse(const RceOperator& op, Exec exec = Exec::parallel);

/// Harmonic extension of an edge mode with zero trace on the other three
/// sides. Throws std::invalid_argument unless the mode vanishes at both ends.
Vector extend_edge_mode(const RceOperator& op, Side side, const Vector& mode);
Matrix extend_edge_modes(const RceOperator& op, Side side, const Matrix& modes, Exec exec = Exec::parallel);

/// Integrated Legendre modes sampled at the trace nodes, interleaved
/// (x h_2, y h_2, x h_3, ...). Not orthonormalized.
EdgeModeSet hierarchical_edge_basis(int n_mpe, const RceOperator& op);

/// Reduced basis of one subdomain: 8 coarse columns, then the extended edge
/// modes of bottom, right, top, left.
struct BasisMatrix {
  Matrix b;
  BasisKind kind = BasisKind::empirical;
  std::array<int, 4> n_modes{};

  int n_columns() const { return static_cast<int>(b.cols()); }
  /// First column of the modes of side s.
  int column_offset(Side s) const;
};

/// Concatenates the blocks and checks full column rank.
BasisMatrix build_basis_matrix(const Matrix& coarse, const std::array<Matrix, 4>& fine, BasisKind kind);

/// Extends `modes` and assembles the basis of one subdomain.
BasisMatrix build_cell_basis(const RceOperator& op, const Matrix& coarse, const EdgeModeSet& modes, BasisKind kind,
                             Exec exec = Exec::parallel);

// ---------------------------------------------------------------------------
// Scale split on the RCE layout
// ---------------------------------------------------------------------------

/// Corner node ids (bl, br, tr, tl).
std::array<int, 4> corner_nodes(const FineMesh& mesh);

/// Bilinear interpolant of the corner values of u.
Vector coarse_part(const FineMesh& mesh, const Vector& u);
Vector fine_part(const FineMesh& mesh, const Vector& u);

/// Trace of u on one side, interleaved over the chain nodes.
Vector edge_trace(const FineMesh& mesh, Side side, const Vector& u);
std::array<Vector, 4> restrict_to_edges(const FineMesh& mesh, const Vector& u);

}  // namespace lmor
