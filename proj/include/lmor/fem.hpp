#pragma once

#include "lmor/mesh.hpp"
#include "lmor/parallel.hpp"
#include "lmor/types.hpp"

#include <Eigen/SparseCholesky>

#include <memory>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace lmor {

// ---------------------------------------------------------------------------
// Material
// ---------------------------------------------------------------------------

/// Lamé constants of one phase (MPa).
struct Phase {
  double lambda1;  // first Lamé constant
  double lambda2;  // shear modulus
};

enum class PlaneModel { strain, stress };

Phase phase_from_young_poisson(double young, double poisson, PlaneModel model);

struct Material {
  std::vector<Phase> phases;

  /// Throws std::invalid_argument unless every phase is positive definite.
  void validate() const;
  const Phase& phase(int label) const;
  int n_phases() const { return static_cast<int>(phases.size()); }
};

/// Phases in label order: matrix (E_m, nu) then aggregates (E_a, nu).
Material two_phase_material(double e_matrix, double e_aggregate, double poisson, PlaneModel model);

/// Area-weighted average of the Lamé constants over the mesh.
Phase homogenized_phase(const FineMesh& mesh, const Material& material);

// ---------------------------------------------------------------------------
// Element kernels
// ---------------------------------------------------------------------------

using ElementMatrix = Eigen::Matrix<double, 12, 12>;

/// Stiffness of a 6-node triangle, DoFs interleaved (u0x, u0y, u1x, ...).
/// 6-point Gauss rule, exact for polynomial degree 4.
ElementMatrix element_stiffness(const std::array<Vec2, 6>& nodes, const Phase& phase);

/// Element matrices of a whole mesh.
std::vector<ElementMatrix> element_matrices(const FineMesh& mesh, const Material& material,
                                            Exec exec = Exec::parallel);

/// Global stiffness by scatter-add of element matrices (scatter is serial, in
/// element order, so the result does not depend on the thread count).
SparseMatrix assemble(const FineMesh& mesh, const Material& material, Exec exec = Exec::parallel);

/// Consistent load from a traction on a boundary node chain. Each
/// consecutive node triple is a quadratic segment integrated with 3-point Gauss.
Vector assemble_traction(const FineMesh& mesh, std::span<const int> chain, const VectorField& traction);

/// L2 Gramian of boundary traces on the given node chains, restricted to
/// `dofs` (row/column k corresponds to dofs[k]).
SparseMatrix boundary_mass_matrix(const FineMesh& mesh, std::span<const std::vector<int>> chains,
                                  std::span<const int> dofs);

/// 1-D L2 Gramian of a single chain in interleaved trace-DoF layout.
SparseMatrix chain_mass_matrix(const FineMesh& mesh, std::span<const int> chain);

double energy_inner(const Vector& u, const Vector& v, const SparseMatrix& stiffness);
double energy_norm(const Vector& v, const SparseMatrix& stiffness);

// ---------------------------------------------------------------------------
// Linear systems
// ---------------------------------------------------------------------------

struct SparseSystem {
  SparseMatrix matrix;
  Vector rhs;
  std::vector<std::pair<int, double>> constrained_dofs;
};

/// Symmetric elimination: rows and columns of constrained DoFs are zeroed,
/// the diagonal set to one and the right-hand side lifted.
SparseSystem apply_dirichlet(const SparseSystem& system, std::span<const int> dofs, std::span<const double> values);

enum class SolverKind { direct, conjugate_gradient };

/// Cached factorization of a symmetric positive definite matrix.
///
/// The default direct path uses a simplicial LDLT factorization. A failed
/// factorization falls back to preconditioned conjugate gradients; a matrix
/// with non-positive or vanishing pivots is rejected. Concurrent calls to
/// solve() are safe.
class LinearSolver {
 public:
  explicit LinearSolver(const SparseMatrix& matrix, SolverKind kind = SolverKind::direct);
  ~LinearSolver();
  LinearSolver(LinearSolver&&) noexcept;
  LinearSolver& operator=(LinearSolver&&) noexcept;

  Vector solve(const Vector& rhs) const;
  Matrix solve(const Matrix& rhs, Exec exec = Exec::parallel) const;
  int size() const { return static_cast<int>(matrix_.rows()); }
  SolverKind kind() const { return kind_; }

 private:
  struct Impl;
  SparseMatrix matrix_;
  SolverKind kind_;
  std::unique_ptr<Impl> impl_;
};

/// Solves A u = f with prescribed values on a fixed DoF set, factorizing
/// the free block once.
class ConstrainedSolver {
 public:
  ConstrainedSolver(const SparseMatrix& matrix, std::vector<int> constrained);

  /// Full-length solution with u[constrained[k]] = values[k].
  Vector solve(const Vector& load, const Vector& values) const;
  /// Column-wise version; loads may be empty (zero load).
  Matrix solve(const Matrix& loads, const Matrix& values, Exec exec = Exec::parallel) const;

  int n_dofs() const { return n_; }
  const std::vector<int>& constrained() const { return constrained_; }
  const std::vector<int>& free_dofs() const { return free_; }

 private:
  int n_;
  std::vector<int> constrained_;
  std::vector<int> free_;
  SparseMatrix a_fc_;
  std::optional<LinearSolver> solver_;
};

/// Solves a constrained system; residual <= 1e-10 * ||rhs||.
Vector solve(const SparseSystem& system, SolverKind kind = SolverKind::direct);

// ---------------------------------------------------------------------------
// Coarse bilinear problem (homogenized), used for training data
// ---------------------------------------------------------------------------

/// 8x8 stiffness of an axis-aligned square bilinear element of size h,
/// DoFs (v0x, v0y, ..., v3x, v3y) in (bl, br, tr, tl) order.
Eigen::Matrix<double, 8, 8> quad_stiffness(double h, const Phase& phase);

/// Solves the bilinear FE problem on the coarse grid. Returns vertex
/// displacements in interleaved layout.
Vector solve_coarse_problem(const CoarseGrid& grid, const GlobalBc& bc, const Phase& phase);

/// Bilinear interpolation of a coarse vertex field. Points outside the
/// (masked) grid are extrapolated from the nearest cell.
Vec2 evaluate_coarse_field(const CoarseGrid& grid, const Vector& vertex_field, const Vec2& x);

}  // namespace lmor
