#pragma once

#include "lmor/basis.hpp"
#include "lmor/mesh.hpp"
#include "lmor/types.hpp"

#include <span>
#include <vector>

namespace lmor {

/// Energy norm of u_fom - u_rom on one cell.
double local_error(const Vector& u_fom, const Vector& u_rom, const SparseMatrix& a);

struct GlobalErrors {
  double absolute = 0.0;
  double relative = 0.0;
};

/// Absolute error sqrt(sum e_i^2), relative to sqrt(sum ||u_fom,i||^2).
GlobalErrors global_errors(std::span<const double> cell_errors, std::span<const double> cell_fom_norms);

struct ErrorReport {
  BasisKind kind = BasisKind::empirical;
  int n_mpe = 0;
  int n_dofs = 0;
  std::vector<double> cell_errors;
  std::vector<double> cell_fom_norms;
  GlobalErrors global;
};

ErrorReport error_report(std::span<const Vector> fom_cells, std::span<const Vector> rom_cells, const SparseMatrix& a,
                         BasisKind kind, int n_mpe, int n_dofs);

/// Relative energy-norm projection error of every test vector onto
/// span(basis). Coefficients come from the Gram system; directions of zero
/// energy are dropped, an ill-conditioned remainder (cond > 1e12) is rejected.
Vector projection_errors(const Matrix& tests, const Matrix& basis, const SparseMatrix& gramian);
double projection_error(const Matrix& tests, const Matrix& basis, const SparseMatrix& gramian);

struct DofCounts {
  long empirical = 0;
  long spectral = 0;
};

/// N_emp = 2 n_v + n_e n_mpe, N_spe = n_v n_local.
DofCounts dof_counts(const CoarseGrid& grid, int n_mpe, int n_local);

}  // namespace lmor
