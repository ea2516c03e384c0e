#include "lmor/metrics.hpp"

#include "lmor/fem.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>

namespace lmor {

double local_error(const Vector& u_fom, const Vector& u_rom, const SparseMatrix& a) {
  if (u_fom.size() != u_rom.size()) throw std::invalid_argument("local_error: field sizes differ");
  return energy_norm(Vector(u_fom - u_rom), a);
}

GlobalErrors global_errors(std::span<const double> cell_errors, std::span<const double> cell_fom_norms) {
  if (cell_errors.size() != cell_fom_norms.size()) throw std::invalid_argument("global_errors: one norm per cell");
  double err = 0.0;
  double ref = 0.0;
  for (std::size_t i = 0; i < cell_errors.size(); ++i) {
    err += cell_errors[i] * cell_errors[i];
    ref += cell_fom_norms[i] * cell_fom_norms[i];
  }
  if (!(ref > 0.0)) throw std::invalid_argument("global_errors: reference solution has zero energy");
  return {std::sqrt(err), std::sqrt(err / ref)};
}

ErrorReport error_report(std::span<const Vector> fom_cells, std::span<const Vector> rom_cells, const SparseMatrix& a,
                         BasisKind kind, int n_mpe, int n_dofs) {
  if (fom_cells.size() != rom_cells.size()) throw std::invalid_argument("error_report: cell counts differ");
  ErrorReport r;
  r.kind = kind;
  r.n_mpe = n_mpe;
  r.n_dofs = n_dofs;
  for (std::size_t c = 0; c < fom_cells.size(); ++c) {
    r.cell_errors.push_back(local_error(fom_cells[c], rom_cells[c], a));
    r.cell_fom_norms.push_back(energy_norm(fom_cells[c], a));
  }
  r.global = global_errors(r.cell_errors, r.cell_fom_norms);
  return r;
}

Vector projection_errors(const Matrix& tests, const Matrix& basis, const SparseMatrix& gramian) {
  if (basis.cols() == 0) throw std::invalid_argument("projection onto an empty basis");
  if (basis.rows() != gramian.rows() || tests.rows() != gramian.rows())
    throw std::invalid_argument("projection_errors: dimension mismatch");
  // unit-energy columns; columns without energy do not contribute
  Vector scale(basis.cols());
  double max_energy = 0.0;
  for (Eigen::Index j = 0; j < basis.cols(); ++j) {
    scale[j] = std::sqrt(std::max(0.0, basis.col(j).dot(gramian * basis.col(j))));
    max_energy = std::max(max_energy, scale[j]);
  }
  if (!(max_energy > 0.0)) throw std::invalid_argument("basis has no energy");
  for (Eigen::Index j = 0; j < basis.cols(); ++j) scale[j] = scale[j] > 1e-12 * max_energy ? 1.0 / scale[j] : 0.0;
  const Matrix scaled = basis * scale.asDiagonal();
  const Matrix gb = gramian * scaled;
  Matrix gram = scaled.transpose() * gb;
  gram = 0.5 * (gram + gram.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
  const Vector& ev = eig.eigenvalues();
  const double top = ev.maxCoeff();
  std::vector<Eigen::Index> keep;
  double smallest = top;
  for (Eigen::Index k = 0; k < ev.size(); ++k) {
    if (ev[k] > 1e-13 * top) {
      keep.push_back(k);
      smallest = std::min(smallest, ev[k]);
    }
  }
  if (top / smallest > 1e12) throw std::runtime_error("projection Gram matrix is ill-conditioned");
  // orthonormal (in energy) combinations of the basis
  Matrix q(basis.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j)
    q.col(static_cast<Eigen::Index>(j)) = scaled * eig.eigenvectors().col(keep[j]) / std::sqrt(ev[keep[j]]);
  const Matrix gq = gramian * q;

  Vector out(tests.cols());
  for (Eigen::Index j = 0; j < tests.cols(); ++j) {
    const Vector t = tests.col(j);
    const double norm = std::sqrt(std::max(0.0, t.dot(gramian * t)));
    if (!(norm > 0.0)) throw std::invalid_argument("test vector has zero energy");
    Vector r = t - q * (gq.transpose() * t);
    r -= q * (gq.transpose() * r);
    out[j] = std::sqrt(std::max(0.0, r.dot(gramian * r))) / norm;
  }
  return out;
}

double projection_error(const Matrix& tests, const Matrix& basis, const SparseMatrix& gramian) {
  if (tests.cols() == 0) throw std::invalid_argument("empty testing set");
  return projection_errors(tests, basis, gramian).maxCoeff();
}

DofCounts dof_counts(const CoarseGrid& grid, int n_mpe, int n_local) {
  if (n_mpe < 0 || n_local < 0) throw std::invalid_argument("dof_counts: negative size");
  return {static_cast<long>(kDim) * grid.n_vertices() + static_cast<long>(grid.n_edges()) * n_mpe,
          static_cast<long>(grid.n_vertices()) * n_local};
}

}  // namespace lmor
