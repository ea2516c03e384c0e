#include "lmor/basis.hpp"

#include "lmor/shapefn.hpp"

#include <Eigen/QR>

#include <cmath>

namespace lmor {

std::string to_string(BasisKind kind) {
  switch (kind) {
    case BasisKind::empirical: return "empirical";
    case BasisKind::hierarchical: return "hierarchical";
    case BasisKind::spectral: return "spectral";
  }
  return "?";
}

BasisKind basis_kind_from_string(const std::string& name) {
  if (name == "empirical") return BasisKind::empirical;
  if (name == "hierarchical") return BasisKind::hierarchical;
  if (name == "spectral") return BasisKind::spectral;
  throw std::invalid_argument("unknown basis kind: " + name);
}

EdgeModeSet EdgeModeSet::truncated(int n) const {
  if (n < 0) throw std::invalid_argument("negative mode count");
  EdgeModeSet out;
  for (int s = 0; s < 4; ++s) out.modes[s] = modes[s].leftCols(std::min<Eigen::Index>(n, modes[s].cols()));
  return out;
}

// ---------------------------------------------------------------------------

std::array<int, 4> corner_nodes(const FineMesh& mesh) {
  const auto& bottom = mesh.boundary(Side::bottom);
  const auto& top = mesh.boundary(Side::top);
  return {bottom.front(), bottom.back(), top.back(), top.front()};
}

namespace {

double rce_side(const FineMesh& mesh) {
  const auto c = corner_nodes(mesh);
  return mesh.nodes[c[1]].x() - mesh.nodes[c[0]].x();
}

Vec2 reference_coordinates(const FineMesh& mesh, const Vec2& x) {
  const Vec2 o = mesh.nodes[corner_nodes(mesh)[0]];
  const double h = rce_side(mesh);
  return {2.0 * (x.x() - o.x()) / h - 1.0, 2.0 * (x.y() - o.y()) / h - 1.0};
}

}  // namespace

Vector coarse_part(const FineMesh& mesh, const Vector& u) {
  if (u.size() != mesh.n_dofs()) throw std::invalid_argument("coarse_part: dimension mismatch");
  const auto corners = corner_nodes(mesh);
  Vector out(mesh.n_dofs());
  for (int n = 0; n < mesh.n_nodes(); ++n) {
    const Vec2 r = reference_coordinates(mesh, mesh.nodes[n]);
    for (int c = 0; c < kDim; ++c) {
      double v = 0.0;
      for (int j = 0; j < 4; ++j) v += coarse_shape(j, r.x(), r.y()) * u[dof_of(corners[j], c)];
      out[dof_of(n, c)] = v;
    }
  }
  // corner values are reproduced exactly
  for (int n : corners)
    for (int c = 0; c < kDim; ++c) out[dof_of(n, c)] = u[dof_of(n, c)];
  return out;
}

Vector fine_part(const FineMesh& mesh, const Vector& u) { return u - coarse_part(mesh, u); }

Vector edge_trace(const FineMesh& mesh, Side side, const Vector& u) {
  const auto& chain = mesh.boundary(side);
  Vector out(kDim * static_cast<Eigen::Index>(chain.size()));
  for (std::size_t k = 0; k < chain.size(); ++k)
    for (int c = 0; c < kDim; ++c) out[dof_of(static_cast<int>(k), c)] = u[dof_of(chain[k], c)];
  return out;
}

std::array<Vector, 4> restrict_to_edges(const FineMesh& mesh, const Vector& u) {
  std::array<Vector, 4> out;
  for (Side s : kSides) out[static_cast<int>(s)] = edge_trace(mesh, s, u);
  return out;
}

// ---------------------------------------------------------------------------

RceOperator::RceOperator(FineMesh mesh, const Material& material, Exec exec)
    : mesh_(std::move(mesh)),
      stiffness_(assemble(mesh_, material, exec)),
      solver_(stiffness_, boundary_dofs(mesh_)),
      side_(rce_side(mesh_)) {}

std::vector<double> RceOperator::edge_coordinates(Side s) const {
  const auto& chain = mesh_.boundary(s);
  const Vec2 start = mesh_.nodes[chain.front()];
  std::vector<double> xi;
  xi.reserve(chain.size());
  for (int n : chain) xi.push_back(2.0 * (mesh_.nodes[n] - start).norm() / side_ - 1.0);
  xi.front() = -1.0;
  xi.back() = 1.0;
  return xi;
}

Vector RceOperator::extend(const Vector& boundary_values) const { return solver_.solve(Vector(), boundary_values); }

Matrix RceOperator::extend(const Matrix& boundary_values, Exec exec) const {
  return solver_.solve(Matrix(), boundary_values, exec);
}

Matrix extend_coarse(const RceOperator& op, Exec exec) {
  const auto& mesh = op.mesh();
  const auto& bnd = op.boundary();
  Matrix values(static_cast<Eigen::Index>(bnd.size()), 8);
  for (std::size_t k = 0; k < bnd.size(); ++k) {
    const int node = bnd[k] / kDim;
    const int comp = bnd[k] % kDim;
    const Vec2 r = reference_coordinates(mesh, mesh.nodes[node]);
    for (int j = 0; j < 4; ++j) {
      values(static_cast<Eigen::Index>(k), 2 * j + comp) = coarse_shape(j, r.x(), r.y());
      values(static_cast<Eigen::Index>(k), 2 * j + 1 - comp) = 0.0;
    }
  }
  return op.extend(values, exec);
}

namespace {

Vector edge_boundary_values(const RceOperator& op, Side side, const Vector& mode) {
  const auto& chain = op.mesh().boundary(side);
  const auto n = static_cast<Eigen::Index>(kDim * chain.size());
  if (mode.size() != n) throw std::invalid_argument("edge mode length does not match the edge trace");
  const double scale = mode.cwiseAbs().maxCoeff();
  for (Eigen::Index i : {Eigen::Index{0}, Eigen::Index{1}, n - 2, n - 1}) {
    if (std::abs(mode[i]) > 1e-12 * scale) throw std::invalid_argument("edge mode does not vanish at the edge ends");
  }
  const auto& bnd = op.boundary();
  Vector values = Vector::Zero(static_cast<Eigen::Index>(bnd.size()));
  for (std::size_t k = 1; k + 1 < chain.size(); ++k) {
    for (int c = 0; c < kDim; ++c) {
      const auto it = std::lower_bound(bnd.begin(), bnd.end(), dof_of(chain[k], c));
      values[it - bnd.begin()] = mode[dof_of(static_cast<int>(k), c)];
    }
  }
  return values;
}

}  // namespace

Vector extend_edge_mode(const RceOperator& op, Side side, const Vector& mode) {
  return op.extend(edge_boundary_values(op, side, mode));
}

Matrix extend_edge_modes(const RceOperator& op, Side side, const Matrix& modes, Exec exec) {
  Matrix values(static_cast<Eigen::Index>(op.boundary().size()), modes.cols());
  for (Eigen::Index j = 0; j < modes.cols(); ++j) values.col(j) = edge_boundary_values(op, side, modes.col(j));
  return op.extend(values, exec);
}

EdgeModeSet hierarchical_edge_basis(int n_mpe, const RceOperator& op) {
  if (n_mpe < 0) throw std::invalid_argument("negative number of modes per edge");
  EdgeModeSet set;
  for (Side s : kSides) {
    const auto xi = op.edge_coordinates(s);
    const int n_nodes = static_cast<int>(xi.size());
    if (n_mpe > kDim * (n_nodes - 2))
      throw std::invalid_argument("more hierarchical modes than interior trace DoFs on an edge");
    Matrix m = Matrix::Zero(kDim * n_nodes, n_mpe);
    for (int j = 0; j < n_mpe; ++j) {
      const int p = j / kDim + 1;
      const int comp = j % kDim;
      for (int k = 0; k < n_nodes; ++k) m(dof_of(k, comp), j) = hierarchical_edge_fn(p, xi[k]);
    }
    set[s] = std::move(m);
  }
  return set;
}

// ---------------------------------------------------------------------------

int BasisMatrix::column_offset(Side s) const {
  int offset = 8;
  for (int k = 0; k < static_cast<int>(s); ++k) offset += n_modes[k];
  return offset;
}

BasisMatrix build_basis_matrix(const Matrix& coarse, const std::array<Matrix, 4>& fine, BasisKind kind) {
  if (coarse.cols() != 8) throw std::invalid_argument("coarse block must have 8 columns");
  Eigen::Index cols = coarse.cols();
  for (const auto& f : fine) {
    if (f.cols() > 0 && f.rows() != coarse.rows()) throw std::invalid_argument("basis blocks differ in length");
    cols += f.cols();
  }
  BasisMatrix out;
  out.kind = kind;
  out.b.resize(coarse.rows(), cols);
  out.b.leftCols(8) = coarse;
  Eigen::Index offset = 8;
  for (int s = 0; s < 4; ++s) {
    out.n_modes[s] = static_cast<int>(fine[s].cols());
    out.b.middleCols(offset, fine[s].cols()) = fine[s];
    offset += fine[s].cols();
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(out.b);
  qr.setThreshold(1e-10);
  if (qr.rank() != cols) throw std::invalid_argument("basis matrix is rank deficient");
  return out;
}

BasisMatrix build_cell_basis(const RceOperator& op, const Matrix& coarse, const EdgeModeSet& modes, BasisKind kind,
                             Exec exec) {
  std::array<Matrix, 4> fine;
  for (Side s : kSides) fine[static_cast<int>(s)] = extend_edge_modes(op, s, modes[s], exec);
  return build_basis_matrix(coarse, fine, kind);
}

}  // namespace lmor
