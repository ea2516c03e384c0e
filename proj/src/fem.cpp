#include "lmor/fem.hpp"

#include <Eigen/IterativeLinearSolvers>

#include <algorithm>
#include <cmath>
#include <map>

namespace lmor {

// ---------------------------------------------------------------------------
// Material
// ---------------------------------------------------------------------------

Phase phase_from_young_poisson(double young, double poisson, PlaneModel model) {
  if (!(young > 0.0) || !(poisson > -1.0 && poisson < 0.5))
    throw std::invalid_argument("Young's modulus must be positive and Poisson ratio in (-1, 0.5)");
  const double mu = young / (2.0 * (1.0 + poisson));
  const double lambda = model == PlaneModel::strain ? young * poisson / ((1.0 + poisson) * (1.0 - 2.0 * poisson))
                                                    : young * poisson / (1.0 - poisson * poisson);
  return {lambda, mu};
}

void Material::validate() const {
  if (phases.empty()) throw std::invalid_argument("material needs at least one phase");
  for (const auto& p : phases) {
    if (!(p.lambda2 > 0.0)) throw std::invalid_argument("shear modulus must be positive");
    if (!(p.lambda1 + 2.0 * p.lambda2 / kDim > 0.0)) throw std::invalid_argument("bulk response must be positive");
  }
}

const Phase& Material::phase(int label) const {
  if (label < 0 || label >= n_phases()) throw std::invalid_argument("no material phase for element label");
  return phases[label];
}

Material two_phase_material(double e_matrix, double e_aggregate, double poisson, PlaneModel model) {
  Material m{{phase_from_young_poisson(e_matrix, poisson, model), phase_from_young_poisson(e_aggregate, poisson, model)}};
  m.validate();
  return m;
}

namespace {

double triangle_area(const FineMesh& mesh, const std::array<int, 6>& el) {
  const Vec2 a = mesh.nodes[el[1]] - mesh.nodes[el[0]];
  const Vec2 b = mesh.nodes[el[2]] - mesh.nodes[el[0]];
  return 0.5 * (a.x() * b.y() - a.y() * b.x());
}

}  // namespace

Phase homogenized_phase(const FineMesh& mesh, const Material& material) {
  double area = 0.0;
  double l1 = 0.0;
  double l2 = 0.0;
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const double a = triangle_area(mesh, mesh.elements[e]);
    const auto& p = material.phase(mesh.material_label[e]);
    area += a;
    l1 += a * p.lambda1;
    l2 += a * p.lambda2;
  }
  return {l1 / area, l2 / area};
}

// ---------------------------------------------------------------------------
// Element kernels
// ---------------------------------------------------------------------------

namespace {

struct QuadPoint {
  double xi, eta, weight;
};

// degree-4 rule on the reference triangle, weights include the area 1/2
constexpr double kA = 0.445948490915965;
constexpr double kB = 0.091576213509771;
constexpr double kWa = 0.5 * 0.223381589678011;
constexpr double kWb = 0.5 * 0.109951743655322;
constexpr std::array<QuadPoint, 6> kTriRule{{{kA, kA, kWa},
                                             {1.0 - 2.0 * kA, kA, kWa},
                                             {kA, 1.0 - 2.0 * kA, kWa},
                                             {kB, kB, kWb},
                                             {1.0 - 2.0 * kB, kB, kWb},
                                             {kB, 1.0 - 2.0 * kB, kWb}}};

// d N_a / d(xi, eta) for the 6-node triangle
Eigen::Matrix<double, 6, 2> p2_gradients(double xi, double eta) {
  const double l1 = 1.0 - xi - eta;
  const double l2 = xi;
  const double l3 = eta;
  Eigen::Matrix<double, 6, 2> d;
  d << -(4.0 * l1 - 1.0), -(4.0 * l1 - 1.0),  //
      4.0 * l2 - 1.0, 0.0,                    //
      0.0, 4.0 * l3 - 1.0,                    //
      4.0 * (l1 - l2), -4.0 * l2,             //
      4.0 * l3, 4.0 * l2,                     //
      -4.0 * l3, 4.0 * (l1 - l3);
  return d;
}

constexpr std::array<double, 3> kGauss3Points{-0.7745966692414834, 0.0, 0.7745966692414834};
constexpr std::array<double, 3> kGauss3Weights{5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};

std::array<double, 3> quadratic_1d(double s) { return {0.5 * s * (s - 1.0), 1.0 - s * s, 0.5 * s * (s + 1.0)}; }
std::array<double, 3> quadratic_1d_derivative(double s) { return {s - 0.5, -2.0 * s, s + 0.5}; }

void check_chain(std::span<const int> chain) {
  if (chain.size() < 3 || chain.size() % 2 == 0)
    throw std::invalid_argument("boundary chain must consist of whole quadratic segments");
}

}  // namespace

ElementMatrix element_stiffness(const std::array<Vec2, 6>& x, const Phase& phase) {
  Eigen::Matrix3d d;
  d << phase.lambda1 + 2.0 * phase.lambda2, phase.lambda1, 0.0,  //
      phase.lambda1, phase.lambda1 + 2.0 * phase.lambda2, 0.0,   //
      0.0, 0.0, phase.lambda2;

  ElementMatrix k = ElementMatrix::Zero();
  for (const auto& qp : kTriRule) {
    const auto dref = p2_gradients(qp.xi, qp.eta);
    Eigen::Matrix2d jac = Eigen::Matrix2d::Zero();
    for (int a = 0; a < 6; ++a) jac += x[a] * dref.row(a);
    const double det = jac.determinant();
    if (!(det > 0.0)) throw std::invalid_argument("degenerate or inverted element");
    const Eigen::Matrix<double, 6, 2> grad = dref * jac.inverse();
    Eigen::Matrix<double, 3, 12> b = Eigen::Matrix<double, 3, 12>::Zero();
    for (int a = 0; a < 6; ++a) {
      b(0, 2 * a) = grad(a, 0);
      b(1, 2 * a + 1) = grad(a, 1);
      b(2, 2 * a) = grad(a, 1);
      b(2, 2 * a + 1) = grad(a, 0);
    }
    k.noalias() += (qp.weight * det) * (b.transpose() * d * b);
  }
  return k;
}

std::vector<ElementMatrix> element_matrices(const FineMesh& mesh, const Material& material, Exec exec) {
  for (int label : mesh.material_label) material.phase(label);
  std::vector<ElementMatrix> out(mesh.elements.size());
  for_each_index(mesh.n_elements(), exec, [&](long e) {
    const auto& el = mesh.elements[e];
    std::array<Vec2, 6> x;
    for (int a = 0; a < 6; ++a) x[a] = mesh.nodes[el[a]];
    out[e] = element_stiffness(x, material.phase(mesh.material_label[e]));
  });
  return out;
}

SparseMatrix assemble(const FineMesh& mesh, const Material& material, Exec exec) {
  const auto kes = element_matrices(mesh, material, exec);
  std::vector<Triplet> triplets;
  triplets.reserve(kes.size() * 144);
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const auto& el = mesh.elements[e];
    std::array<int, 12> dofs;
    for (int a = 0; a < 6; ++a) {
      dofs[2 * a] = dof_of(el[a], 0);
      dofs[2 * a + 1] = dof_of(el[a], 1);
    }
    for (int i = 0; i < 12; ++i)
      for (int j = 0; j < 12; ++j) triplets.emplace_back(dofs[i], dofs[j], kes[e](i, j));
  }
  SparseMatrix a(mesh.n_dofs(), mesh.n_dofs());
  a.setFromTriplets(triplets.begin(), triplets.end());
  return a;
}

Vector assemble_traction(const FineMesh& mesh, std::span<const int> chain, const VectorField& traction) {
  check_chain(chain);
  Vector f = Vector::Zero(mesh.n_dofs());
  if (!traction) return f;
  for (std::size_t k = 0; k + 2 < chain.size(); k += 2) {
    const std::array<int, 3> nodes{chain[k], chain[k + 1], chain[k + 2]};
    for (int q = 0; q < 3; ++q) {
      const double s = kGauss3Points[q];
      const auto n = quadratic_1d(s);
      const auto dn = quadratic_1d_derivative(s);
      Vec2 x = Vec2::Zero();
      Vec2 dx = Vec2::Zero();
      for (int a = 0; a < 3; ++a) {
        x += n[a] * mesh.nodes[nodes[a]];
        dx += dn[a] * mesh.nodes[nodes[a]];
      }
      const Vec2 t = traction(x);
      const double w = kGauss3Weights[q] * dx.norm();
      for (int a = 0; a < 3; ++a) {
        f[dof_of(nodes[a], 0)] += w * n[a] * t.x();
        f[dof_of(nodes[a], 1)] += w * n[a] * t.y();
      }
    }
  }
  return f;
}

namespace {

// 3x3 mass of one quadratic segment
Eigen::Matrix3d segment_mass(const Vec2& a, const Vec2& m, const Vec2& b) {
  Eigen::Matrix3d mass = Eigen::Matrix3d::Zero();
  const std::array<Vec2, 3> x{a, m, b};
  for (int q = 0; q < 3; ++q) {
    const double s = kGauss3Points[q];
    const auto n = quadratic_1d(s);
    const auto dn = quadratic_1d_derivative(s);
    Vec2 dx = Vec2::Zero();
    for (int k = 0; k < 3; ++k) dx += dn[k] * x[k];
    const double w = kGauss3Weights[q] * dx.norm();
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) mass(i, j) += w * n[i] * n[j];
  }
  return mass;
}

}  // namespace

SparseMatrix boundary_mass_matrix(const FineMesh& mesh, std::span<const std::vector<int>> chains,
                                  std::span<const int> dofs) {
  if (dofs.empty()) throw std::invalid_argument("boundary mass matrix needs a nonempty DoF set");
  std::map<int, int> local;
  for (std::size_t k = 0; k < dofs.size(); ++k) local.emplace(dofs[k], static_cast<int>(k));
  std::vector<Triplet> triplets;
  for (const auto& chain : chains) {
    check_chain(chain);
    for (std::size_t k = 0; k + 2 < chain.size(); k += 2) {
      const std::array<int, 3> nodes{chain[k], chain[k + 1], chain[k + 2]};
      const auto m = segment_mass(mesh.nodes[nodes[0]], mesh.nodes[nodes[1]], mesh.nodes[nodes[2]]);
      for (int c = 0; c < kDim; ++c) {
        for (int i = 0; i < 3; ++i) {
          auto ri = local.find(dof_of(nodes[i], c));
          if (ri == local.end()) continue;
          for (int j = 0; j < 3; ++j) {
            auto cj = local.find(dof_of(nodes[j], c));
            if (cj == local.end()) continue;
            triplets.emplace_back(ri->second, cj->second, m(i, j));
          }
        }
      }
    }
  }
  SparseMatrix out(static_cast<Eigen::Index>(dofs.size()), static_cast<Eigen::Index>(dofs.size()));
  out.setFromTriplets(triplets.begin(), triplets.end());
  return out;
}

SparseMatrix chain_mass_matrix(const FineMesh& mesh, std::span<const int> chain) {
  check_chain(chain);
  const int n = static_cast<int>(chain.size());
  std::vector<Triplet> triplets;
  for (int k = 0; k + 2 < n; k += 2) {
    const auto m = segment_mass(mesh.nodes[chain[k]], mesh.nodes[chain[k + 1]], mesh.nodes[chain[k + 2]]);
    for (int c = 0; c < kDim; ++c)
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) triplets.emplace_back(dof_of(k + i, c), dof_of(k + j, c), m(i, j));
  }
  SparseMatrix out(kDim * n, kDim * n);
  out.setFromTriplets(triplets.begin(), triplets.end());
  return out;
}

double energy_inner(const Vector& u, const Vector& v, const SparseMatrix& stiffness) {
  if (u.size() != stiffness.rows() || v.size() != stiffness.rows())
    throw std::invalid_argument("energy inner product: dimension mismatch");
  return u.dot(stiffness * v);
}

double energy_norm(const Vector& v, const SparseMatrix& stiffness) {
  return std::sqrt(std::max(0.0, energy_inner(v, v, stiffness)));
}

// ---------------------------------------------------------------------------
// Linear systems
// ---------------------------------------------------------------------------

SparseSystem apply_dirichlet(const SparseSystem& system, std::span<const int> dofs, std::span<const double> values) {
  if (dofs.size() != values.size()) throw std::invalid_argument("apply_dirichlet: dofs and values differ in length");
  const auto n = system.matrix.rows();
  std::map<int, double> fixed;
  auto add = [&](int dof, double value) {
    if (dof < 0 || dof >= n) throw std::invalid_argument("apply_dirichlet: DoF index out of range");
    auto [it, inserted] = fixed.emplace(dof, value);
    if (!inserted && it->second != value) throw std::invalid_argument("conflicting Dirichlet values for one DoF");
  };
  for (const auto& [d, v] : system.constrained_dofs) add(d, v);
  for (std::size_t k = 0; k < dofs.size(); ++k) add(dofs[k], values[k]);

  std::vector<double> value_of(n, 0.0);
  std::vector<char> is_fixed(n, 0);
  for (auto [d, v] : fixed) {
    is_fixed[d] = 1;
    value_of[d] = v;
  }

  SparseSystem out;
  out.rhs = system.rhs;
  std::vector<Triplet> triplets;
  triplets.reserve(system.matrix.nonZeros());
  for (int col = 0; col < system.matrix.outerSize(); ++col) {
    for (SparseMatrix::InnerIterator it(system.matrix, col); it; ++it) {
      const auto i = it.row();
      const auto j = it.col();
      if (is_fixed[i] || is_fixed[j]) {
        if (!is_fixed[i] && is_fixed[j]) out.rhs[i] -= it.value() * value_of[j];
        continue;
      }
      triplets.emplace_back(i, j, it.value());
    }
  }
  for (auto [d, v] : fixed) {
    triplets.emplace_back(d, d, 1.0);
    out.rhs[d] = v;
  }
  out.matrix.resize(n, n);
  out.matrix.setFromTriplets(triplets.begin(), triplets.end());
  out.constrained_dofs.assign(fixed.begin(), fixed.end());
  return out;
}

struct LinearSolver::Impl {
  Eigen::SimplicialLDLT<SparseMatrix> ldlt;
  Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper, Eigen::IncompleteCholesky<double>> cg;
};

namespace {
constexpr double kPivotFloor = 1e-10;
constexpr double kResidualTol = 1e-10;
}  // namespace

LinearSolver::LinearSolver(const SparseMatrix& matrix, SolverKind kind)
    : matrix_(matrix), kind_(kind), impl_(std::make_unique<Impl>()) {
  if (matrix.rows() != matrix.cols()) throw std::invalid_argument("solver needs a square matrix");
  if (matrix.rows() == 0) return;
  if (kind_ == SolverKind::direct) {
    impl_->ldlt.compute(matrix_);
    if (impl_->ldlt.info() == Eigen::Success) {
      const Vector d = impl_->ldlt.vectorD();
      const double dmax = d.cwiseAbs().maxCoeff();
      if (!(d.minCoeff() > kPivotFloor * dmax))
        throw SolverError("matrix is singular or not positive definite");
      return;
    }
    kind_ = SolverKind::conjugate_gradient;
  }
  impl_->cg.setTolerance(1e-14);
  impl_->cg.setMaxIterations(std::max<Eigen::Index>(1000, 10 * matrix_.rows()));
  impl_->cg.compute(matrix_);
  if (impl_->cg.info() != Eigen::Success) throw SolverError("preconditioner setup failed");
}

LinearSolver::~LinearSolver() = default;
LinearSolver::LinearSolver(LinearSolver&&) noexcept = default;
LinearSolver& LinearSolver::operator=(LinearSolver&&) noexcept = default;

Vector LinearSolver::solve(const Vector& rhs) const {
  if (rhs.size() != matrix_.rows()) throw std::invalid_argument("solver: right-hand side dimension mismatch");
  if (rhs.size() == 0) return rhs;
  const double bnorm = rhs.norm();
  if (bnorm == 0.0) return Vector::Zero(rhs.size());
  Vector x;
  if (kind_ == SolverKind::direct) {
    x = impl_->ldlt.solve(rhs);
    Vector r = rhs - matrix_ * x;
    if (r.norm() > kResidualTol * bnorm) {
      x += impl_->ldlt.solve(r);
      r = rhs - matrix_ * x;
    }
    if (!(r.norm() <= kResidualTol * bnorm)) throw SolverError("direct solve did not reach the residual tolerance");
  } else {
    x = impl_->cg.solve(rhs);
    if (impl_->cg.info() != Eigen::Success) throw SolverError("conjugate gradients did not converge");
    if (!((rhs - matrix_ * x).norm() <= kResidualTol * bnorm))
      throw SolverError("conjugate gradients did not reach the residual tolerance");
  }
  return x;
}

Matrix LinearSolver::solve(const Matrix& rhs, Exec exec) const {
  Matrix out(rhs.rows(), rhs.cols());
  for_each_index(rhs.cols(), exec, [&](long j) { out.col(j) = solve(Vector(rhs.col(j))); });
  return out;
}

namespace {

SparseMatrix extract(const SparseMatrix& a, const std::vector<int>& row_map, const std::vector<int>& col_map,
                     int rows, int cols) {
  std::vector<Triplet> triplets;
  for (int col = 0; col < a.outerSize(); ++col) {
    for (SparseMatrix::InnerIterator it(a, col); it; ++it) {
      const int r = row_map[it.row()];
      const int c = col_map[it.col()];
      if (r >= 0 && c >= 0) triplets.emplace_back(r, c, it.value());
    }
  }
  SparseMatrix out(rows, cols);
  out.setFromTriplets(triplets.begin(), triplets.end());
  return out;
}

}  // namespace

ConstrainedSolver::ConstrainedSolver(const SparseMatrix& matrix, std::vector<int> constrained)
    : n_(static_cast<int>(matrix.rows())), constrained_(std::move(constrained)) {
  std::vector<int> sorted = constrained_;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw std::invalid_argument("duplicate constrained DoF");
  std::vector<int> free_map(n_, -1);
  std::vector<int> fixed_map(n_, -1);
  for (std::size_t k = 0; k < constrained_.size(); ++k) {
    const int d = constrained_[k];
    if (d < 0 || d >= n_) throw std::invalid_argument("constrained DoF out of range");
    fixed_map[d] = static_cast<int>(k);
  }
  for (int d = 0; d < n_; ++d) {
    if (fixed_map[d] < 0) {
      free_map[d] = static_cast<int>(free_.size());
      free_.push_back(d);
    }
  }
  const int nf = static_cast<int>(free_.size());
  a_fc_ = extract(matrix, free_map, fixed_map, nf, static_cast<int>(constrained_.size()));
  solver_.emplace(extract(matrix, free_map, free_map, nf, nf));
}

Vector ConstrainedSolver::solve(const Vector& load, const Vector& values) const {
  if (values.size() != static_cast<Eigen::Index>(constrained_.size()))
    throw std::invalid_argument("constrained values: dimension mismatch");
  if (load.size() != 0 && load.size() != n_) throw std::invalid_argument("load: dimension mismatch");
  Vector rhs = -(a_fc_ * values);
  if (load.size() != 0)
    for (std::size_t k = 0; k < free_.size(); ++k) rhs[static_cast<Eigen::Index>(k)] += load[free_[k]];
  const Vector uf = solver_->solve(rhs);
  Vector u(n_);
  for (std::size_t k = 0; k < free_.size(); ++k) u[free_[k]] = uf[static_cast<Eigen::Index>(k)];
  for (std::size_t k = 0; k < constrained_.size(); ++k) u[constrained_[k]] = values[static_cast<Eigen::Index>(k)];
  return u;
}

Matrix ConstrainedSolver::solve(const Matrix& loads, const Matrix& values, Exec exec) const {
  Matrix out(n_, values.cols());
  for_each_index(values.cols(), exec, [&](long j) {
    out.col(j) = solve(loads.size() ? Vector(loads.col(j)) : Vector(), Vector(values.col(j)));
  });
  return out;
}

Vector solve(const SparseSystem& system, SolverKind kind) {
  LinearSolver solver(system.matrix, kind);
  return solver.solve(system.rhs);
}

// ---------------------------------------------------------------------------
// Coarse bilinear problem
// ---------------------------------------------------------------------------

Eigen::Matrix<double, 8, 8> quad_stiffness(double h, const Phase& phase) {
  Eigen::Matrix3d d;
  d << phase.lambda1 + 2.0 * phase.lambda2, phase.lambda1, 0.0,  //
      phase.lambda1, phase.lambda1 + 2.0 * phase.lambda2, 0.0,   //
      0.0, 0.0, phase.lambda2;
  constexpr std::array<double, 4> xs{-1.0, 1.0, 1.0, -1.0};
  constexpr std::array<double, 4> ys{-1.0, -1.0, 1.0, 1.0};
  const double g = 1.0 / std::sqrt(3.0);
  Eigen::Matrix<double, 8, 8> k = Eigen::Matrix<double, 8, 8>::Zero();
  for (double xi : {-g, g}) {
    for (double eta : {-g, g}) {
      Eigen::Matrix<double, 3, 8> b = Eigen::Matrix<double, 3, 8>::Zero();
      for (int a = 0; a < 4; ++a) {
        const double dx = 0.25 * xs[a] * (1.0 + eta * ys[a]) * 2.0 / h;
        const double dy = 0.25 * ys[a] * (1.0 + xi * xs[a]) * 2.0 / h;
        b(0, 2 * a) = dx;
        b(1, 2 * a + 1) = dy;
        b(2, 2 * a) = dy;
        b(2, 2 * a + 1) = dx;
      }
      k.noalias() += (h * h / 4.0) * (b.transpose() * d * b);
    }
  }
  return k;
}

Vector solve_coarse_problem(const CoarseGrid& grid, const GlobalBc& bc, const Phase& phase) {
  const int n = kDim * grid.n_vertices();
  const auto ke = quad_stiffness(grid.cell_size, phase);
  std::vector<Triplet> triplets;
  for (const auto& cell : grid.cells) {
    for (int a = 0; a < 4; ++a)
      for (int ca = 0; ca < 2; ++ca)
        for (int b = 0; b < 4; ++b)
          for (int cb = 0; cb < 2; ++cb)
            triplets.emplace_back(dof_of(cell[a], ca), dof_of(cell[b], cb), ke(2 * a + ca, 2 * b + cb));
  }
  SparseSystem sys;
  sys.matrix.resize(n, n);
  sys.matrix.setFromTriplets(triplets.begin(), triplets.end());
  sys.rhs = Vector::Zero(n);

  std::map<int, double> fixed;
  for (int e = 0; e < grid.n_edges(); ++e) {
    if (!grid.is_boundary_edge(e)) continue;
    const auto& ebc = bc.edge(e);
    const auto [v0, v1] = grid.edges[e];
    if (ebc.type == BcType::dirichlet) {
      for (int v : {v0, v1}) {
        const Vec2 g = bc.dirichlet_value(grid.vertices[v]);
        for (int c = 0; c < 2; ++c)
          if (ebc.fixed[c]) fixed[dof_of(v, c)] = g[c];
      }
    } else if (ebc.type == BcType::neumann && bc.traction) {
      const Vec2 a = grid.vertices[v0];
      const Vec2 b = grid.vertices[v1];
      const double len = (b - a).norm();
      for (int q = 0; q < 3; ++q) {
        const double s = 0.5 * (kGauss3Points[q] + 1.0);
        const Vec2 t = bc.traction(a + s * (b - a));
        const double w = 0.5 * kGauss3Weights[q] * len;
        for (int c = 0; c < 2; ++c) {
          sys.rhs[dof_of(v0, c)] += w * (1.0 - s) * t[c];
          sys.rhs[dof_of(v1, c)] += w * s * t[c];
        }
      }
    }
  }
  for (const auto& pc : bc.points) fixed[dof_of(pc.vertex, pc.component)] = bc.dirichlet_value(grid.vertices[pc.vertex])[pc.component];
  if (fixed.empty()) throw std::invalid_argument("coarse problem has no Dirichlet constraints");

  std::vector<int> dofs;
  std::vector<double> values;
  for (auto [d, v] : fixed) {
    dofs.push_back(d);
    values.push_back(v);
  }
  return solve(apply_dirichlet(sys, dofs, values));
}

Vec2 evaluate_coarse_field(const CoarseGrid& grid, const Vector& u, const Vec2& x) {
  const double h = grid.cell_size;
  const Vec2 rel = (x - grid.origin) / h;
  int ix = std::clamp(static_cast<int>(std::floor(rel.x())), 0, grid.layout.nx - 1);
  int iy = std::clamp(static_cast<int>(std::floor(rel.y())), 0, grid.layout.ny - 1);
  int cell = grid.cell_at(ix, iy);
  if (cell < 0) {
    double best = std::numeric_limits<double>::infinity();
    for (int c = 0; c < grid.n_cells(); ++c) {
      const Vec2 center = grid.cell_origin(c) + Vec2(0.5 * h, 0.5 * h);
      const double d = (center - x).squaredNorm();
      if (d < best) {
        best = d;
        cell = c;
      }
    }
  }
  const Vec2 o = grid.cell_origin(cell);
  const double xi = 2.0 * (x.x() - o.x()) / h - 1.0;
  const double eta = 2.0 * (x.y() - o.y()) / h - 1.0;
  const std::array<double, 4> w{0.25 * (1 - xi) * (1 - eta), 0.25 * (1 + xi) * (1 - eta), 0.25 * (1 + xi) * (1 + eta),
                                0.25 * (1 - xi) * (1 + eta)};
  Vec2 out = Vec2::Zero();
  for (int a = 0; a < 4; ++a) {
    const int v = grid.cells[cell][a];
    out += w[a] * Vec2(u[dof_of(v, 0)], u[dof_of(v, 1)]);
  }
  return out;
}

}  // namespace lmor
