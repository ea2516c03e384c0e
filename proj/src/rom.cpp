#include "lmor/rom.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

namespace lmor {

// ---------------------------------------------------------------------------
// DoF map
// ---------------------------------------------------------------------------

DofMap build_dof_map(const CoarseGrid& grid, int n_mpe) {
  if (n_mpe < 0) throw std::invalid_argument("modes per edge must be non-negative");
  const std::vector<int> counts(grid.n_edges(), n_mpe);
  return build_dof_map(grid, counts);
}

DofMap build_dof_map(const CoarseGrid& grid, std::span<const int> modes_per_edge) {
  if (static_cast<int>(modes_per_edge.size()) != grid.n_edges())
    throw std::invalid_argument("one mode count per coarse edge required");
  DofMap m;
  m.n_vertices = grid.n_vertices();
  m.edge_count.assign(modes_per_edge.begin(), modes_per_edge.end());
  m.edge_offset.resize(grid.n_edges());
  int next = kDim * m.n_vertices;
  for (int e = 0; e < grid.n_edges(); ++e) {
    if (m.edge_count[e] < 0) throw std::invalid_argument("negative mode count");
    m.edge_offset[e] = next;
    next += m.edge_count[e];
  }
  m.n_dofs = next;
  m.cell_dofs.resize(grid.n_cells());
  for (int c = 0; c < grid.n_cells(); ++c) {
    auto& d = m.cell_dofs[c];
    for (int v : grid.cells[c])
      for (int comp = 0; comp < kDim; ++comp) d.push_back(m.vertex_dof(v, comp));
    for (int e : grid.cell_edges[c])
      for (int k = 0; k < m.edge_count[e]; ++k) d.push_back(m.edge_dof(e, k));
  }
  return m;
}

// ---------------------------------------------------------------------------
// Edge modes
// ---------------------------------------------------------------------------

std::vector<int> GlobalEdgeModes::counts() const {
  std::vector<int> out;
  for (const auto& m : modes) out.push_back(static_cast<int>(m.cols()));
  return out;
}

GlobalEdgeModes GlobalEdgeModes::truncated(int n_mpe) const {
  if (n_mpe < 0) throw std::invalid_argument("modes per edge must be non-negative");
  GlobalEdgeModes out;
  out.source = source;
  for (const auto& m : modes) out.modes.push_back(m.leftCols(std::min<Eigen::Index>(n_mpe, m.cols())));
  return out;
}

namespace {

int side_of(const CoarseGrid& grid, int cell, int edge) {
  for (int s = 0; s < 4; ++s)
    if (grid.cell_edges[cell][s] == edge) return s;
  throw std::logic_error("edge does not belong to cell");
}

}  // namespace

GlobalEdgeModes assign_edge_modes(const CoarseGrid& grid, std::span<const int> cell_config,
                                  std::span<const int> config_priority, std::span<const EdgeModeSet> config_modes) {
  if (static_cast<int>(cell_config.size()) != grid.n_cells())
    throw std::invalid_argument("one configuration index per cell required");
  if (config_priority.size() != config_modes.size()) throw std::invalid_argument("priority and mode lists differ");
  GlobalEdgeModes out;
  out.modes.resize(grid.n_edges());
  out.source.resize(grid.n_edges());
  for (int e = 0; e < grid.n_edges(); ++e) {
    int owner = -1;
    for (int c : grid.edge_cells[e]) {
      const int cfg = cell_config[c];
      if (cfg < 0 || cfg >= static_cast<int>(config_modes.size()))
        throw std::invalid_argument("cell without configuration");
      if (owner < 0 || config_priority[cfg] > config_priority[cell_config[owner]] ||
          (config_priority[cfg] == config_priority[cell_config[owner]] && c < owner))
        owner = c;
    }
    const int side = side_of(grid, owner, e);
    const int cfg = cell_config[owner];
    out.modes[e] = config_modes[cfg].modes[side];
    out.source[e] = 4 * cfg + side;
  }
  return out;
}

GlobalEdgeModes uniform_edge_modes(const CoarseGrid& grid, const EdgeModeSet& modes) {
  GlobalEdgeModes out;
  for (int e = 0; e < grid.n_edges(); ++e) {
    // all sides of a hierarchical set are equal; horizontal edges use bottom
    out.modes.push_back(modes.modes[grid.is_horizontal(e) ? 0 : 1]);
    out.source.push_back(grid.is_horizontal(e) ? 0 : 1);
  }
  return out;
}

std::vector<BasisMatrix> build_cell_bases(const RceOperator& op, const CoarseGrid& grid, const GlobalEdgeModes& modes,
                                          BasisKind kind, Exec exec) {
  if (static_cast<int>(modes.modes.size()) != grid.n_edges()) throw std::invalid_argument("edge modes do not match grid");
  const Matrix coarse = extend_coarse(op, exec);
  std::map<std::array<int, 4>, std::size_t> cache;
  std::vector<BasisMatrix> unique;
  std::vector<std::size_t> index(grid.n_cells());
  for (int c = 0; c < grid.n_cells(); ++c) {
    std::array<int, 4> key;
    for (int s = 0; s < 4; ++s) key[s] = modes.source[grid.cell_edges[c][s]];
    auto it = cache.find(key);
    if (it == cache.end()) {
      EdgeModeSet set;
      for (int s = 0; s < 4; ++s) set.modes[s] = modes.modes[grid.cell_edges[c][s]];
      unique.push_back(build_cell_basis(op, coarse, set, kind, exec));
      it = cache.emplace(key, unique.size() - 1).first;
    }
    index[c] = it->second;
  }
  std::vector<BasisMatrix> out;
  out.reserve(grid.n_cells());
  for (int c = 0; c < grid.n_cells(); ++c) out.push_back(unique[index[c]]);
  return out;
}

// ---------------------------------------------------------------------------
// Reduction
// ---------------------------------------------------------------------------

ReducedLocal reduce_local(const SparseMatrix& a_loc, const Vector& f_loc, const BasisMatrix& b, int cell) {
  if (a_loc.rows() != b.b.rows() || a_loc.cols() != b.b.rows()) throw std::invalid_argument("reduce_local: basis rows");
  if (f_loc.size() != 0 && f_loc.size() != b.b.rows()) throw std::invalid_argument("reduce_local: load size");
  ReducedLocal r;
  r.cell = cell;
  r.kind = b.kind;
  const Matrix ab = a_loc * b.b;
  r.a = b.b.transpose() * ab;
  r.a = 0.5 * (r.a + r.a.transpose()).eval();
  r.f = f_loc.size() == 0 ? Vector(Vector::Zero(b.n_columns())) : Vector(b.b.transpose() * f_loc);
  return r;
}

Vector cell_load(const FineMesh& rce, const CoarseGrid& grid, const GlobalBc& bc, int cell) {
  Vector f = Vector::Zero(rce.n_dofs());
  if (!bc.traction) return f;
  const Vec2 origin = grid.cell_origin(cell);
  const VectorField shifted = [&](const Vec2& x) { return bc.traction(x + origin); };
  for (int s = 0; s < 4; ++s) {
    const int e = grid.cell_edges[cell][s];
    if (grid.is_boundary_edge(e) && bc.edge(e).type == BcType::neumann)
      f += assemble_traction(rce, rce.boundary_edges[s], shifted);
  }
  return f;
}

ReducedSystem assemble_global(std::span<const ReducedLocal> locals, const DofMap& dofs) {
  ReducedSystem sys;
  sys.f = Vector::Zero(dofs.n_dofs);
  std::vector<Triplet> triplets;
  for (const auto& r : locals) {
    if (r.cell < 0 || r.cell >= static_cast<int>(dofs.cell_dofs.size()))
      throw std::invalid_argument("reduced cell outside the DoF map");
    const auto& d = dofs.cell_dofs[r.cell];
    const auto n = static_cast<Eigen::Index>(d.size());
    if (r.a.rows() != n || r.a.cols() != n || r.f.size() != n)
      throw std::invalid_argument("reduced cell size does not match the DoF map");
    for (Eigen::Index j = 0; j < n; ++j) {
      sys.f[d[j]] += r.f[j];
      for (Eigen::Index i = 0; i < n; ++i)
        if (r.a(i, j) != 0.0) triplets.emplace_back(d[i], d[j], r.a(i, j));
    }
  }
  sys.a.resize(dofs.n_dofs, dofs.n_dofs);
  sys.a.setFromTriplets(triplets.begin(), triplets.end());
  return sys;
}

std::vector<std::pair<int, double>> project_dirichlet(const FineMesh& rce, const CoarseGrid& grid, const GlobalBc& bc,
                                                      const DofMap& dofs, const GlobalEdgeModes& modes) {
  std::map<int, double> fixed;
  for (int e = 0; e < grid.n_edges(); ++e) {
    if (!grid.is_boundary_edge(e) || bc.edge(e).type != BcType::dirichlet) continue;
    const auto& ebc = bc.edge(e);
    for (int v : grid.edges[e]) {
      const Vec2 g = bc.dirichlet_value(grid.vertices[v]);
      for (int c = 0; c < kDim; ++c)
        if (ebc.fixed[c]) fixed.emplace(dofs.vertex_dof(v, c), g[c]);
    }
    const Matrix& psi = modes.modes[e];
    if (psi.cols() == 0) continue;
    if (dofs.edge_count[e] != psi.cols()) throw std::invalid_argument("edge modes do not match the DoF map");

    const int cell = grid.edge_cells[e][0];
    const int side = side_of(grid, cell, e);
    const auto& chain = rce.boundary_edges[side];
    const Vec2 origin = grid.cell_origin(cell);
    const Vec2 x0 = rce.nodes[chain.front()] + origin;
    const Vec2 x1 = rce.nodes[chain.back()] + origin;
    const Vec2 g0 = bc.dirichlet_value(x0);
    const Vec2 g1 = bc.dirichlet_value(x1);
    const double len = (x1 - x0).norm();
    Vector r = Vector::Zero(psi.rows());
    Matrix masked = Matrix::Zero(psi.rows(), psi.cols());
    for (std::size_t k = 0; k < chain.size(); ++k) {
      const Vec2 x = rce.nodes[chain[k]] + origin;
      const double t = (x - x0).norm() / len;
      const Vec2 g = bc.dirichlet_value(x) - ((1.0 - t) * g0 + t * g1);
      for (int c = 0; c < kDim; ++c) {
        if (!ebc.fixed[c]) continue;
        const auto row = static_cast<Eigen::Index>(dof_of(static_cast<int>(k), c));
        r[row] = g[c];
        masked.row(row) = psi.row(row);
      }
    }
    std::vector<Eigen::Index> constrained;
    for (Eigen::Index k = 0; k < psi.cols(); ++k)
      if (masked.col(k).norm() > 1e-12 * psi.col(k).norm()) constrained.push_back(k);
    if (constrained.empty()) continue;
    Matrix p(psi.rows(), static_cast<Eigen::Index>(constrained.size()));
    for (std::size_t j = 0; j < constrained.size(); ++j) p.col(static_cast<Eigen::Index>(j)) = masked.col(constrained[j]);
    const SparseMatrix mass = chain_mass_matrix(rce, chain);
    const Matrix mp = mass * p;
    const Matrix gram = p.transpose() * mp;
    const Vector coef = gram.completeOrthogonalDecomposition().solve(Vector(mp.transpose() * r));
    for (std::size_t j = 0; j < constrained.size(); ++j)
      fixed.emplace(dofs.edge_dof(e, static_cast<int>(constrained[j])), coef[static_cast<Eigen::Index>(j)]);
  }
  for (const auto& pc : bc.points) {
    const Vec2 g = bc.dirichlet_value(grid.vertices[pc.vertex]);
    fixed.emplace(dofs.vertex_dof(pc.vertex, pc.component), g[pc.component]);
  }
  return {fixed.begin(), fixed.end()};
}

Vector solve_rom(const ReducedSystem& system, std::span<const std::pair<int, double>> constraints) {
  std::vector<int> d;
  std::vector<double> v;
  for (const auto& [dof, value] : constraints) {
    d.push_back(dof);
    v.push_back(value);
  }
  const SparseSystem sys = apply_dirichlet({system.a, system.f, {}}, d, v);
  return solve(sys);
}

Vector reconstruct(const Vector& u_n, const DofMap& dofs, const BasisMatrix& b, int cell) {
  const auto& d = dofs.cell_dofs.at(cell);
  if (static_cast<int>(d.size()) != b.n_columns()) throw std::invalid_argument("basis does not match the DoF map");
  Vector local(static_cast<Eigen::Index>(d.size()));
  for (std::size_t k = 0; k < d.size(); ++k) local[static_cast<Eigen::Index>(k)] = u_n[d[k]];
  return b.b * local;
}

// ---------------------------------------------------------------------------
// Full-order model
// ---------------------------------------------------------------------------

FomSolution solve_fom(const CoarseGrid& grid, const FineMesh& rce, const Material& material, const GlobalBc& bc,
                      Exec exec) {
  std::vector<int> all(grid.n_cells());
  for (int c = 0; c < grid.n_cells(); ++c) all[c] = c;
  FomSolution out{compose_patch(grid, all, rce), Vector()};
  const FineMesh& mesh = out.mesh.mesh;
  const SparseMatrix k = assemble(mesh, material, exec);
  Vector load = Vector::Zero(mesh.n_dofs());
  std::map<int, double> fixed;
  for (int e = 0; e < grid.n_edges(); ++e) {
    if (!grid.is_boundary_edge(e)) continue;
    const auto& ebc = bc.edge(e);
    const auto& chain = out.mesh.edge_nodes.at(e);
    if (ebc.type == BcType::dirichlet) {
      for (int n : chain) {
        const Vec2 g = bc.dirichlet_value(mesh.nodes[n]);
        for (int c = 0; c < kDim; ++c)
          if (ebc.fixed[c]) fixed.emplace(dof_of(n, c), g[c]);
      }
    } else if (ebc.type == BcType::neumann && bc.traction) {
      load += assemble_traction(mesh, chain, bc.traction);
    }
  }
  const double tol = 1e-9 * grid.cell_size;
  for (const auto& pc : bc.points) {
    const Vec2 x = grid.vertices[pc.vertex];
    int node = -1;
    for (int n = 0; n < mesh.n_nodes() && node < 0; ++n)
      if ((mesh.nodes[n] - x).lpNorm<Eigen::Infinity>() <= tol) node = n;
    if (node < 0) throw std::logic_error("point constraint vertex not found in the fine mesh");
    fixed.emplace(dof_of(node, pc.component), bc.dirichlet_value(x)[pc.component]);
  }
  if (fixed.empty()) throw SolverError("full-order problem has no Dirichlet constraints");
  std::vector<int> dofs;
  Vector values(static_cast<Eigen::Index>(fixed.size()));
  for (auto [d, v] : fixed) {
    values[static_cast<Eigen::Index>(dofs.size())] = v;
    dofs.push_back(d);
  }
  const ConstrainedSolver solver(k, dofs);
  out.u = solver.solve(load, values);
  return out;
}

RomSolution solve_reduced(const RceOperator& op, const CoarseGrid& grid, const GlobalBc& bc,
                          const GlobalEdgeModes& modes, std::span<const BasisMatrix> bases, Exec exec) {
  if (static_cast<int>(bases.size()) != grid.n_cells()) throw std::invalid_argument("one basis per cell required");
  RomSolution out;
  out.dofs = build_dof_map(grid, modes.counts());
  std::vector<ReducedLocal> locals(grid.n_cells());
  for_each_index(grid.n_cells(), exec, [&](long c) {
    const int cell = static_cast<int>(c);
    locals[c] = reduce_local(op.stiffness(), cell_load(op.mesh(), grid, bc, cell), bases[c], cell);
  });
  out.system = assemble_global(locals, out.dofs);
  out.constraints = project_dirichlet(op.mesh(), grid, bc, out.dofs, modes);
  out.u = solve_rom(out.system, out.constraints);
  out.cell_fields.resize(grid.n_cells());
  for (int c = 0; c < grid.n_cells(); ++c) out.cell_fields[c] = reconstruct(out.u, out.dofs, bases[c], c);
  return out;
}

}  // namespace lmor
