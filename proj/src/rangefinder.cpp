#include "lmor/rangefinder.hpp"

#include <boost/math/special_functions/erf.hpp>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace lmor {

// ---------------------------------------------------------------------------
// Transfer operator
// ---------------------------------------------------------------------------

namespace {

int find_node(const FineMesh& mesh, const Vec2& x, double tol) {
  for (int n = 0; n < mesh.n_nodes(); ++n)
    if ((mesh.nodes[n] - x).lpNorm<Eigen::Infinity>() <= tol) return n;
  return -1;
}

// Euclidean-orthonormal basis of the rigid motions of a mesh.
Matrix rigid_modes(const FineMesh& mesh) {
  Matrix r = Matrix::Zero(mesh.n_dofs(), 3);
  for (int n = 0; n < mesh.n_nodes(); ++n) {
    const Vec2& x = mesh.nodes[n];
    r(dof_of(n, 0), 0) = 1.0;
    r(dof_of(n, 1), 1) = 1.0;
    r(dof_of(n, 0), 2) = -x.y();
    r(dof_of(n, 1), 2) = x.x();
  }
  Eigen::HouseholderQR<Matrix> qr(r);
  return qr.householderQ() * Matrix::Identity(mesh.n_dofs(), 3);
}

}  // namespace

TransferOperator::TransferOperator(const Configuration& cfg, const FineMesh& rce, const Material& material,
                                   const GlobalBc& bc, Exec exec)
    : patch_(compose_patch(*cfg.grid, cfg.patch_cells, rce)), target_(cfg.target_cell) {
  const CoarseGrid& grid = *cfg.grid;
  const SparseMatrix k = assemble(patch_.mesh, material, exec);
  load_ = Vector::Zero(patch_.mesh.n_dofs());

  std::map<int, double> fixed;
  if (cfg.uses_global_bc) {
    for (const auto& spec : cfg.bc_spec) {
      const auto& chain = patch_.edge_nodes.at(spec.coarse_edge);
      const auto& ebc = bc.edge(spec.coarse_edge);
      if (spec.role == EdgeRole::dirichlet) {
        for (int n : chain) {
          const Vec2 g = bc.dirichlet_value(patch_.mesh.nodes[n]);
          for (int c = 0; c < kDim; ++c)
            if (ebc.fixed[c]) fixed[dof_of(n, c)] = g[c];
        }
      } else if (spec.role == EdgeRole::neumann && bc.traction) {
        load_ += assemble_traction(patch_.mesh, chain, bc.traction);
      }
    }
    const double tol = 1e-9 * grid.cell_size;
    for (const auto& pc : bc.points) {
      const Vec2 x = grid.vertices[pc.vertex];
      const int n = find_node(patch_.mesh, x, tol);
      if (n >= 0) fixed[dof_of(n, pc.component)] = bc.dirichlet_value(x)[pc.component];
    }
  }

  for (int d : patch_.gamma_mu_dofs)
    if (!fixed.count(d)) source_.push_back(d);
  if (source_.empty()) throw std::invalid_argument("configuration has no training boundary");

  fixed_values_.resize(static_cast<Eigen::Index>(fixed.size()));
  for (auto [d, v] : fixed) {
    fixed_values_[static_cast<Eigen::Index>(fixed_.size())] = v;
    fixed_.push_back(d);
  }
  affine_ = load_.norm() > 0.0 || fixed_values_.norm() > 0.0;

  std::vector<int> constrained = source_;
  constrained.insert(constrained.end(), fixed_.begin(), fixed_.end());
  solver_.emplace(k, constrained);

  std::vector<std::vector<int>> chains;
  for (int e : patch_.gamma_mu_edges) chains.push_back(patch_.edge_nodes.at(e));
  source_gramian_ = boundary_mass_matrix(patch_.mesh, chains, source_);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(Matrix(source_gramian_), Eigen::EigenvaluesOnly);
  lambda_min_ = eig.eigenvalues()[0];
  if (!(lambda_min_ > 0.0)) throw std::logic_error("source Gramian is not positive definite");
  range_gramian_ = assemble(rce, material, exec);
  range_kernel_ = rigid_modes(rce);
}

Vector TransferOperator::solve_patch(const Vector& g, bool homogeneous) const {
  if (g.size() != source_dim()) throw std::invalid_argument("boundary data does not match the training boundary");
  Vector values(static_cast<Eigen::Index>(source_.size() + fixed_.size()));
  values.head(g.size()) = g;
  if (homogeneous)
    values.tail(fixed_values_.size()).setZero();
  else
    values.tail(fixed_values_.size()) = fixed_values_;
  return solver_->solve(homogeneous ? Vector() : load_, values);
}

Vector TransferOperator::apply(const Vector& g, bool homogeneous) const {
  return patch_.restrict_to_cell(solve_patch(g, homogeneous), target_);
}

Matrix TransferOperator::apply(const Matrix& g, bool homogeneous, Exec exec) const {
  Matrix out(range_dim(), g.cols());
  for_each_index(g.cols(), exec, [&](long j) { out.col(j) = apply(Vector(g.col(j)), homogeneous); });
  return out;
}

// ---------------------------------------------------------------------------
// Training data
// ---------------------------------------------------------------------------

std::string to_string(TrainingKind kind) { return kind == TrainingKind::soi ? "soi" : "random"; }

TrainingKind training_kind_from_string(const std::string& name) {
  if (name == "soi") return TrainingKind::soi;
  if (name == "random") return TrainingKind::random;
  throw std::invalid_argument("unknown training set: " + name);
}

Vector random_boundary_vector(std::mt19937_64& rng, int dim) {
  if (dim < 1) throw std::invalid_argument("random vector needs a positive dimension");
  std::normal_distribution<double> normal;
  Vector v(dim);
  for (auto& x : v) x = normal(rng);
  return v;
}

std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

namespace {

// Modified Gram-Schmidt, two passes. Returns the norm left after
// orthogonalization.
double orthogonalize(Vector& v, const Matrix& basis, const Matrix& g_basis) {
  for (int pass = 0; pass < 2; ++pass) {
    for (Eigen::Index j = 0; j < basis.cols(); ++j) v -= g_basis.col(j).dot(v) * basis.col(j);
  }
  return v.norm();
}

double g_norm(const Vector& v, const SparseMatrix& g) { return std::sqrt(std::max(0.0, v.dot(g * v))); }


}  // namespace

PodResult pod(const Matrix& snapshots, const SparseMatrix& gramian, double rel_tol, int max_modes) {
  if (snapshots.cols() == 0 || snapshots.norm() == 0.0) throw std::invalid_argument("POD of an all-zero snapshot set");
  if (gramian.rows() != snapshots.rows()) throw std::invalid_argument("POD: Gramian dimension mismatch");
  if (rel_tol < 0.0) throw std::invalid_argument("POD tolerance must be non-negative");
  const Matrix gs = gramian * snapshots;
  Matrix c = snapshots.transpose() * gs;
  c = 0.5 * (c + c.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(c);
  const Eigen::Index n = c.rows();

  PodResult out;
  out.eigenvalues.resize(n);
  Matrix vecs(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    out.eigenvalues[k] = std::max(0.0, eig.eigenvalues()[n - 1 - k]);
    vecs.col(k) = eig.eigenvectors().col(n - 1 - k);
  }
  const double total = out.eigenvalues.sum();
  const double floor = 1e-12 * out.eigenvalues[0];
  Eigen::Index keep = 0;
  double tail = total;
  while (keep < n && tail > rel_tol * total && out.eigenvalues[keep] > floor) {
    tail -= out.eigenvalues[keep];
    ++keep;
  }
  if (max_modes >= 0) keep = std::min<Eigen::Index>(keep, max_modes);

  Matrix modes(snapshots.rows(), keep);
  Matrix g_modes(snapshots.rows(), keep);
  Eigen::Index accepted = 0;
  for (Eigen::Index k = 0; k < keep; ++k) {
    Vector m = snapshots * vecs.col(k) / std::sqrt(out.eigenvalues[k]);
    const double before = g_norm(m, gramian);
    Vector gm = gramian * m;
    for (int pass = 0; pass < 2; ++pass) {
      for (Eigen::Index j = 0; j < accepted; ++j) m -= g_modes.col(j).dot(m) * modes.col(j);
    }
    const double after = g_norm(m, gramian);
    if (!(after > 1e-8 * before)) break;
    m /= after;
    modes.col(accepted) = m;
    g_modes.col(accepted) = gramian * m;
    ++accepted;
  }
  out.modes = modes.leftCols(accepted);
  out.coefficients = vecs.leftCols(accepted);
  return out;
}

SoiData soi_training_set(const TransferOperator& op, const Configuration& cfg, const CoarseGrid& global,
                         const Vector& coarse_solution, MacroFamily family, double pod_tol) {
  const auto& mesh = op.patch().mesh;
  Vec2 lo = mesh.nodes.front();
  Vec2 hi = lo;
  for (const auto& x : mesh.nodes) {
    lo = lo.cwiseMin(x);
    hi = hi.cwiseMax(x);
  }
  const Vec2 size = hi - lo;
  const Vec2 target_origin = cfg.grid->cell_origin(cfg.target_cell);
  const int n_macro = macro_node_count(family);

  // shape values at the source nodes
  const auto& src = op.source();
  Matrix shapes(static_cast<Eigen::Index>(src.size()), n_macro);
  for (std::size_t k = 0; k < src.size(); ++k) {
    const Vec2 x = mesh.nodes[src[k] / kDim];
    const double xi = 2.0 * (x.x() - lo.x()) / size.x() - 1.0;
    const double eta = 2.0 * (x.y() - lo.y()) / size.y() - 1.0;
    for (int i = 0; i < n_macro; ++i) shapes(static_cast<Eigen::Index>(k), i) = macro_shape(family, i, xi, eta);
  }

  SoiData out;
  out.samples.resize(op.source_dim(), static_cast<Eigen::Index>(cfg.members.size()));
  for (std::size_t m = 0; m < cfg.members.size(); ++m) {
    const Vec2 offset = global.cell_origin(cfg.members[m]) - target_origin;
    std::vector<Vec2> alpha(n_macro);
    for (int i = 0; i < n_macro; ++i) {
      const Vec2 r = macro_node(i);
      const Vec2 x = lo + Vec2(0.5 * (r.x() + 1.0) * size.x(), 0.5 * (r.y() + 1.0) * size.y()) + offset;
      alpha[i] = evaluate_coarse_field(global, coarse_solution, x);
    }
    for (std::size_t k = 0; k < src.size(); ++k) {
      const int comp = src[k] % kDim;
      double v = 0.0;
      for (int i = 0; i < n_macro; ++i) v += shapes(static_cast<Eigen::Index>(k), i) * alpha[i][comp];
      out.samples(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(m)) = v;
    }
  }
  if (out.samples.norm() == 0.0) {
    out.training.resize(op.source_dim(), 0);
    return out;
  }
  out.pod = pod(out.samples, op.source_gramian(), pod_tol);
  out.training = out.samples * out.pod.coefficients;
  return out;
}

// ---------------------------------------------------------------------------
// Range finder
// ---------------------------------------------------------------------------

void RangeFinderParams::validate() const {
  if (!(tol > 0.0)) throw std::invalid_argument("range finder tolerance must be positive");
  if (!(eps_algofail > 0.0 && eps_algofail < 1.0)) throw std::invalid_argument("failure probability must be in (0, 1)");
  if (n_t < 1) throw std::invalid_argument("need at least one test vector");
  if (stall_factor < 1) throw std::invalid_argument("stall window must be positive");
}

double estimator_factor(double lambda_min, int n_t, double eps_testfail) {
  if (!(lambda_min > 0.0)) throw std::invalid_argument("smallest source eigenvalue must be positive");
  if (n_t < 1) throw std::invalid_argument("need at least one test vector");
  const double arg = std::pow(eps_testfail, 1.0 / n_t);
  if (!(arg > 0.0 && arg < 1.0)) throw std::invalid_argument("inverse error function argument outside (0, 1)");
  return 1.0 / (std::sqrt(2.0 * lambda_min) * boost::math::erf_inv(arg));
}

Vector project_out(const Vector& u, const Matrix& basis, const SparseMatrix& energy) {
  Vector v = u;
  const Matrix ab = energy * basis;
  orthogonalize(v, basis, ab);
  return v;
}

SnapshotSet compute_snapshots(const TransferOperator& op, const RangeFinderParams& params, const Matrix& soi_training,
                              std::uint64_t seed, Exec exec) {
  params.validate();
  if (soi_training.cols() > 0 && soi_training.rows() != op.source_dim())
    throw std::invalid_argument("SoI training vectors do not match the training boundary");
  const SparseMatrix& a = op.range_gramian();
  const int dim = op.source_dim();

  auto test_rng = make_stream(seed, kTestVectorStream);
  auto train_rng = make_stream(seed, kTrainingStream);

  SnapshotSet out;
  Matrix g_test(dim, params.n_t);
  for (int j = 0; j < params.n_t; ++j) g_test.col(j) = random_boundary_vector(test_rng, dim);
  Matrix tests = op.apply(g_test, true, exec);
  const Matrix& rigid = op.range_kernel();
  auto deflate = [&](Vector& v) { v -= rigid * (rigid.transpose() * v); };
  for (Eigen::Index j = 0; j < tests.cols(); ++j) {
    Vector t = tests.col(j);
    deflate(t);
    tests.col(j) = t;
  }

  const double eps_testfail = params.eps_algofail / op.rank_bound();
  out.c_est = estimator_factor(op.lambda_min_source(), params.n_t, eps_testfail);

  auto estimate = [&]() {
    double worst = 0.0;
    for (Eigen::Index j = 0; j < tests.cols(); ++j) worst = std::max(worst, g_norm(tests.col(j), a));
    return worst * out.c_est;
  };

  Matrix basis(op.range_dim(), 0);
  Matrix a_basis(op.range_dim(), 0);
  std::vector<Vector> snaps;
  double est = estimate();
  out.history.push_back(est);
  double best = est;
  int since_progress = 0;
  Eigen::Index next_soi = 0;

  auto accept = [&](const Vector& u) {
    snaps.push_back(u);
    const double un = g_norm(u, a);
    Vector v = u;
    deflate(v);
    orthogonalize(v, basis, a_basis);
    const double vn = g_norm(v, a);
    if (un > 0.0 && vn > 1e-10 * un) {
      v /= vn;
      basis.conservativeResize(Eigen::NoChange, basis.cols() + 1);
      a_basis.conservativeResize(Eigen::NoChange, a_basis.cols() + 1);
      basis.col(basis.cols() - 1) = v;
      a_basis.col(a_basis.cols() - 1) = a * v;
      for_each_index(tests.cols(), exec, [&](long j) {
        Vector t = tests.col(j);
        orthogonalize(t, basis, a_basis);
        tests.col(j) = t;
      });
    }
    est = estimate();
    out.history.push_back(est);
  };

  if (op.has_affine_part()) {
    accept(op.apply(Vector(Vector::Zero(dim)), false));
    out.tags.push_back(SampleTag::affine);
    best = est;
  }

  while (est > params.tol) {
    Vector u;
    if (next_soi < soi_training.cols()) {
      u = op.apply(Vector(soi_training.col(next_soi++)), false);
      out.tags.push_back(SampleTag::soi);
      ++out.n_soi;
    } else {
      u = op.apply(random_boundary_vector(train_rng, dim), true);
      out.tags.push_back(SampleTag::random);
      ++out.n_random;
    }
    accept(u);
    if (est < best * (1.0 - params.stall_reduction)) {
      best = est;
      since_progress = 0;
    } else if (++since_progress >= params.stall_factor * params.n_t) {
      throw std::runtime_error("range finder stalled: estimator " + std::to_string(est) + " above tolerance " +
                               std::to_string(params.tol) + " after " + std::to_string(snaps.size()) + " draws");
    }
  }

  out.snapshots.resize(op.range_dim(), static_cast<Eigen::Index>(snaps.size()));
  for (std::size_t j = 0; j < snaps.size(); ++j) out.snapshots.col(static_cast<Eigen::Index>(j)) = snaps[j];
  out.test_vectors = tests;
  out.range_basis = basis;
  out.estimate = est;
  return out;
}

// ---------------------------------------------------------------------------

EdgePodResult edge_basis_from_snapshots(const FineMesh& rce, const Matrix& snapshots, std::array<bool, 2> pool_pairs,
                                        double rel_tol, int max_modes) {
  if (snapshots.cols() == 0) throw std::invalid_argument("edge POD needs at least one snapshot");
  std::array<std::vector<Vector>, 4> traces;
  for (Eigen::Index j = 0; j < snapshots.cols(); ++j) {
    const auto tr = restrict_to_edges(rce, fine_part(rce, snapshots.col(j)));
    for (int s = 0; s < 4; ++s) traces[s].push_back(tr[s]);
  }

  EdgePodResult out;
  auto run = [&](const std::vector<int>& sides) {
    std::vector<const Vector*> pool;
    for (int s : sides)
      for (const auto& t : traces[s]) pool.push_back(&t);
    const auto rows = pool.front()->size();
    Matrix s_mat(rows, static_cast<Eigen::Index>(pool.size()));
    for (std::size_t j = 0; j < pool.size(); ++j) s_mat.col(static_cast<Eigen::Index>(j)) = *pool[j];
    const SparseMatrix mass = chain_mass_matrix(rce, rce.boundary(static_cast<Side>(sides.front())));
    Matrix modes(rows, 0);
    Vector ev;
    if (s_mat.norm() > 0.0) {
      auto r = pod(s_mat, mass, rel_tol, max_modes);
      modes = std::move(r.modes);
      ev = std::move(r.eigenvalues);
      // exact zero ends: corner values were subtracted exactly
      modes.topRows(kDim).setZero();
      modes.bottomRows(kDim).setZero();
    }
    for (int s : sides) {
      out.modes.modes[s] = modes;
      out.eigenvalues[s] = ev;
    }
  };
  if (pool_pairs[0]) {
    run({0, 2});
  } else {
    run({0});
    run({2});
  }
  if (pool_pairs[1]) {
    run({1, 3});
  } else {
    run({1});
    run({3});
  }
  return out;
}

Matrix spectral_basis(const Matrix& snapshots, const SparseMatrix& energy, double drop_tol) {
  if (snapshots.cols() == 0) throw std::invalid_argument("spectral basis needs at least one snapshot");
  Matrix basis(snapshots.rows(), 0);
  Matrix a_basis(snapshots.rows(), 0);
  for (Eigen::Index j = 0; j < snapshots.cols(); ++j) {
    Vector v = snapshots.col(j);
    const double before = g_norm(v, energy);
    if (!(before > 0.0)) continue;
    orthogonalize(v, basis, a_basis);
    const double after = g_norm(v, energy);
    if (!(after > drop_tol * before)) continue;
    v /= after;
    basis.conservativeResize(Eigen::NoChange, basis.cols() + 1);
    a_basis.conservativeResize(Eigen::NoChange, a_basis.cols() + 1);
    basis.col(basis.cols() - 1) = v;
    a_basis.col(a_basis.cols() - 1) = energy * v;
  }
  return basis;
}

}  // namespace lmor
