#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "lmor/rangefinder.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

using namespace lmor;

namespace {

FineMesh type1(int n_verts) {
  RceGeometry g;
  g.side_length = 20.0;
  g.n_verts_per_edge = n_verts;
  g.aggregates.push_back({Vec2(10.0, 10.0), 6.0});
  return build_rce_mesh(g);
}

const Material kTwoPhase = two_phase_material(30000.0, 60000.0, 0.2, PlaneModel::strain);
const Material kHomogeneous = two_phase_material(30000.0, 30000.0, 0.2, PlaneModel::strain);

struct Setup {
  CoarseGrid grid;
  GlobalBc bc;
  std::vector<Configuration> configs;
};

Setup interior_setup() {
  Setup s;
  s.grid = build_coarse_grid({GridShape::rectangle, 5, 5}, 20.0);
  s.bc = free_bc(s.grid);
  s.bc.ignore_in_oversampling = true;
  s.configs = classify_configurations(s.grid, s.bc);
  return s;
}

// beam-like: left edge clamped, loaded right edge
Setup cantilever_setup() {
  Setup s;
  s.grid = build_coarse_grid({GridShape::rectangle, 4, 2}, 20.0);
  s.bc = free_bc(s.grid);
  assign_edges(s.bc, s.grid, [](const Vec2& x) { return x.x() < 1e-9; }, {BcType::dirichlet, {true, true}});
  assign_edges(s.bc, s.grid, [](const Vec2& x) { return x.x() > 80.0 - 1e-9; }, {BcType::neumann, {true, true}});
  s.bc.traction = [](const Vec2&) { return Vec2(0.0, -1.0); };
  s.configs = classify_configurations(s.grid, s.bc);
  return s;
}

Vector source_field(const TransferOperator& op, const std::function<Vec2(const Vec2&)>& f) {
  Vector g(op.source_dim());
  for (int k = 0; k < op.source_dim(); ++k) {
    const int d = op.source()[k];
    g[k] = f(op.patch().mesh.nodes[d / kDim])[d % kDim];
  }
  return g;
}

Matrix dense_operator(const TransferOperator& op) {
  return op.apply(Matrix(Matrix::Identity(op.source_dim(), op.source_dim())), true, Exec::parallel);
}

}  // namespace

TEST_CASE("estimator factor") {
  CHECK(estimator_factor(1.0, 20, 1e-16 / 240.0) == doctest::Approx(6.5961352414006950424).epsilon(1e-12));
  CHECK(estimator_factor(0.5, 1, std::erf(1.0)) == doctest::Approx(1.0).epsilon(1e-12));
  const double c = estimator_factor(0.3, 10, 1e-8);
  CHECK(estimator_factor(1.2, 10, 1e-8) == doctest::Approx(0.5 * c).epsilon(1e-12));
  CHECK(estimator_factor(1.0, 20, 1e-10) < estimator_factor(1.0, 20, 1e-12));
  CHECK_THROWS_AS(estimator_factor(0.0, 20, 1e-10), std::invalid_argument);
  CHECK_THROWS_AS(estimator_factor(1.0, 0, 1e-10), std::invalid_argument);
  CHECK_THROWS_AS(estimator_factor(1.0, 5, 1.0), std::invalid_argument);
}

TEST_CASE("range finder parameters") {
  RangeFinderParams p;
  CHECK_NOTHROW(p.validate());
  p.tol = 0.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = {};
  p.n_t = 0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = {};
  p.eps_algofail = 1.5;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

TEST_CASE("random streams") {
  auto a = make_stream(42, kTrainingStream);
  auto b = make_stream(42, kTrainingStream);
  auto c = make_stream(42, kTestVectorStream);
  const Vector va = random_boundary_vector(a, 50);
  CHECK(va == random_boundary_vector(b, 50));
  CHECK(va != random_boundary_vector(c, 50));
  CHECK_THROWS_AS(random_boundary_vector(a, 0), std::invalid_argument);
}

TEST_CASE("training kind names") {
  CHECK(training_kind_from_string(to_string(TrainingKind::soi)) == TrainingKind::soi);
  CHECK(training_kind_from_string("random") == TrainingKind::random);
  CHECK_THROWS_AS(training_kind_from_string("gaussian"), std::invalid_argument);
}

TEST_CASE("transfer operator dimensions") {
  const auto s = interior_setup();
  REQUIRE(s.configs.size() == 1);
  const FineMesh rce = type1(5);
  const TransferOperator op(s.configs[0], rce, kTwoPhase, s.bc);
  // 12 patch boundary edges, 8 nodes each (4 elements, quadratic)
  CHECK(op.source_dim() == 2 * 12 * 8);
  CHECK(op.range_dim() == rce.n_dofs());
  CHECK(op.rank_bound() == std::min(op.source_dim(), op.range_dim()));
  CHECK_FALSE(op.has_affine_part());
  CHECK(op.lambda_min_source() > 0.0);
  const Matrix m(op.source_gramian());
  CHECK((m - m.transpose()).norm() <= 1e-14 * m.norm());
}

TEST_CASE("transfer operator is linear") {
  const auto s = interior_setup();
  const FineMesh rce = type1(5);
  const TransferOperator op(s.configs[0], rce, kTwoPhase, s.bc);
  auto rng = make_stream(7, 9);
  const Vector g1 = random_boundary_vector(rng, op.source_dim());
  const Vector g2 = random_boundary_vector(rng, op.source_dim());
  const Vector lhs = op.apply(Vector(2.5 * g1 - 0.75 * g2));
  const Vector rhs = 2.5 * op.apply(g1) - 0.75 * op.apply(g2);
  CHECK((lhs - rhs).norm() <= 1e-10 * rhs.norm());
  CHECK_THROWS_AS(op.apply(Vector(Vector::Ones(3))), std::invalid_argument);
}

TEST_CASE("transfer operator reproduces linear fields") {
  const auto s = interior_setup();
  const FineMesh rce = type1(5);
  const TransferOperator op(s.configs[0], rce, kHomogeneous, s.bc);
  const auto f = [](const Vec2& x) { return Vec2(1e-3 * x.x() - 2e-4 * x.y() + 0.1, 3e-4 * x.x() + 5e-4 * x.y()); };
  const Vector u = op.apply(source_field(op, f));
  const Vec2 shift = s.configs[0].grid->cell_origin(s.configs[0].target_cell);
  double worst = 0.0;
  for (int n = 0; n < rce.n_nodes(); ++n) {
    const Vec2 exact = f(rce.nodes[n] + shift);
    worst = std::max(worst, (Vec2(u[dof_of(n, 0)], u[dof_of(n, 1)]) - exact).norm());
  }
  CHECK(worst <= 1e-10);
}

TEST_CASE("affine part from global boundary data") {
  const auto s = cantilever_setup();
  const FineMesh rce = type1(5);
  int affine = 0;
  int clamped_with_dirichlet = 0;
  for (const auto& cfg : s.configs) {
    const TransferOperator op(cfg, rce, kTwoPhase, s.bc);
    affine += op.has_affine_part() ? 1 : 0;
    // Dirichlet wins at junctions: no source DoF on the clamped line
    for (int d : op.source()) CHECK(op.patch().mesh.nodes[d / kDim].x() > 1e-9);
    bool clamped = false;
    for (const auto& spec : cfg.bc_spec) clamped = clamped || spec.role == EdgeRole::dirichlet;
    if (clamped) {
      ++clamped_with_dirichlet;
      const Vector g = Vector::Zero(op.source_dim());
      const Vector full = op.solve_patch(g, true);
      CHECK(full.norm() == 0.0);
    }
  }
  CHECK(affine > 0);
  CHECK(clamped_with_dirichlet > 0);
}

TEST_CASE("pod of identical snapshots") {
  const FineMesh rce = type1(5);
  const SparseMatrix a = assemble(rce, kTwoPhase);
  SparseMatrix g(rce.n_dofs(), rce.n_dofs());
  g.setIdentity();
  Vector s = Vector::LinSpaced(rce.n_dofs(), -1.0, 2.0);
  Matrix snaps(rce.n_dofs(), 2);
  snaps << s, s;
  const auto r = pod(snaps, g, 1e-12);
  REQUIRE(r.n_modes() == 1);
  CHECK(r.eigenvalues[0] == doctest::Approx(2.0 * s.squaredNorm()).epsilon(1e-12));
  CHECK(std::abs(r.eigenvalues[1]) <= 1e-10 * r.eigenvalues[0]);
  CHECK(std::abs(std::abs(r.modes.col(0).dot(s)) - s.norm()) <= 1e-10 * s.norm());
  CHECK_THROWS_AS(pod(Matrix::Zero(rce.n_dofs(), 2), g, 1e-6), std::invalid_argument);
}

TEST_CASE("pod modes are orthonormal and ordered") {
  const FineMesh rce = type1(5);
  const SparseMatrix a = assemble(rce, kTwoPhase);
  SparseMatrix g = a;
  g += SparseMatrix(Matrix::Identity(rce.n_dofs(), rce.n_dofs()).sparseView());
  auto rng = make_stream(3, 4);
  Matrix snaps(rce.n_dofs(), 30);
  for (int j = 0; j < 30; ++j) snaps.col(j) = random_boundary_vector(rng, rce.n_dofs()) / (1.0 + j * j);
  const auto r = pod(snaps, g, 1e-3);
  REQUIRE(r.n_modes() >= 1);
  REQUIRE(r.n_modes() < 30);
  const Matrix gram = r.modes.transpose() * (g * r.modes);
  CHECK((gram - Matrix::Identity(r.n_modes(), r.n_modes())).cwiseAbs().maxCoeff() <= 1e-10);
  for (Eigen::Index k = 1; k < r.eigenvalues.size(); ++k) CHECK(r.eigenvalues[k] <= r.eigenvalues[k - 1]);
  const double tail = r.eigenvalues.tail(r.eigenvalues.size() - r.n_modes()).sum();
  CHECK(tail <= 1e-3 * r.eigenvalues.sum());
  CHECK(pod(snaps, g, 0.0, 4).n_modes() == 4);
}

TEST_CASE("range finder meets the tolerance against the dense operator") {
  const auto s = interior_setup();
  const FineMesh rce = type1(5);
  const TransferOperator op(s.configs[0], rce, kTwoPhase, s.bc);
  RangeFinderParams p;
  p.tol = 0.5;
  const auto snaps = compute_snapshots(op, p, Matrix(), 11);
  CHECK(snaps.estimate <= p.tol);
  CHECK(snaps.n_soi == 0);
  CHECK(snaps.n_random == snaps.size());
  CHECK(snaps.history.size() == static_cast<std::size_t>(snaps.size()) + 1);

  const SparseMatrix& a = op.range_gramian();
  const Matrix b = snaps.range_basis;
  CHECK((b.transpose() * (a * b) - Matrix::Identity(b.cols(), b.cols())).cwiseAbs().maxCoeff() <= 1e-10);

  const Matrix t = dense_operator(op);
  Matrix e = t - b * (b.transpose() * (a * t));
  const Matrix lhs = e.transpose() * (a * e);
  const Matrix rhs(op.source_gramian());
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> ges(0.5 * (lhs + lhs.transpose()), rhs, Eigen::EigenvaluesOnly);
  const double true_norm = std::sqrt(std::max(0.0, ges.eigenvalues().maxCoeff()));
  MESSAGE("true error " << true_norm << " estimate " << snaps.estimate);
  CHECK(true_norm <= p.tol);
  CHECK(true_norm <= snaps.estimate);
}

TEST_CASE("range finder is deterministic and thread independent") {
  const auto s = interior_setup();
  const FineMesh rce = type1(4);
  const TransferOperator op(s.configs[0], rce, kTwoPhase, s.bc);
  RangeFinderParams p;
  p.tol = 1e-1;
  const auto a = compute_snapshots(op, p, Matrix(), 5, Exec::serial);
  const auto b = compute_snapshots(op, p, Matrix(), 5, Exec::parallel);
  const auto c = compute_snapshots(op, p, Matrix(), 6, Exec::parallel);
  CHECK(a.snapshots == b.snapshots);
  CHECK(a.history == b.history);
  CHECK(a.snapshots.cols() > 0);
  CHECK((c.snapshots.cols() != a.snapshots.cols() || c.snapshots != a.snapshots));
}

TEST_CASE("SoI training vectors come first") {
  const auto s = cantilever_setup();
  const FineMesh rce = type1(4);
  const Phase hom = homogenized_phase(rce, kTwoPhase);
  const Vector coarse = solve_coarse_problem(s.grid, s.bc, hom);
  for (const auto& cfg : s.configs) {
    const TransferOperator op(cfg, rce, kTwoPhase, s.bc);
    const auto soi = soi_training_set(op, cfg, s.grid, coarse);
    REQUIRE(soi.samples.cols() == static_cast<Eigen::Index>(cfg.members.size()));
    REQUIRE(soi.training.cols() >= 1);
    CHECK(soi.training.cols() <= soi.samples.cols());
    RangeFinderParams p;
    p.tol = 1e-1;
    const auto snaps = compute_snapshots(op, p, soi.training, 1);
    const Eigen::Index lead = op.has_affine_part() ? 1 : 0;
    if (lead) CHECK(snaps.tags[0] == SampleTag::affine);
    const auto n_soi = std::min<Eigen::Index>(soi.training.cols(), snaps.size() - lead);
    for (Eigen::Index k = 0; k < n_soi; ++k) CHECK(snaps.tags[lead + k] == SampleTag::soi);
    CHECK(snaps.n_soi == n_soi);
  }
}

TEST_CASE("affine particular solution is the first snapshot") {
  const auto s = cantilever_setup();
  const FineMesh rce = type1(4);
  int loaded = 0;
  for (const auto& cfg : s.configs) {
    const TransferOperator op(cfg, rce, kTwoPhase, s.bc);
    if (!op.has_affine_part()) continue;
    ++loaded;
    RangeFinderParams p;
    p.tol = 1e-1;
    const auto snaps = compute_snapshots(op, p, Matrix(), 3);
    REQUIRE(snaps.size() >= 1);
    CHECK(snaps.tags[0] == SampleTag::affine);
    const Vector u0 = op.apply(Vector(Vector::Zero(op.source_dim())), false);
    CHECK(snaps.snapshots.col(0) == u0);
    CHECK(u0.norm() > 0.0);
    CHECK(snaps.n_random == snaps.size() - 1);
  }
  CHECK(loaded > 0);
}

TEST_CASE("SoI of a rigid translation has one mode") {
  const auto s = interior_setup();
  const FineMesh rce = type1(4);
  const TransferOperator op(s.configs[0], rce, kTwoPhase, s.bc);
  Vector coarse(2 * s.grid.n_vertices());
  for (int v = 0; v < s.grid.n_vertices(); ++v) {
    coarse[dof_of(v, 0)] = 0.3;
    coarse[dof_of(v, 1)] = -0.1;
  }
  const auto soi = soi_training_set(op, s.configs[0], s.grid, coarse);
  CHECK(soi.samples.cols() == s.grid.n_cells());
  CHECK(soi.training.cols() == 1);
  const Vector u = op.apply(Vector(soi.training.col(0)), false);
  const double scale = std::sqrt(static_cast<double>(s.grid.n_cells()));
  for (int n = 0; n < rce.n_nodes(); ++n) {
    CHECK(std::abs(std::abs(u[dof_of(n, 0)]) - 0.3 * scale) <= 1e-9);
    CHECK(std::abs(std::abs(u[dof_of(n, 1)]) - 0.1 * scale) <= 1e-9);
  }
}

TEST_CASE("edge POD pools opposite interior sides") {
  const auto s = interior_setup();
  const FineMesh rce = type1(5);
  const TransferOperator op(s.configs[0], rce, kTwoPhase, s.bc);
  RangeFinderParams p;
  p.tol = 1e-1;
  const auto snaps = compute_snapshots(op, p, Matrix(), 2);
  const auto pooled = edge_basis_from_snapshots(rce, snaps.snapshots, {true, true});
  CHECK(pooled.modes[Side::bottom] == pooled.modes[Side::top]);
  CHECK(pooled.modes[Side::left] == pooled.modes[Side::right]);
  const auto split = edge_basis_from_snapshots(rce, snaps.snapshots, {false, false});
  CHECK(split.modes.count(Side::bottom) >= 1);
  for (Side side : kSides) {
    const Matrix& m = pooled.modes[side];
    REQUIRE(m.cols() >= 1);
    CHECK(m.topRows(2).norm() == 0.0);
    CHECK(m.bottomRows(2).norm() == 0.0);
    const SparseMatrix mass = chain_mass_matrix(rce, rce.boundary(side));
    const Matrix gram = m.transpose() * (mass * m);
    CHECK((gram - Matrix::Identity(m.cols(), m.cols())).cwiseAbs().maxCoeff() <= 1e-9);
    for (Eigen::Index k = 1; k < pooled.eigenvalues[static_cast<int>(side)].size(); ++k)
      CHECK(pooled.eigenvalues[static_cast<int>(side)][k] <= pooled.eigenvalues[static_cast<int>(side)][k - 1]);
  }
  const auto capped = edge_basis_from_snapshots(rce, snaps.snapshots, {true, true}, 1e-6, 2);
  CHECK(capped.modes.count(Side::right) <= 2);
  CHECK_THROWS_AS(edge_basis_from_snapshots(rce, Matrix(rce.n_dofs(), 0), {true, true}), std::invalid_argument);
}

TEST_CASE("spectral basis") {
  const FineMesh rce = type1(4);
  const SparseMatrix a = assemble(rce, kTwoPhase);
  auto rng = make_stream(1, 1);
  Matrix snaps(rce.n_dofs(), 6);
  for (int j = 0; j < 5; ++j) snaps.col(j) = random_boundary_vector(rng, rce.n_dofs());
  snaps.col(5) = 2.0 * snaps.col(1) - snaps.col(3);
  const Matrix b = spectral_basis(snaps, a);
  REQUIRE(b.cols() == 5);
  CHECK((b.transpose() * (a * b) - Matrix::Identity(5, 5)).cwiseAbs().maxCoeff() <= 1e-10);
  const Vector r = project_out(snaps.col(5), b, a);
  CHECK(energy_norm(r, a) <= 1e-9 * energy_norm(snaps.col(5), a));
}
