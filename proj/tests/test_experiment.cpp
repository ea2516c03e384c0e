#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "lmor/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

using namespace lmor;

namespace {

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("lmor_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

ExperimentConfig small_beam(double ratio) {
  ExperimentConfig ec;
  ec.experiment = ExperimentKind::beam;
  ec.nx = 4;
  ec.ny = 2;
  ec.rce = rce_preset("type1", 5);
  ec.plane = PlaneModel::stress;
  ec.e_aggregate = ratio * ec.e_matrix;
  ec.n_mpe = {1, 2, 4};
  ec.rangefinder.tol = 1e-2;
  ec.seed = 11;
  return ec;
}

Eigen::Matrix2d random_matrix(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  Eigen::Matrix2d m;
  for (int i = 0; i < 4; ++i) m(i / 2, i % 2) = d(rng);
  return m;
}

}  // namespace

TEST_CASE("block Dirichlet data") {
  const Vec2 x(3.0, -2.0);
  CHECK(block_dirichlet(Eigen::Matrix2d::Identity(), Eigen::Matrix2d::Zero(), x) == x);
  CHECK(block_dirichlet(Eigen::Matrix2d::Zero(), Eigen::Matrix2d::Zero(), x) == Vec2::Zero());
  std::mt19937_64 rng(5);
  for (int k = 0; k < 20; ++k) {
    const auto a = random_matrix(rng);
    const auto b = random_matrix(rng);
    CHECK(block_dirichlet(a, b, Vec2::Zero()) == Vec2::Zero());
    const Vec2 y(0.5, 2.0);
    const Vec2 expect(a(0, 0) * y.x() + a(0, 1) * y.y() + b(0, 0) * y.x() * y.x() + b(0, 1) * y.y() * y.y(),
                      a(1, 0) * y.x() + a(1, 1) * y.y() + b(1, 0) * y.x() * y.x() + b(1, 1) * y.y() * y.y());
    CHECK((block_dirichlet(a, b, y) - expect).norm() <= 1e-14);
  }
}

TEST_CASE("beam analytical solution") {
  const double c = 40.0;
  for (auto model : {PlaneModel::stress, PlaneModel::strain}) {
    CHECK(beam_analytical(Vec2(7.0, c), 30000.0, 0.2, c, model).sigma_xx == doctest::Approx(120.0));
    CHECK(beam_analytical(Vec2(7.0, c / 2), 30000.0, 0.2, c, model).sigma_xx == doctest::Approx(0.0));
    CHECK(beam_analytical(Vec2(7.0, 0.0), 30000.0, 0.2, c, model).sigma_xx == doctest::Approx(-120.0));
    for (double y : {0.0, 5.0, 23.0, c}) CHECK(beam_analytical(Vec2(0.0, y), 30000.0, 0.2, c, model).u.x() == 0.0);
    CHECK(beam_analytical(Vec2::Zero(), 30000.0, 0.2, c, model).u.y() == 0.0);
  }
  // plane stress: eps_xx = sigma / E, eps_yy = -nu sigma / E
  const double e = 30000.0, nu = 0.2, d = 1e-4;
  const Vec2 x(13.0, 9.0);
  auto u = [&](const Vec2& p) { return beam_analytical(p, e, nu, c, PlaneModel::stress).u; };
  const double sigma = beam_analytical(x, e, nu, c, PlaneModel::stress).sigma_xx;
  const double exx = (u(x + Vec2(d, 0)).x() - u(x - Vec2(d, 0)).x()) / (2 * d);
  const double eyy = (u(x + Vec2(0, d)).y() - u(x - Vec2(0, d)).y()) / (2 * d);
  const double gxy = (u(x + Vec2(0, d)).x() - u(x - Vec2(0, d)).x()) / (2 * d) +
                     (u(x + Vec2(d, 0)).y() - u(x - Vec2(d, 0)).y()) / (2 * d);
  CHECK(exx == doctest::Approx(sigma / e).epsilon(1e-8));
  CHECK(eyy == doctest::Approx(-nu * sigma / e).epsilon(1e-8));
  CHECK(std::abs(gxy) <= 1e-10);
}

TEST_CASE("hat load") {
  CHECK(hat(10.0, 10.0, 2.0, 200.0) == 200.0);
  CHECK(hat(11.0, 10.0, 2.0, 200.0) == doctest::Approx(100.0));
  CHECK(hat(9.0, 10.0, 2.0, 200.0) == doctest::Approx(100.0));
  CHECK(hat(12.0, 10.0, 2.0, 200.0) == 0.0);
  CHECK(hat(-3.0, 10.0, 2.0, 200.0) == 0.0);
}

TEST_CASE("homogeneous beam FOM reproduces the analytical field") {
  ExperimentConfig ec = small_beam(1.0);
  ec.rce = rce_preset("type1", 3);
  const Problem p = make_problem(ec);
  const FomSolution fom = solve_fom(p.grid, p.rce, p.material, p.bc);
  const double c = ec.ny * ec.rce.side_length;
  double err = 0.0, ref = 0.0;
  for (int n = 0; n < fom.mesh.mesh.n_nodes(); ++n) {
    const Vec2 exact = beam_analytical(fom.mesh.mesh.nodes[n], ec.e_matrix, ec.poisson, c, ec.plane).u;
    err = std::max(err, (fom.u.segment<2>(2 * n) - exact).norm());
    ref = std::max(ref, exact.norm());
  }
  CHECK(err <= 1e-9 * ref);
}

TEST_CASE("problem setups") {
  ExperimentConfig ec;
  ec.rce = rce_preset("type1", 3);
  SUBCASE("block is clamped everywhere") {
    const Problem p = make_problem(ec, ExperimentKind::block);
    CHECK(p.grid.n_cells() == 25);
    CHECK(p.bc.ignore_in_oversampling);
    for (int e = 0; e < p.grid.n_edges(); ++e)
      if (p.grid.is_boundary_edge(e)) CHECK(p.bc.edges[e].type == BcType::dirichlet);
  }
  SUBCASE("L-panel has clamped and loaded edges") {
    ec.nx = ec.ny = 6;
    const Problem p = make_problem(ec, ExperimentKind::lpanel);
    CHECK(p.grid.n_cells() == 27);
    int clamped = 0, loaded = 0;
    for (const auto& b : p.bc.edges) {
      clamped += b.type == BcType::dirichlet;
      loaded += b.type == BcType::neumann;
    }
    CHECK(clamped == 3);
    CHECK(loaded == 2);
    const double length = 6 * ec.rce.side_length;
    CHECK(p.bc.traction(Vec2(length - ec.rce.side_length, 0.0)).y() == doctest::Approx(ec.t_y));
  }
}

TEST_CASE("config parsing") {
  const std::string base = "experiment: block\nseed: 3\n";
  SUBCASE("defaults") {
    const auto c = parse_config(base);
    CHECK(c.nx == 5);
    CHECK(c.rce.n_verts_per_edge == 7);
    CHECK(c.seed == 3);
    CHECK(c.plane == PlaneModel::strain);
  }
  SUBCASE("beam defaults and overrides") {
    const auto c = parse_config(
        "experiment: beam\nseed: 1\nmaterial: {ratio: 3, plane: stress}\nn_mpe: [2, 4]\n"
        "rangefinder: {tol: 0.01, n_t: 5}\nrce: {preset: type2, n_verts_per_edge: 9}\n");
    CHECK(c.nx == 10);
    CHECK(c.ny == 2);
    CHECK(c.e_aggregate == doctest::Approx(3 * c.e_matrix));
    CHECK(c.plane == PlaneModel::stress);
    CHECK(c.n_mpe == std::vector<int>{2, 4});
    CHECK(c.rangefinder.tol == 0.01);
    CHECK(c.rangefinder.n_t == 5);
    CHECK(c.rce.aggregates.size() == 4);
    CHECK(c.rce.n_verts_per_edge == 9);
  }
  SUBCASE("block coefficients") {
    const auto c = parse_config(base + "block: {a: [[1, 2], [3, 4]], b: [[0, 0], [0, 1]]}\n");
    CHECK(c.block_a(1, 0) == 3.0);
    CHECK(c.block_b(1, 1) == 1.0);
  }
  SUBCASE("seed is required for the empirical basis") {
    CHECK_THROWS_AS(parse_config("experiment: block\n"), std::invalid_argument);
    CHECK_NOTHROW(parse_config("experiment: block\nbasis: hierarchical\n"));
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(parse_config("seed: 1\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config("experiment: bridge\nseed: 1\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config(base + "n_mpe: []\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config(base + "grid: {nx: 0}\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config(base + "rce: {n_verts_per_edge: 1}\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config(base + "material: {plane: shell}\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config(base + "basis: cubic\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config(base + "rangefinder: {tol: -1}\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config(base + "grid: [\n"), std::invalid_argument);
  }
  SUBCASE("RCE file") {
    const auto dir = scratch("rce_file");
    std::ofstream(dir / "mine.cfg") << "side_length: 20\nn_verts_per_edge: 5\naggregates: [[10, 10, 4]]\n";
    std::ofstream(dir / "exp.cfg") << "experiment: block\nseed: 2\nrce: {file: mine.cfg}\n";
    const auto c = load_config(dir / "exp.cfg");
    CHECK(c.rce_name == "mine");
    CHECK(c.rce.n_verts_per_edge == 5);
    REQUIRE(c.rce.aggregates.size() == 1);
    CHECK(c.rce.aggregates[0].radius == 4.0);
    CHECK_THROWS_AS(parse_rce("aggregates: [[1, 1, 5]]\n"), std::invalid_argument);
  }
}

TEST_CASE("config hash") {
  const auto a = parse_config("experiment: block\nseed: 3\n");
  const auto b = parse_config("seed: 3\nexperiment: block\n");
  CHECK(a.hash() == b.hash());
  CHECK(a.canonical() == b.canonical());
  auto c = a;
  c.seed = 4;
  CHECK(c.hash() != a.hash());
  c = a;
  c.n_mpe.push_back(18);
  CHECK(c.hash() != a.hash());
  CHECK(hex(a.hash()).size() == 16);
}

TEST_CASE("FNV-1a reference values") {
  CHECK(fnv1a("") == 0xcbf29ce484222325ull);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cull);
  CHECK(fnv1a("foobar") == 0x85944171f73967e8ull);
  CHECK(hex(255) == "00000000000000ff");
}

TEST_CASE("matrix file round trip") {
  const auto dir = scratch("matrix");
  std::mt19937_64 rng(2);
  std::normal_distribution<double> d;
  for (auto [r, c] : {std::pair{0, 0}, std::pair{1, 7}, std::pair{13, 3}}) {
    Matrix m(r, c);
    for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = d(rng);
    write_matrix(dir / "m.bin", m);
    const Matrix back = read_matrix(dir / "m.bin");
    CHECK(back.rows() == r);
    CHECK(back.cols() == c);
    CHECK(back == m);
  }
  std::ofstream(dir / "bad.bin") << "XXXX0000000000000000";
  CHECK_THROWS(read_matrix(dir / "bad.bin"));
  CHECK_THROWS(read_matrix(dir / "missing.bin"));
  write_matrix(dir / "m.bin", Matrix::Ones(4, 4));
  std::filesystem::resize_file(dir / "m.bin", 40);
  CHECK_THROWS(read_matrix(dir / "m.bin"));
}

TEST_CASE("CSV round trip") {
  const auto dir = scratch("csv");
  CsvTable t = error_table();
  t.add({"empirical", "soi", "4", "312", format_double(0.5), format_double(1e-3)});
  t.add({"hierarchical", "none", "2", "192", format_double(1.25), format_double(2.5e-7)});
  t.write(dir / "t.csv");
  const auto back = CsvTable::read(dir / "t.csv");
  CHECK(back.header == t.header);
  CHECK(back.rows == t.rows);
  CHECK(std::stod(back.rows[1][5]) == 2.5e-7);
  CHECK_THROWS_AS(t.add({"too", "short"}), std::invalid_argument);
}

TEST_CASE("truncated bases are nested") {
  ExperimentConfig ec = small_beam(2.0);
  const Problem p = make_problem(ec);
  const auto r = run_offline(p, ec, BasisKind::hierarchical, TrainingKind::soi);
  const auto& full = r.unique_bases.at(0);
  for (int n = 0; n <= 4; ++n) {
    const BasisMatrix t = truncate_basis(full, n);
    CHECK(t.n_columns() == 8 + 4 * n);
    CHECK(t.b.leftCols(8) == full.b.leftCols(8));
    for (Side s : kSides)
      CHECK(t.b.middleCols(t.column_offset(s), n) == full.b.middleCols(full.column_offset(s), n));
  }
  CHECK(truncate_basis(full, 10).n_columns() == full.n_columns());
  CHECK_THROWS_AS(truncate_basis(full, -1), std::invalid_argument);
}

TEST_CASE("homogeneous beam is exact with two hierarchical modes") {
  ExperimentConfig ec = small_beam(1.0);
  ec.n_mpe = {2};
  const Problem p = make_problem(ec);
  const FomSolution fom = solve_fom(p.grid, p.rce, p.material, p.bc);
  const auto off = run_offline(p, ec, BasisKind::hierarchical, TrainingKind::soi);
  const auto rom = run_online(p, off, 2);
  const auto rep = compare(p, fom, rom, BasisKind::hierarchical, 2);
  CHECK(rep.global.relative <= 1e-8);
}

TEST_CASE("offline artifacts round trip") {
  ExperimentConfig ec = small_beam(2.0);
  const Problem p = make_problem(ec);
  for (auto kind : {BasisKind::empirical, BasisKind::hierarchical}) {
    const auto r = run_offline(p, ec, kind, TrainingKind::random);
    const auto dir = offline_dir(scratch("offline"), kind, TrainingKind::random);
    save_offline(r, ec, dir);
    const auto back = load_offline(dir);
    CHECK(back.kind == kind);
    CHECK(back.n_mpe_max == r.n_mpe_max);
    CHECK(back.cell_basis == r.cell_basis);
    CHECK(back.modes.source == r.modes.source);
    REQUIRE(back.modes.modes.size() == r.modes.modes.size());
    for (std::size_t e = 0; e < r.modes.modes.size(); ++e) CHECK(back.modes.modes[e] == r.modes.modes[e]);
    REQUIRE(back.unique_bases.size() == r.unique_bases.size());
    for (std::size_t k = 0; k < r.unique_bases.size(); ++k) {
      CHECK(back.unique_bases[k].b == r.unique_bases[k].b);
      CHECK(back.unique_bases[k].n_modes == r.unique_bases[k].n_modes);
    }
    CHECK(back.stats.size() == r.stats.size());
    const auto a = run_online(p, r, 4);
    const auto b = run_online(p, back, 4);
    CHECK(a.u == b.u);
  }
  CHECK_THROWS_AS(load_offline(scratch("empty")), std::runtime_error);
}

TEST_CASE("offline stage is deterministic and thread independent") {
  ExperimentConfig ec = small_beam(2.0);
  const Problem p = make_problem(ec);
  for (auto training : {TrainingKind::soi, TrainingKind::random}) {
    const auto a = run_offline(p, ec, BasisKind::empirical, training, Exec::parallel);
    const auto b = run_offline(p, ec, BasisKind::empirical, training, Exec::serial);
    REQUIRE(a.modes.modes.size() == b.modes.modes.size());
    for (std::size_t e = 0; e < a.modes.modes.size(); ++e) CHECK(a.modes.modes[e] == b.modes.modes[e]);
    for (std::size_t k = 0; k < a.unique_bases.size(); ++k) CHECK(a.unique_bases[k].b == b.unique_bases[k].b);
  }
  auto other = ec;
  other.seed = 12;
  const auto a = run_offline(p, ec, BasisKind::empirical, TrainingKind::random);
  const auto b = run_offline(p, other, BasisKind::empirical, TrainingKind::random);
  bool differ = false;
  for (std::size_t e = 0; e < a.modes.modes.size(); ++e) differ |= a.modes.modes[e] != b.modes.modes[e];
  CHECK(differ);
}

TEST_CASE("empirical basis beats hierarchical on a heterogeneous beam") {
  ExperimentConfig ec = small_beam(2.0);
  const Problem p = make_problem(ec);
  const FomSolution fom = solve_fom(p.grid, p.rce, p.material, p.bc);
  const auto hier = run_offline(p, ec, BasisKind::hierarchical, TrainingKind::soi);
  const auto emp = run_offline(p, ec, BasisKind::empirical, TrainingKind::random);
  const double e_h = compare(p, fom, run_online(p, hier, 4), BasisKind::hierarchical, 4).global.relative;
  const double e_e = compare(p, fom, run_online(p, emp, 4), BasisKind::empirical, 4).global.relative;
  MESSAGE("hierarchical " << e_h << " empirical " << e_e);
  CHECK(e_e < e_h);
  CHECK_THROWS_AS(run_online(p, emp, 5), std::invalid_argument);
  CHECK_THROWS_AS(run_offline(p, ec, BasisKind::spectral, TrainingKind::soi), std::invalid_argument);
}

TEST_CASE("spectral basis reproduces its own training snapshots") {
  ExperimentConfig ec = small_beam(2.0);
  ec.nx = ec.ny = 4;
  ec.rce = rce_preset("type1", 3);
  const Problem p = make_problem(ec, ExperimentKind::lpanel);
  const auto configs = classify_configurations(p.grid, p.bc);
  const Configuration& cfg = interior_configuration(configs);
  const auto t = train_configuration(p, cfg, ec, TrainingKind::random, Vector(), -1, Exec::serial);
  const RceOperator rce_op(p.rce, p.material);
  const Matrix s = spectral_basis(t.snapshots.snapshots, rce_op.stiffness());
  const Matrix tests = t.snapshots.snapshots.leftCols(3);
  CHECK(projection_error(tests, s, rce_op.stiffness()) <= 1e-8);
}

TEST_CASE("projection study table") {
  ExperimentConfig ec;
  ec.experiment = ExperimentKind::projection_study;
  ec.nx = ec.ny = 4;
  ec.rce = rce_preset("type1", 3);
  ec.rangefinder.tol = 1e-2;
  ec.n_test = 6;
  ec.seed = 9;
  const auto t = run_projection_study(ec, Exec::serial);
  CHECK(t.header == std::vector<std::string>{"basis", "training_set", "testing_set", "n_local", "N_dofs", "max_rel_err"});
  REQUIRE(!t.rows.empty());
  std::map<std::string, std::vector<double>> curves;
  for (const auto& r : t.rows) {
    curves[r[0] + "/" + r[1] + "/" + r[2]].push_back(std::stod(r[5]));
    if (r[0] == "empirical") CHECK(std::stoi(r[4]) == 32 + 24 * ((std::stoi(r[3]) - 8) / 4));
    if (r[0] == "spectral") CHECK(std::stoi(r[4]) == 49 * std::stoi(r[3]));
  }
  CHECK(curves.size() == 8);
  for (const auto& [name, errs] : curves)
    for (std::size_t k = 1; k < errs.size(); ++k) CHECK(errs[k] <= errs[k - 1] * (1 + 1e-9) + 1e-14);
  const auto again = run_projection_study(ec, Exec::parallel);
  CHECK(again.rows == t.rows);
}
