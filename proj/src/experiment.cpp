#include "lmor/experiment.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <chrono>
#include <fstream>
#include <map>
#include <stdexcept>

namespace lmor {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int vertex_at(const CoarseGrid& grid, const Vec2& x) {
  for (int v = 0; v < grid.n_vertices(); ++v)
    if ((grid.vertices[v] - x).norm() <= 1e-9 * grid.cell_size) return v;
  throw std::logic_error("no coarse vertex at the requested point");
}

std::uint64_t config_seed(std::uint64_t seed, int config_id) {
  return seed + 0x9E3779B97F4A7C15ull * static_cast<std::uint64_t>(config_id + 1);
}

}  // namespace

// ---------------------------------------------------------------------------
// Structures
// ---------------------------------------------------------------------------

Vec2 block_dirichlet(const Eigen::Matrix2d& a, const Eigen::Matrix2d& b, const Vec2& x) {
  return a * x + b * x.cwiseProduct(x);
}

BeamSolution beam_analytical(const Vec2& x, double young, double poisson, double c, PlaneModel model) {
  double e = young;
  double nu = poisson;
  if (model == PlaneModel::strain) {
    e = young / (1.0 - poisson * poisson);
    nu = poisson / (1.0 - poisson);
  }
  const double sigma = 240.0 * x.y() / c - 120.0;
  const double u = sigma * x.x() / e;
  const double v = -nu / e * (120.0 * x.y() * x.y() / c - 120.0 * x.y()) - 120.0 * x.x() * x.x() / (c * e);
  return {Vec2(u, v), sigma};
}

double hat(double x, double x_peak, double h, double peak) {
  const double d = std::abs(x - x_peak);
  return d >= h ? 0.0 : peak * (1.0 - d / h);
}

Problem make_problem(const ExperimentConfig& cfg) { return make_problem(cfg, cfg.experiment); }

Problem make_problem(const ExperimentConfig& cfg, ExperimentKind kind) {
  if (kind == ExperimentKind::projection_study) kind = cfg.study_problem;
  const double h = cfg.rce.side_length;
  Problem p;
  p.rce = build_rce_mesh(cfg.rce);
  p.material = cfg.material();
  const double tol = 1e-9 * h;
  switch (kind) {
    case ExperimentKind::block: {
      p.grid = build_coarse_grid({GridShape::rectangle, cfg.nx, cfg.ny}, h);
      p.bc = free_bc(p.grid);
      assign_edges(p.bc, p.grid, [](const Vec2&) { return true; }, {BcType::dirichlet, {true, true}});
      const Eigen::Matrix2d a = cfg.block_a;
      const Eigen::Matrix2d b = cfg.block_b;
      p.bc.dirichlet = [a, b](const Vec2& x) { return block_dirichlet(a, b, x); };
      p.bc.ignore_in_oversampling = true;
      break;
    }
    case ExperimentKind::beam: {
      p.grid = build_coarse_grid({GridShape::rectangle, cfg.nx, cfg.ny}, h);
      const double length = cfg.nx * h;
      const double c = cfg.ny * h;
      p.bc = free_bc(p.grid);
      assign_edges(p.bc, p.grid, [tol](const Vec2& x) { return x.x() < tol; }, {BcType::dirichlet, {true, false}});
      assign_edges(p.bc, p.grid, [=](const Vec2& x) { return x.x() > length - tol; },
                   {BcType::neumann, {true, true}});
      p.bc.points.push_back({vertex_at(p.grid, Vec2::Zero()), 1});
      p.bc.traction = [c](const Vec2& x) { return Vec2(240.0 * x.y() / c - 120.0, 0.0); };
      break;
    }
    case ExperimentKind::lpanel: {
      p.grid = build_coarse_grid({GridShape::lpanel, cfg.nx, cfg.ny}, h);
      const double length = cfg.nx * h;
      const double clamp_end = (cfg.nx / 2) * h;
      p.bc = free_bc(p.grid);
      assign_edges(p.bc, p.grid, [=](const Vec2& x) { return x.y() < tol && x.x() < clamp_end; },
                   {BcType::dirichlet, {true, true}});
      assign_edges(p.bc, p.grid, [=](const Vec2& x) { return x.y() < tol && x.x() > length - 2.0 * h; },
                   {BcType::neumann, {true, true}});
      const double t_y = cfg.t_y;
      p.bc.traction = [=](const Vec2& x) { return Vec2(0.0, hat(x.x(), length - h, h, t_y)); };
      break;
    }
    case ExperimentKind::projection_study: break;
  }
  return p;
}

// ---------------------------------------------------------------------------
// Offline stage
// ---------------------------------------------------------------------------

ConfigTraining train_configuration(const Problem& p, const Configuration& cfg, const ExperimentConfig& ec,
                                   TrainingKind training, const Vector& coarse_solution, int max_modes, Exec exec) {
  const auto t0 = Clock::now();
  const TransferOperator op(cfg, p.rce, p.material, p.bc, exec);
  Matrix soi(op.source_dim(), 0);
  if (training == TrainingKind::soi) soi = soi_training_set(op, cfg, p.grid, coarse_solution).training;
  ConfigTraining out;
  out.snapshots = compute_snapshots(op, ec.rangefinder, soi, config_seed(ec.seed, cfg.id), exec);
  const auto& t = cfg.target_on_boundary;
  const std::array<bool, 2> pool{!t[0] && !t[2], !t[1] && !t[3]};
  out.edges = edge_basis_from_snapshots(p.rce, out.snapshots.snapshots, pool, ec.edge_pod_tol, max_modes);
  auto& s = out.stats;
  s.id = cfg.id;
  s.key = cfg.key;
  s.priority = cfg.priority;
  s.n_members = static_cast<int>(cfg.members.size());
  s.n_snapshots = static_cast<int>(out.snapshots.size());
  s.n_soi = out.snapshots.n_soi;
  s.n_random = out.snapshots.n_random;
  s.c_est = out.snapshots.c_est;
  s.estimate = out.snapshots.estimate;
  for (Side side : kSides) s.n_modes[static_cast<int>(side)] = out.edges.modes.count(side);
  s.seconds = seconds_since(t0);
  return out;
}

OfflineResult run_offline(const Problem& p, const ExperimentConfig& ec, BasisKind kind, TrainingKind training,
                          Exec exec) {
  if (kind == BasisKind::spectral) throw std::invalid_argument("the global model uses empirical or hierarchical bases");
  const auto t0 = Clock::now();
  OfflineResult r;
  r.kind = kind;
  r.training = training;
  r.n_mpe_max = ec.max_n_mpe();
  const RceOperator rce_op(p.rce, p.material, exec);

  if (kind == BasisKind::hierarchical) {
    r.modes = uniform_edge_modes(p.grid, hierarchical_edge_basis(r.n_mpe_max, rce_op));
  } else {
    const auto configs = classify_configurations(p.grid, p.bc);
    Vector coarse;
    if (training == TrainingKind::soi) coarse = solve_coarse_problem(p.grid, p.bc, homogenized_phase(p.rce, p.material));
    std::vector<ConfigTraining> trained(configs.size());
    for_each_index(static_cast<long>(configs.size()), exec, [&](long i) {
      trained[i] = train_configuration(p, configs[i], ec, training, coarse, r.n_mpe_max, Exec::serial);
    });
    std::vector<int> cell_config(p.grid.n_cells(), -1);
    std::vector<int> priority;
    std::vector<EdgeModeSet> sets;
    for (std::size_t i = 0; i < configs.size(); ++i) {
      for (int m : configs[i].members) cell_config[m] = static_cast<int>(i);
      priority.push_back(configs[i].priority);
      sets.push_back(trained[i].edges.modes);
      r.stats.push_back(trained[i].stats);
    }
    r.modes = assign_edge_modes(p.grid, cell_config, priority, sets);
  }

  const Matrix coarse_ext = extend_coarse(rce_op, exec);
  std::map<std::array<int, 4>, int> cache;
  r.cell_basis.resize(p.grid.n_cells());
  for (int c = 0; c < p.grid.n_cells(); ++c) {
    std::array<int, 4> key;
    for (int s = 0; s < 4; ++s) key[s] = r.modes.source[p.grid.cell_edges[c][s]];
    auto it = cache.find(key);
    if (it == cache.end()) {
      EdgeModeSet set;
      for (int s = 0; s < 4; ++s) set.modes[s] = r.modes.modes[p.grid.cell_edges[c][s]];
      r.unique_bases.push_back(build_cell_basis(rce_op, coarse_ext, set, kind, exec));
      it = cache.emplace(key, static_cast<int>(r.unique_bases.size()) - 1).first;
    }
    r.cell_basis[c] = it->second;
  }
  r.seconds = seconds_since(t0);
  return r;
}

BasisMatrix truncate_basis(const BasisMatrix& b, int n_mpe) {
  if (n_mpe < 0) throw std::invalid_argument("modes per edge must be non-negative");
  BasisMatrix out;
  out.kind = b.kind;
  int total = 8;
  for (int s = 0; s < 4; ++s) {
    out.n_modes[s] = std::min(n_mpe, b.n_modes[s]);
    total += out.n_modes[s];
  }
  out.b.resize(b.b.rows(), total);
  out.b.leftCols(8) = b.b.leftCols(8);
  int next = 8;
  for (Side s : kSides) {
    const int n = out.n_modes[static_cast<int>(s)];
    out.b.middleCols(next, n) = b.b.middleCols(b.column_offset(s), n);
    next += n;
  }
  return out;
}

std::vector<BasisMatrix> cell_bases(const OfflineResult& r, int n_mpe) {
  std::vector<BasisMatrix> unique;
  for (const auto& b : r.unique_bases) unique.push_back(truncate_basis(b, n_mpe));
  std::vector<BasisMatrix> out;
  for (int idx : r.cell_basis) out.push_back(unique.at(idx));
  return out;
}

std::filesystem::path offline_dir(const std::filesystem::path& out, BasisKind kind, TrainingKind training) {
  if (kind == BasisKind::hierarchical) return out / "offline_hierarchical";
  return out / ("offline_" + to_string(kind) + "_" + to_string(training));
}

void save_offline(const OfflineResult& r, const ExperimentConfig& ec, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::json j;
  j["config_hash"] = hex(ec.hash());
  j["config"] = nlohmann::json::parse(ec.canonical());
  j["basis"] = to_string(r.kind);
  j["training_set"] = to_string(r.training);
  j["n_mpe_max"] = r.n_mpe_max;
  j["seed"] = ec.seed;
  j["cell_basis"] = r.cell_basis;
  j["edge_source"] = r.modes.source;
  j["seconds"] = r.seconds;
  j["unique_bases"] = nlohmann::json::array();
  for (std::size_t k = 0; k < r.unique_bases.size(); ++k) {
    const auto name = fmt::format("basis_{}.bin", k);
    write_matrix(dir / name, r.unique_bases[k].b);
    j["unique_bases"].push_back({{"file", name}, {"n_modes", r.unique_bases[k].n_modes}});
  }
  std::map<int, int> written;
  for (std::size_t e = 0; e < r.modes.modes.size(); ++e) {
    const int src = r.modes.source[e];
    if (written.emplace(src, static_cast<int>(e)).second)
      write_matrix(dir / fmt::format("edge_modes_{}.bin", src), r.modes.modes[e]);
  }
  for (const auto& s : r.stats) {
    j["configurations"].push_back({{"id", s.id},
                                   {"key", s.key},
                                   {"priority", s.priority},
                                   {"members", s.n_members},
                                   {"snapshots", s.n_snapshots},
                                   {"soi", s.n_soi},
                                   {"random", s.n_random},
                                   {"c_est", s.c_est},
                                   {"estimate", s.estimate},
                                   {"modes", s.n_modes},
                                   {"seconds", s.seconds}});
  }
  std::ofstream(dir / "manifest.json") << j.dump(2) << '\n';
}

OfflineResult load_offline(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw std::runtime_error("no offline artifacts in " + dir.string());
  const auto j = nlohmann::json::parse(in);
  OfflineResult r;
  r.kind = basis_kind_from_string(j.at("basis").get<std::string>());
  r.training = training_kind_from_string(j.at("training_set").get<std::string>());
  r.n_mpe_max = j.at("n_mpe_max").get<int>();
  r.cell_basis = j.at("cell_basis").get<std::vector<int>>();
  r.modes.source = j.at("edge_source").get<std::vector<int>>();
  r.seconds = j.value("seconds", 0.0);
  std::map<int, Matrix> by_source;
  for (int src : r.modes.source) {
    if (!by_source.count(src)) by_source[src] = read_matrix(dir / fmt::format("edge_modes_{}.bin", src));
    r.modes.modes.push_back(by_source[src]);
  }
  for (const auto& b : j.at("unique_bases")) {
    BasisMatrix m;
    m.kind = r.kind;
    m.b = read_matrix(dir / b.at("file").get<std::string>());
    m.n_modes = b.at("n_modes").get<std::array<int, 4>>();
    r.unique_bases.push_back(std::move(m));
  }
  if (j.contains("configurations")) {
    for (const auto& c : j.at("configurations")) {
      ConfigStats s;
      s.id = c.at("id");
      s.key = c.at("key");
      s.priority = c.at("priority");
      s.n_members = c.at("members");
      s.n_snapshots = c.at("snapshots");
      s.n_soi = c.at("soi");
      s.n_random = c.at("random");
      s.c_est = c.at("c_est");
      s.estimate = c.at("estimate");
      s.n_modes = c.at("modes").get<std::array<int, 4>>();
      s.seconds = c.at("seconds");
      r.stats.push_back(s);
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// Online stage
// ---------------------------------------------------------------------------

RomSolution run_online(const Problem& p, const OfflineResult& r, int n_mpe, Exec exec) {
  if (n_mpe > r.n_mpe_max) throw std::invalid_argument("n_mpe exceeds the trained basis");
  const RceOperator op(p.rce, p.material, exec);
  const auto bases = cell_bases(r, n_mpe);
  return solve_reduced(op, p.grid, p.bc, r.modes.truncated(n_mpe), bases, exec);
}

ErrorReport compare(const Problem& p, const FomSolution& fom, const RomSolution& rom, BasisKind kind, int n_mpe) {
  const SparseMatrix a = assemble(p.rce, p.material);
  std::vector<Vector> fom_cells;
  for (int c = 0; c < p.grid.n_cells(); ++c) fom_cells.push_back(fom.cell_field(c));
  return error_report(fom_cells, rom.cell_fields, a, kind, n_mpe, rom.dofs.n_dofs);
}

CsvTable error_table() { return CsvTable{{"basis", "training_set", "n_mpe", "N_dofs", "abs_err", "rel_err"}, {}}; }

void add_error_row(CsvTable& t, const ErrorReport& r, TrainingKind training) {
  t.add({to_string(r.kind), r.kind == BasisKind::hierarchical ? "none" : to_string(training), std::to_string(r.n_mpe),
         std::to_string(r.n_dofs), format_double(r.global.absolute), format_double(r.global.relative)});
}

// ---------------------------------------------------------------------------
// Projection-error study
// ---------------------------------------------------------------------------

const Configuration& interior_configuration(const std::vector<Configuration>& configs) {
  const Configuration* best = nullptr;
  for (const auto& c : configs) {
    const bool interior = c.priority == 0 && std::none_of(c.target_on_boundary.begin(), c.target_on_boundary.end(),
                                                          [](bool b) { return b; });
    if (interior && (!best || c.members.size() > best->members.size())) best = &c;
  }
  if (!best) throw std::invalid_argument("structure has no interior configuration");
  return *best;
}

CsvTable run_projection_study(const ExperimentConfig& ec, Exec exec) {
  const Problem p = make_problem(ec, ec.study_problem);
  const auto configs = classify_configurations(p.grid, p.bc);
  const Configuration& cfg = interior_configuration(configs);
  const TransferOperator op(cfg, p.rce, p.material, p.bc, exec);
  const RceOperator rce_op(p.rce, p.material, exec);
  const SparseMatrix& energy = rce_op.stiffness();
  const Matrix coarse_ext = extend_coarse(rce_op, exec);

  std::map<std::string, Matrix> testing;
  {
    auto rng = make_stream(ec.seed, kTestingSetStream);
    Matrix g(op.source_dim(), ec.n_test);
    for (int j = 0; j < ec.n_test; ++j) g.col(j) = random_boundary_vector(rng, op.source_dim());
    testing["random"] = op.apply(g, true, exec);
    const FomSolution fom = solve_fom(p.grid, p.rce, p.material, p.bc, exec);
    std::vector<Vector> cols;
    for (int m : cfg.members) {
      Vector u = fom.cell_field(m);
      if (energy_norm(u, energy) > 0.0) cols.push_back(std::move(u));
    }
    Matrix f(p.rce.n_dofs(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) f.col(static_cast<Eigen::Index>(j)) = cols[j];
    testing["fom"] = f;
  }
  const auto grid_emp = build_coarse_grid({GridShape::rectangle, ec.study_grid_empirical, ec.study_grid_empirical},
                                          1.0 / ec.study_grid_empirical);
  const auto grid_spe = build_coarse_grid({GridShape::rectangle, ec.study_grid_spectral, ec.study_grid_spectral},
                                          1.0 / ec.study_grid_spectral);

  Vector coarse = solve_coarse_problem(p.grid, p.bc, homogenized_phase(p.rce, p.material));
  CsvTable table{{"basis", "training_set", "testing_set", "n_local", "N_dofs", "max_rel_err"}, {}};
  for (TrainingKind training : {TrainingKind::soi, TrainingKind::random}) {
    const auto trained = train_configuration(p, cfg, ec, training, coarse, -1, exec);
    int max_modes = 0;
    for (Side s : kSides) max_modes = std::max(max_modes, trained.edges.modes.count(s));
    for (int n = 1; n <= max_modes; ++n) {
      const BasisMatrix b = build_cell_basis(rce_op, coarse_ext, trained.edges.modes.truncated(n), BasisKind::empirical,
                                             exec);
      for (const auto& [name, tests] : testing) {
        if (tests.cols() == 0) continue;
        table.add({"empirical", to_string(training), name, std::to_string(b.n_columns()),
                   std::to_string(dof_counts(grid_emp, n, 0).empirical),
                   format_double(projection_error(tests, b.b, energy))});
      }
    }
    const Matrix spectral = spectral_basis(trained.snapshots.snapshots, energy);
    for (int n = 1; n <= spectral.cols(); ++n) {
      for (const auto& [name, tests] : testing) {
        if (tests.cols() == 0) continue;
        table.add({"spectral", to_string(training), name, std::to_string(n),
                   std::to_string(dof_counts(grid_spe, 0, n).spectral),
                   format_double(projection_error(tests, spectral.leftCols(n), energy))});
      }
    }
  }
  return table;
}

}  // namespace lmor
