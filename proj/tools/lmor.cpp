#include "lmor/experiment.hpp"
#include "lmor/parallel.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include <chrono>
#include <fstream>
#include <iostream>

using namespace lmor;
namespace fs = std::filesystem;

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::vector<int> n_mpe;
  std::string basis;
  std::string training;
  std::string out;
};

struct StageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

ExperimentConfig resolve(const Options& o) {
  ExperimentConfig c = load_config(o.config);
  if (o.seed) c.seed = *o.seed;
  if (!o.n_mpe.empty()) c.n_mpe = o.n_mpe;
  if (!o.basis.empty()) c.basis = basis_kind_from_string(o.basis);
  if (!o.training.empty()) c.training = training_kind_from_string(o.training);
  if (!o.out.empty()) c.output = o.out;
  c.validate();
  return c;
}

template <class Fn>
auto stage(const std::string& name, const ExperimentConfig& c, Fn&& fn) {
  try {
    return fn();
  } catch (const std::exception& e) {
    throw StageError(fmt::format("stage '{}' failed (config {}): {}", name, hex(c.hash()), e.what()));
  }
}

fs::path online_dir(const fs::path& out, BasisKind kind, TrainingKind training) {
  if (kind == BasisKind::hierarchical) return out / "online_hierarchical";
  return out / ("online_" + to_string(kind) + "_" + to_string(training));
}

std::string error_csv_name(BasisKind kind, TrainingKind training) {
  if (kind == BasisKind::hierarchical) return "errors_hierarchical.csv";
  return "errors_" + to_string(kind) + "_" + to_string(training) + ".csv";
}

void check_structure(const ExperimentConfig& c) {
  if (c.experiment == ExperimentKind::projection_study)
    throw std::invalid_argument("use the projection-study subcommand for this config");
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  fs::create_directories(path.parent_path());
  std::ofstream(path) << j.dump(2) << '\n';
}

nlohmann::json manifest_base(const ExperimentConfig& c) {
  nlohmann::json j;
  j["config_hash"] = hex(c.hash());
  j["config"] = nlohmann::json::parse(c.canonical());
  j["seed"] = c.seed;
  j["threads"] = max_threads();
  return j;
}

int cmd_fom(const Options& o) {
  const auto c = resolve(o);
  check_structure(c);
  const auto t0 = Clock::now();
  const Problem p = stage("setup", c, [&] { return make_problem(c); });
  const FomSolution fom = stage("fom", c, [&] { return solve_fom(p.grid, p.rce, p.material, p.bc); });
  stage("write", c, [&] {
    const fs::path dir = fs::path(c.output) / "fom";
    fs::create_directories(dir);
    write_matrix(dir / "u.bin", fom.u);
    auto j = manifest_base(c);
    j["n_dofs"] = fom.mesh.mesh.n_dofs();
    j["seconds"] = seconds_since(t0);
    write_json(dir / "manifest.json", j);
    return 0;
  });
  fmt::print("fom: {} DoFs, {:.2f} s\n", fom.mesh.mesh.n_dofs(), seconds_since(t0));
  return 0;
}

int cmd_offline(const Options& o) {
  const auto c = resolve(o);
  check_structure(c);
  const Problem p = stage("setup", c, [&] { return make_problem(c); });
  const OfflineResult r = stage("offline", c, [&] { return run_offline(p, c, c.basis, c.training); });
  const fs::path dir = offline_dir(c.output, c.basis, c.training);
  stage("write", c, [&] {
    save_offline(r, c, dir);
    return 0;
  });
  fmt::print("offline: {} configurations, {} cell bases, {:.2f} s -> {}\n", r.stats.size(), r.unique_bases.size(),
             r.seconds, dir.string());
  for (const auto& s : r.stats)
    fmt::print("  {:>3} {:<24} members {:>3} snapshots {:>4} modes [{}, {}, {}, {}]\n", s.id, s.key, s.n_members,
               s.n_snapshots, s.n_modes[0], s.n_modes[1], s.n_modes[2], s.n_modes[3]);
  return 0;
}

int cmd_online(const Options& o) {
  const auto c = resolve(o);
  check_structure(c);
  const Problem p = stage("setup", c, [&] { return make_problem(c); });
  const OfflineResult r = stage("load", c, [&] { return load_offline(offline_dir(c.output, c.basis, c.training)); });
  const fs::path dir = online_dir(c.output, c.basis, c.training);
  auto j = manifest_base(c);
  for (int n : c.n_mpe) {
    const auto t0 = Clock::now();
    const RomSolution rom = stage("online", c, [&] { return run_online(p, r, n); });
    stage("write", c, [&] {
      fs::create_directories(dir);
      Matrix fields(p.rce.n_dofs(), p.grid.n_cells());
      for (int k = 0; k < p.grid.n_cells(); ++k) fields.col(k) = rom.cell_fields[k];
      write_matrix(dir / fmt::format("cells_{}.bin", n), fields);
      write_matrix(dir / fmt::format("coefficients_{}.bin", n), rom.u);
      return 0;
    });
    j["runs"].push_back({{"n_mpe", n}, {"N_dofs", rom.dofs.n_dofs}, {"seconds", seconds_since(t0)}});
    fmt::print("online: n_mpe {:>2}  N {:>5}\n", n, rom.dofs.n_dofs);
  }
  write_json(dir / "manifest.json", j);
  return 0;
}

int cmd_compare(const Options& o) {
  const auto c = resolve(o);
  check_structure(c);
  const Problem p = stage("setup", c, [&] { return make_problem(c); });
  const fs::path out = c.output;
  FomSolution fom = stage("load", c, [&] {
    std::vector<int> all(p.grid.n_cells());
    for (int k = 0; k < p.grid.n_cells(); ++k) all[k] = k;
    FomSolution f{compose_patch(p.grid, all, p.rce), read_matrix(out / "fom" / "u.bin").col(0)};
    if (f.u.size() != f.mesh.mesh.n_dofs()) throw std::runtime_error("FOM solution does not match the config");
    return f;
  });
  const fs::path dir = online_dir(out, c.basis, c.training);
  const auto online = stage("load", c, [&] {
    std::ifstream in(dir / "manifest.json");
    if (!in) throw std::runtime_error("no online results in " + dir.string());
    return nlohmann::json::parse(in);
  });
  const SparseMatrix a = assemble(p.rce, p.material);
  std::vector<Vector> fom_cells;
  for (int k = 0; k < p.grid.n_cells(); ++k) fom_cells.push_back(fom.cell_field(k));
  CsvTable table = error_table();
  for (const auto& run : online.at("runs")) {
    const int n = run.at("n_mpe");
    const auto rep = stage("compare", c, [&] {
      const Matrix fields = read_matrix(dir / fmt::format("cells_{}.bin", n));
      std::vector<Vector> rom_cells;
      for (int k = 0; k < fields.cols(); ++k) rom_cells.push_back(fields.col(k));
      return error_report(fom_cells, rom_cells, a, c.basis, n, run.at("N_dofs").get<int>());
    });
    add_error_row(table, rep, c.training);
    fmt::print("compare: n_mpe {:>2}  N {:>5}  rel {:.3e}\n", n, rep.n_dofs, rep.global.relative);
  }
  table.write(out / error_csv_name(c.basis, c.training));
  return 0;
}

int cmd_projection_study(const Options& o) {
  auto c = resolve(o);
  const auto t0 = Clock::now();
  const CsvTable t = stage("projection-study", c, [&] { return run_projection_study(c); });
  const fs::path out = c.output;
  fs::create_directories(out);
  t.write(out / "projection_errors.csv");
  auto j = manifest_base(c);
  j["seconds"] = seconds_since(t0);
  j["rows"] = t.rows.size();
  write_json(out / "projection_manifest.json", j);
  fmt::print("projection-study: {} rows, {:.2f} s\n", t.rows.size(), seconds_since(t0));
  return 0;
}

// Full pipeline: FOM, every basis variant, errors and a timing manifest.
int cmd_report(const Options& o) {
  const auto c = resolve(o);
  if (c.experiment == ExperimentKind::projection_study) return cmd_projection_study(o);
  const fs::path out = c.output;
  fs::create_directories(out);
  auto j = manifest_base(c);
  auto t0 = Clock::now();
  const Problem p = stage("setup", c, [&] { return make_problem(c); });
  const FomSolution fom = stage("fom", c, [&] { return solve_fom(p.grid, p.rce, p.material, p.bc); });
  j["fom"] = {{"n_dofs", fom.mesh.mesh.n_dofs()}, {"seconds", seconds_since(t0)}};
  fmt::print("fom: {} DoFs\n", fom.mesh.mesh.n_dofs());

  CsvTable table = error_table();
  const std::vector<std::pair<BasisKind, TrainingKind>> variants{{BasisKind::hierarchical, TrainingKind::soi},
                                                                 {BasisKind::empirical, TrainingKind::soi},
                                                                 {BasisKind::empirical, TrainingKind::random}};
  for (const auto& [kind, training] : variants) {
    const OfflineResult r = stage("offline", c, [&] { return run_offline(p, c, kind, training); });
    save_offline(r, c, offline_dir(out, kind, training));
    nlohmann::json v{{"basis", to_string(kind)}, {"training_set", to_string(training)}, {"offline_seconds", r.seconds}};
    for (int n : c.n_mpe) {
      if (n > r.n_mpe_max) continue;
      t0 = Clock::now();
      const RomSolution rom = stage("online", c, [&] { return run_online(p, r, n); });
      const double online_s = seconds_since(t0);
      const auto rep = stage("compare", c, [&] { return compare(p, fom, rom, kind, n); });
      add_error_row(table, rep, training);
      v["online"].push_back({{"n_mpe", n}, {"N_dofs", rom.dofs.n_dofs}, {"seconds", online_s}});
      fmt::print("{:<12} {:<6} n_mpe {:>2}  N {:>5}  rel {:.3e}\n", to_string(kind),
                 kind == BasisKind::hierarchical ? "" : to_string(training), n, rep.n_dofs, rep.global.relative);
    }
    j["variants"].push_back(v);
  }
  table.write(out / "errors.csv");
  write_json(out / "manifest.json", j);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  configure_threads_from_env();
  CLI::App app{"Localized model order reduction for heterogeneous elastic structures"};
  app.require_subcommand(1);
  Options o;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "experiment config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "random seed override");
    sub->add_option("--n-mpe", o.n_mpe, "modes per edge (comma separated)")->delimiter(',');
    sub->add_option("--basis", o.basis, "empirical | hierarchical")
        ->check(CLI::IsMember({"empirical", "hierarchical"}));
    sub->add_option("--training-set", o.training, "soi | random")->check(CLI::IsMember({"soi", "random"}));
    sub->add_option("--out", o.out, "output directory");
  };
  const std::vector<std::pair<std::string, std::string>> commands{
      {"offline", "train and persist edge modes and cell bases"},
      {"online", "solve the reduced problem from persisted bases"},
      {"fom", "solve the full-order reference problem"},
      {"compare", "write relative energy errors of online results against the FOM"},
      {"projection-study", "local projection errors of empirical and spectral bases"},
      {"report", "run FOM, all basis variants and comparisons in one go"}};
  for (const auto& [name, help] : commands) add_common(app.add_subcommand(name, help));

  CLI11_PARSE(app, argc, argv);
  const std::string cmd = app.get_subcommands().front()->get_name();
  try {
    if (cmd == "offline") return cmd_offline(o);
    if (cmd == "online") return cmd_online(o);
    if (cmd == "fom") return cmd_fom(o);
    if (cmd == "compare") return cmd_compare(o);
    if (cmd == "projection-study") return cmd_projection_study(o);
    return cmd_report(o);
  } catch (const StageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
