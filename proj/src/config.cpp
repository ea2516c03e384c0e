#include "lmor/config.hpp"

#include "lmor/io.hpp"

#include <json.hpp>
#include <yaml-cpp/yaml.h>

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace lmor {

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::block: return "block";
    case ExperimentKind::beam: return "beam";
    case ExperimentKind::lpanel: return "lpanel";
    case ExperimentKind::projection_study: return "projection_study";
  }
  return "?";
}

ExperimentKind experiment_kind_from_string(const std::string& name) {
  for (auto k : {ExperimentKind::block, ExperimentKind::beam, ExperimentKind::lpanel, ExperimentKind::projection_study})
    if (to_string(k) == name) return k;
  throw std::invalid_argument("unknown experiment: " + name);
}

void ExperimentConfig::validate() const {
  if (nx < 1 || ny < 1) throw std::invalid_argument("coarse grid needs at least one cell per direction");
  rce.validate();
  material().validate();
  if (n_mpe.empty()) throw std::invalid_argument("n_mpe sweep is empty");
  for (int n : n_mpe)
    if (n < 0) throw std::invalid_argument("n_mpe must be non-negative");
  rangefinder.validate();
  if (!(edge_pod_tol >= 0.0)) throw std::invalid_argument("edge POD tolerance must be non-negative");
  if (n_test < 1) throw std::invalid_argument("testing set needs at least one vector");
  if (study_problem == ExperimentKind::projection_study) throw std::invalid_argument("study problem must be a structure");
  if (experiment == ExperimentKind::lpanel || study_problem == ExperimentKind::lpanel) {
    if (nx < 2 || ny < 2) throw std::invalid_argument("L-panel needs at least 2x2 cells");
  }
  if (study_grid_empirical < 1 || study_grid_spectral < 1) throw std::invalid_argument("study grids must be positive");
}

Material ExperimentConfig::material() const { return two_phase_material(e_matrix, e_aggregate, poisson, plane); }

int ExperimentConfig::max_n_mpe() const { return *std::max_element(n_mpe.begin(), n_mpe.end()); }

std::string ExperimentConfig::canonical() const {
  nlohmann::json j;
  j["experiment"] = to_string(experiment);
  j["grid"] = {nx, ny};
  j["rce"]["name"] = rce_name;
  j["rce"]["side_length"] = rce.side_length;
  j["rce"]["n_verts_per_edge"] = rce.n_verts_per_edge;
  for (const auto& a : rce.aggregates) j["rce"]["aggregates"].push_back({a.center.x(), a.center.y(), a.radius});
  j["material"] = {e_matrix, e_aggregate, poisson, plane == PlaneModel::strain ? "strain" : "stress"};
  j["basis"] = to_string(basis);
  j["training_set"] = to_string(training);
  j["n_mpe"] = n_mpe;
  j["rangefinder"] = {rangefinder.tol, rangefinder.n_t, rangefinder.eps_algofail, rangefinder.stall_factor,
                      rangefinder.stall_reduction};
  j["edge_pod_tol"] = edge_pod_tol;
  j["seed"] = seed;
  j["block"] = {block_a(0, 0), block_a(0, 1), block_a(1, 0), block_a(1, 1),
                block_b(0, 0), block_b(0, 1), block_b(1, 0), block_b(1, 1)};
  j["t_y"] = t_y;
  j["study"] = {to_string(study_problem), n_test, study_grid_empirical, study_grid_spectral};
  return j.dump();
}

std::uint64_t ExperimentConfig::hash() const { return fnv1a(canonical()); }

RceGeometry rce_preset(const std::string& name, int n_verts_per_edge) {
  RceGeometry g;
  g.side_length = 20.0;
  g.n_verts_per_edge = n_verts_per_edge;
  if (name == "type1") {
    g.aggregates = {{Vec2(10.0, 10.0), 6.0}};
  } else if (name == "type2") {
    g.aggregates = {{Vec2(5.5, 6.0), 3.5}, {Vec2(14.0, 5.0), 3.0}, {Vec2(12.0, 14.5), 4.0}, {Vec2(4.5, 15.0), 2.5}};
  } else {
    throw std::invalid_argument("unknown RCE preset: " + name);
  }
  return g;
}

namespace {

RceGeometry rce_from_node(const YAML::Node& n) {
  RceGeometry g;
  g.side_length = n["side_length"].as<double>(20.0);
  g.n_verts_per_edge = n["n_verts_per_edge"].as<int>(7);
  for (const auto& a : n["aggregates"]) {
    if (a.size() != 3) throw std::invalid_argument("aggregate needs [x, y, r]");
    g.aggregates.push_back({Vec2(a[0].as<double>(), a[1].as<double>()), a[2].as<double>()});
  }
  return g;
}

Eigen::Matrix2d matrix2(const YAML::Node& n, const Eigen::Matrix2d& fallback) {
  if (!n) return fallback;
  if (n.size() != 2 || n[0].size() != 2 || n[1].size() != 2) throw std::invalid_argument("expected a 2x2 matrix");
  Eigen::Matrix2d m;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) m(i, j) = n[i][j].as<double>();
  return m;
}

}  // namespace

RceGeometry parse_rce(const std::string& text) {
  try {
    RceGeometry g = rce_from_node(YAML::Load(text));
    g.validate();
    return g;
  } catch (const YAML::Exception& e) {
    throw std::invalid_argument(std::string("RCE file: ") + e.what());
  }
}

ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  ExperimentConfig c;
  try {
    const YAML::Node root = YAML::Load(text);
    if (!root.IsMap()) throw std::invalid_argument("config must be a key-value map");
    if (!root["experiment"]) throw std::invalid_argument("config: missing 'experiment'");
    c.experiment = experiment_kind_from_string(root["experiment"].as<std::string>());
    if (c.experiment == ExperimentKind::beam) {
      c.nx = 10;
      c.ny = 2;
    } else if (c.experiment == ExperimentKind::lpanel || c.experiment == ExperimentKind::projection_study) {
      c.nx = 6;
      c.ny = 6;
    }
    if (const auto g = root["grid"]) {
      c.nx = g["nx"].as<int>(c.nx);
      c.ny = g["ny"].as<int>(c.ny);
    }
    int n_verts = 7;
    if (const auto r = root["rce"]) {
      n_verts = r["n_verts_per_edge"].as<int>(n_verts);
      if (r["file"]) {
        const std::filesystem::path p = base_dir / r["file"].as<std::string>();
        std::ifstream in(p);
        if (!in) throw std::invalid_argument("cannot read RCE file " + p.string());
        std::stringstream ss;
        ss << in.rdbuf();
        c.rce = parse_rce(ss.str());
        c.rce_name = p.stem().string();
        if (r["n_verts_per_edge"]) c.rce.n_verts_per_edge = n_verts;
      } else {
        c.rce_name = r["preset"].as<std::string>("type1");
        c.rce = rce_preset(c.rce_name, n_verts);
      }
    } else {
      c.rce = rce_preset(c.rce_name, n_verts);
    }
    if (const auto m = root["material"]) {
      c.e_matrix = m["e_matrix"].as<double>(c.e_matrix);
      c.e_aggregate = m["e_aggregate"].as<double>(c.e_aggregate);
      if (m["ratio"]) c.e_aggregate = m["ratio"].as<double>() * c.e_matrix;
      c.poisson = m["poisson"].as<double>(c.poisson);
      const auto plane = m["plane"].as<std::string>("strain");
      if (plane == "strain")
        c.plane = PlaneModel::strain;
      else if (plane == "stress")
        c.plane = PlaneModel::stress;
      else
        throw std::invalid_argument("material.plane must be strain or stress");
    }
    if (root["basis"]) c.basis = basis_kind_from_string(root["basis"].as<std::string>());
    if (root["training_set"]) c.training = training_kind_from_string(root["training_set"].as<std::string>());
    if (const auto n = root["n_mpe"]) {
      c.n_mpe.clear();
      if (n.IsSequence())
        for (const auto& v : n) c.n_mpe.push_back(v.as<int>());
      else
        c.n_mpe.push_back(n.as<int>());
    }
    if (const auto rf = root["rangefinder"]) {
      c.rangefinder.tol = rf["tol"].as<double>(c.rangefinder.tol);
      c.rangefinder.n_t = rf["n_t"].as<int>(c.rangefinder.n_t);
      c.rangefinder.eps_algofail = rf["eps_algofail"].as<double>(c.rangefinder.eps_algofail);
      c.rangefinder.stall_factor = rf["stall_factor"].as<int>(c.rangefinder.stall_factor);
    }
    c.edge_pod_tol = root["edge_pod_tol"].as<double>(c.edge_pod_tol);
    if (c.basis == BasisKind::empirical && !root["seed"])
      throw std::invalid_argument("config: 'seed' is required for the empirical basis");
    c.seed = root["seed"].as<std::uint64_t>(c.seed);
    c.output = root["output"].as<std::string>(c.output);
    if (const auto b = root["block"]) {
      c.block_a = matrix2(b["a"], c.block_a);
      c.block_b = matrix2(b["b"], c.block_b);
    }
    if (const auto l = root["lpanel"]) c.t_y = l["t_y"].as<double>(c.t_y);
    if (const auto s = root["projection_study"]) {
      c.study_problem = experiment_kind_from_string(s["problem"].as<std::string>("lpanel"));
      c.n_test = s["n_test"].as<int>(c.n_test);
      c.study_grid_empirical = s["empirical_grid"].as<int>(c.study_grid_empirical);
      c.study_grid_spectral = s["spectral_grid"].as<int>(c.study_grid_spectral);
    }
  } catch (const YAML::Exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

}  // namespace lmor
