#pragma once

#include "lmor/basis.hpp"
#include "lmor/fem.hpp"
#include "lmor/mesh.hpp"
#include "lmor/rangefinder.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace lmor {

enum class ExperimentKind { block, beam, lpanel, projection_study };

std::string to_string(ExperimentKind kind);
ExperimentKind experiment_kind_from_string(const std::string& name);

/// Built-in RCE layouts: "type1" (one centred disk) and "type2" (four disks).
RceGeometry rce_preset(const std::string& name, int n_verts_per_edge);

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::block;
  int nx = 5;
  int ny = 5;

  RceGeometry rce = rce_preset("type1", 7);  // side length doubles as the coarse cell size
  std::string rce_name = "type1";

  double e_matrix = 30000.0;
  double e_aggregate = 60000.0;
  double poisson = 0.2;
  PlaneModel plane = PlaneModel::strain;

  BasisKind basis = BasisKind::empirical;
  TrainingKind training = TrainingKind::soi;
  std::vector<int> n_mpe{1, 2, 4, 6, 8, 10, 12, 14, 16};
  RangeFinderParams rangefinder;
  double edge_pod_tol = 1e-6;
  std::uint64_t seed = 1;
  std::string output = "out";

  // block
  Eigen::Matrix2d block_a = (Eigen::Matrix2d() << 1e-3, 2e-4, -3e-4, 5e-4).finished();
  Eigen::Matrix2d block_b = (Eigen::Matrix2d() << 2e-5, -1e-5, 1e-5, 3e-5).finished();
  // L-panel
  double t_y = 200.0;
  // projection study
  ExperimentKind study_problem = ExperimentKind::lpanel;
  int n_test = 50;
  int study_grid_empirical = 3;
  int study_grid_spectral = 6;

  /// Throws std::invalid_argument for inconsistent settings.
  void validate() const;
  Material material() const;
  int max_n_mpe() const;
  /// Canonical JSON text of every field; the basis of hash().
  std::string canonical() const;
  std::uint64_t hash() const;
};

/// Parses the YAML config format. Relative `rce.file` paths resolve
/// against `base_dir`.
ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

/// RCE geometry file: side_length, n_verts_per_edge, aggregates [[x, y, r], ...].
RceGeometry parse_rce(const std::string& text);

}  // namespace lmor
