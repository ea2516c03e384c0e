#pragma once

#include "lmor/basis.hpp"
#include "lmor/config.hpp"
#include "lmor/io.hpp"
#include "lmor/metrics.hpp"
#include "lmor/rangefinder.hpp"
#include "lmor/rom.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace lmor {

// ---------------------------------------------------------------------------
// Structures
// ---------------------------------------------------------------------------

/// u_i = a_ij x_j + b_ij x_j^2.
Vec2 block_dirichlet(const Eigen::Matrix2d& a, const Eigen::Matrix2d& b, const Vec2& x);

struct BeamSolution {
  Vec2 u;
  double sigma_xx;
};

/// Pure bending of a beam of height c under sigma_xx = 240 y / c - 120,
/// with u = 0 on x = 0 and v(0, 0) = 0.
BeamSolution beam_analytical(const Vec2& x, double young, double poisson, double c, PlaneModel model);

/// Hat load over [x_peak - h, x_peak + h], zero outside.
double hat(double x, double x_peak, double h, double peak);

struct Problem {
  CoarseGrid grid;
  GlobalBc bc;
  FineMesh rce;
  Material material;
};

Problem make_problem(const ExperimentConfig& cfg);
Problem make_problem(const ExperimentConfig& cfg, ExperimentKind kind);

// ---------------------------------------------------------------------------
// Offline stage
// ---------------------------------------------------------------------------

struct ConfigStats {
  int id = 0;
  std::string key;
  int priority = 0;
  int n_members = 0;
  int n_snapshots = 0;
  int n_soi = 0;
  int n_random = 0;
  double c_est = 0.0;
  double estimate = 0.0;
  std::array<int, 4> n_modes{};
  double seconds = 0.0;
};

struct OfflineResult {
  BasisKind kind = BasisKind::empirical;
  TrainingKind training = TrainingKind::soi;
  int n_mpe_max = 0;
  GlobalEdgeModes modes;
  std::vector<BasisMatrix> unique_bases;
  std::vector<int> cell_basis;
  std::vector<ConfigStats> stats;
  double seconds = 0.0;
};

/// Edge modes of one oversampling configuration.
struct ConfigTraining {
  SnapshotSet snapshots;
  EdgePodResult edges;
  ConfigStats stats;
};

/// max_modes < 0 keeps every POD mode above the tolerance.
ConfigTraining train_configuration(const Problem& p, const Configuration& cfg, const ExperimentConfig& ec,
                                   TrainingKind training, const Vector& coarse_solution, int max_modes, Exec exec);

OfflineResult run_offline(const Problem& p, const ExperimentConfig& ec, BasisKind kind, TrainingKind training,
                          Exec exec = Exec::parallel);

/// First n_mpe modes of every side block.
BasisMatrix truncate_basis(const BasisMatrix& b, int n_mpe);
std::vector<BasisMatrix> cell_bases(const OfflineResult& r, int n_mpe);

void save_offline(const OfflineResult& r, const ExperimentConfig& ec, const std::filesystem::path& dir);
OfflineResult load_offline(const std::filesystem::path& dir);

// ---------------------------------------------------------------------------
// Online stage and comparison
// ---------------------------------------------------------------------------

RomSolution run_online(const Problem& p, const OfflineResult& r, int n_mpe, Exec exec = Exec::parallel);

ErrorReport compare(const Problem& p, const FomSolution& fom, const RomSolution& rom, BasisKind kind, int n_mpe);

/// Columns basis, training_set, n_mpe, N_dofs, abs_err, rel_err.
CsvTable error_table();
void add_error_row(CsvTable& t, const ErrorReport& r, TrainingKind training);

// ---------------------------------------------------------------------------
// Projection-error study
// ---------------------------------------------------------------------------

/// Interior configuration with the most members.
const Configuration& interior_configuration(const std::vector<Configuration>& configs);

/// Columns basis, training_set, testing_set, n_local, N_dofs, max_rel_err.
CsvTable run_projection_study(const ExperimentConfig& ec, Exec exec = Exec::parallel);

std::filesystem::path offline_dir(const std::filesystem::path& out, BasisKind kind, TrainingKind training);

}  // namespace lmor
