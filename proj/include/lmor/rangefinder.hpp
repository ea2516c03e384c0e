#pragma once

#include "lmor/basis.hpp"
#include "lmor/fem.hpp"
#include "lmor/mesh.hpp"
#include "lmor/parallel.hpp"
#include "lmor/shapefn.hpp"

#include <cstdint>
#include <random>

namespace lmor {

// ---------------------------------------------------------------------------
// Transfer operator of one oversampling configuration
// ---------------------------------------------------------------------------

/// Maps data on the training boundary of a patch to the patch solution
/// restricted to the target cell (RCE DoF layout).
///
/// Global Dirichlet DoFs take precedence over the training boundary where
/// both meet, so source() excludes them.
class TransferOperator {
 public:
  /// `bc` is the global boundary condition on cfg.grid; it is ignored when
  /// cfg.uses_global_bc is false.
  TransferOperator(const Configuration& cfg, const FineMesh& rce, const Material& material, const GlobalBc& bc,
                   Exec exec = Exec::parallel);

  const PatchMesh& patch() const { return patch_; }
  int target_cell() const { return target_; }
  const std::vector<int>& source() const { return source_; }
  int source_dim() const { return static_cast<int>(source_.size()); }
  int range_dim() const { return static_cast<int>(range_gramian_.rows()); }
  /// L2 Gramian on the training boundary.
  const SparseMatrix& source_gramian() const { return source_gramian_; }
  /// Energy Gramian of the target cell.
  const SparseMatrix& range_gramian() const { return range_gramian_; }
  double lambda_min_source() const { return lambda_min_; }
  /// Euclidean-orthonormal rigid motions of the target cell (energy null space).
  const Matrix& range_kernel() const { return range_kernel_; }
  /// Upper bound on the operator rank: min(source_dim, range_dim).
  int rank_bound() const { return std::min(source_dim(), range_dim()); }
  /// True when global loads or nonzero global Dirichlet data act on the patch.
  bool has_affine_part() const { return affine_; }

  /// Full patch solution. With `homogeneous` set, the global data on the
  /// patch boundary is replaced by zero and the map is linear.
  Vector solve_patch(const Vector& g, bool homogeneous = true) const;
  Vector apply(const Vector& g, bool homogeneous = true) const;
  Matrix apply(const Matrix& g, bool homogeneous, Exec exec = Exec::parallel) const;

 private:
  PatchMesh patch_;
  int target_;
  std::vector<int> source_;
  std::vector<int> fixed_;
  Vector fixed_values_;
  Vector load_;
  bool affine_ = false;
  SparseMatrix source_gramian_;
  SparseMatrix range_gramian_;
  double lambda_min_ = 0.0;
  Matrix range_kernel_;
  std::optional<ConstrainedSolver> solver_;
};

// ---------------------------------------------------------------------------
// Training data
// ---------------------------------------------------------------------------

enum class TrainingKind { soi, random };

std::string to_string(TrainingKind kind);
TrainingKind training_kind_from_string(const std::string& name);

/// Vector of i.i.d. standard normal entries.
Vector random_boundary_vector(std::mt19937_64& rng, int dim);

/// Independent generator for one purpose (test vectors, training draws,
/// testing sets) derived from a user seed.
std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream);

enum Stream : std::uint64_t { kTestVectorStream = 1, kTrainingStream = 2, kTestingSetStream = 3 };

struct PodResult {
  Matrix modes;        // orthonormal in the given inner product
  Vector eigenvalues;  // all eigenvalues of the correlation matrix, non-increasing, >= 0
  Matrix coefficients; // eigenvectors of the retained modes (columns)
  int n_modes() const { return static_cast<int>(modes.cols()); }
};

/// POD by the method of snapshots. Truncates at the smallest n with
/// sum_{k>n} lambda_k <= rel_tol * sum lambda_k, capped by max_modes
/// (negative = no cap). Throws std::invalid_argument for an all-zero set.
PodResult pod(const Matrix& snapshots, const SparseMatrix& gramian, double rel_tol, int max_modes = -1);

/// Macro displacement states of the configuration members.
struct SoiData {
  Matrix samples;     // g(alpha) per member on source DoFs
  PodResult pod;      // compression of `samples` in the source L2 product
  Matrix training;    // POD-compressed training vectors S v_k, by decreasing energy
};

/// Samples the macro field of a coarse solution through 8-node serendipity
/// (or 9-node) shapes on the patch bounding box of every member cell.
SoiData soi_training_set(const TransferOperator& op, const Configuration& cfg, const CoarseGrid& global,
                         const Vector& coarse_solution, MacroFamily family = MacroFamily::serendipity,
                         double pod_tol = 1e-6);

// ---------------------------------------------------------------------------
// Adaptive randomized range approximation
// ---------------------------------------------------------------------------

struct RangeFinderParams {
  double tol = 1e-3;
  int n_t = 20;
  double eps_algofail = 1e-15;
  /// Abort after stall_factor * n_t draws without a relative reduction of
  /// stall_reduction in the estimator.
  int stall_factor = 5;
  double stall_reduction = 1e-3;

  void validate() const;
};

/// c_est = 1 / (sqrt(2 lambda_min) erfinv(eps_testfail^(1/n_t))).
double estimator_factor(double lambda_min, int n_t, double eps_testfail);

enum class SampleTag { affine, soi, random };

struct SnapshotSet {
  Matrix snapshots;  // target-cell solutions, one per accepted draw
  std::vector<SampleTag> tags;
  Matrix test_vectors;  // final test vectors (orthogonal to the range basis)
  Matrix range_basis;   // energy-orthonormal basis of span(snapshots)
  double c_est = 0.0;
  double estimate = 0.0;  // final max test norm times c_est
  std::vector<double> history;
  int n_soi = 0;
  int n_random = 0;

  int size() const { return static_cast<int>(snapshots.cols()); }
};

/// Starts with the particular solution for zero training data when the
/// configuration carries loads or nonzero Dirichlet data. Then draws SoI
/// vectors (solved with the actual global data) and fresh random vectors
/// (homogeneous global data) until the a-posteriori estimator drops below
/// params.tol.
SnapshotSet compute_snapshots(const TransferOperator& op, const RangeFinderParams& params, const Matrix& soi_training,
                              std::uint64_t seed, Exec exec = Exec::parallel);

/// Energy-norm residual of u after projection onto an energy-orthonormal basis.
Vector project_out(const Vector& u, const Matrix& basis, const SparseMatrix& energy);

// ---------------------------------------------------------------------------
// Edge modes and spectral basis
// ---------------------------------------------------------------------------

struct EdgePodResult {
  EdgeModeSet modes;
  std::array<Vector, 4> eigenvalues;
};

/// Fine-part traces of every snapshot, POD per side with the edge L2
/// product. Sides flagged in pool_pairs[0] (bottom/top) or [1] (right/left)
/// share one snapshot pool and identical modes.
EdgePodResult edge_basis_from_snapshots(const FineMesh& rce, const Matrix& snapshots, std::array<bool, 2> pool_pairs,
                                        double rel_tol = 1e-6, int max_modes = -1);

/// Energy-orthonormal basis of the snapshots; dependent (or energy-free)
/// vectors are dropped.
Matrix spectral_basis(const Matrix& snapshots, const SparseMatrix& energy, double drop_tol = 1e-10);

}  // namespace lmor
