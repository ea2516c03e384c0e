#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace lmor {

using Vec2 = Eigen::Vector2d;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

/// Spatial dimension. Only plane problems are supported.
inline constexpr int kDim = 2;

/// Local sides of a quadrilateral subdomain, numbered bottom, right, top, left.
enum class Side : int { bottom = 0, right = 1, top = 2, left = 3 };

inline constexpr std::array<Side, 4> kSides{Side::bottom, Side::right, Side::top, Side::left};

inline const char* to_string(Side s) {
  switch (s) {
    case Side::bottom: return "bottom";
    case Side::right: return "right";
    case Side::top: return "top";
    case Side::left: return "left";
  }
  return "?";
}

/// Side facing `s` across an edge (bottom <-> top, right <-> left).
inline constexpr Side opposite(Side s) { return static_cast<Side>((static_cast<int>(s) + 2) % 4); }

/// Thrown when a linear system cannot be solved (singular, indefinite, no convergence).
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// DoF index of component `comp` of node `node` in the interleaved (x, y) layout.
inline constexpr int dof_of(int node, int comp) { return kDim * node + comp; }

}  // namespace lmor
