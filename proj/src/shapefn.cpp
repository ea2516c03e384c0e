#include "lmor/shapefn.hpp"

#include <cmath>
#include <stdexcept>

namespace lmor {

namespace {

void check_lagrange(int q, int k) {
  if (q < 1) throw std::invalid_argument("Lagrange degree must be at least 1");
  if (k < 0 || k > q) throw std::invalid_argument("Lagrange node index out of range");
}

double lagrange_node(int q, int k) { return -1.0 + 2.0 * k / q; }

constexpr int kCornerX[4] = {-1, 1, 1, -1};
constexpr int kCornerY[4] = {-1, -1, 1, 1};

// 1-D quadratic node index (0 = -1, 1 = 0, 2 = +1) of a macro node along each axis
constexpr int kQuadI[9] = {0, 2, 2, 0, 1, 2, 1, 0, 1};
constexpr int kQuadJ[9] = {0, 0, 2, 2, 0, 1, 2, 1, 1};

}  // namespace

double lagrange_1d(int q, int k, double xi) {
  check_lagrange(q, k);
  const double xk = lagrange_node(q, k);
  double v = 1.0;
  for (int m = 0; m <= q; ++m) {
    if (m == k) continue;
    const double xm = lagrange_node(q, m);
    v *= (xi - xm) / (xk - xm);
  }
  return v;
}

double lagrange_1d_derivative(int q, int k, double xi) {
  check_lagrange(q, k);
  const double xk = lagrange_node(q, k);
  double sum = 0.0;
  for (int skip = 0; skip <= q; ++skip) {
    if (skip == k) continue;
    double term = 1.0 / (xk - lagrange_node(q, skip));
    for (int m = 0; m <= q; ++m) {
      if (m == k || m == skip) continue;
      const double xm = lagrange_node(q, m);
      term *= (xi - xm) / (xk - xm);
    }
    sum += term;
  }
  return sum;
}

double coarse_shape(int j, double xi, double eta) {
  if (j < 0 || j > 3) throw std::invalid_argument("coarse shape index out of range");
  return 0.25 * (1.0 + kCornerX[j] * xi) * (1.0 + kCornerY[j] * eta);
}

int macro_node_count(MacroFamily family) { return family == MacroFamily::serendipity ? 8 : 9; }

Vec2 macro_node(int i) {
  if (i < 0 || i > 8) throw std::invalid_argument("macro node index out of range");
  return {kQuadI[i] - 1.0, kQuadJ[i] - 1.0};
}

double serendipity_quadratic(int i, double xi, double eta) {
  if (i < 0 || i > 7) throw std::invalid_argument("serendipity node index out of range");
  if (i < 4) {
    const double a = kCornerX[i] * xi;
    const double b = kCornerY[i] * eta;
    return 0.25 * (1.0 + a) * (1.0 + b) * (a + b - 1.0);
  }
  const Vec2 n = macro_node(i);
  if (n.x() == 0.0) return 0.5 * (1.0 - xi * xi) * (1.0 + n.y() * eta);
  return 0.5 * (1.0 + n.x() * xi) * (1.0 - eta * eta);
}

double biquadratic_shape(int i, double xi, double eta) {
  if (i < 0 || i > 8) throw std::invalid_argument("biquadratic node index out of range");
  return lagrange_1d(2, kQuadI[i], xi) * lagrange_1d(2, kQuadJ[i], eta);
}

double macro_shape(MacroFamily family, int i, double xi, double eta) {
  return family == MacroFamily::serendipity ? serendipity_quadratic(i, xi, eta) : biquadratic_shape(i, xi, eta);
}

double hierarchical_edge_fn(int p, double xi) {
  if (p < 1) throw std::invalid_argument("hierarchical edge functions need p >= 1");
  if (xi == 1.0 || xi == -1.0) return 0.0;
  const auto up = static_cast<unsigned>(p);
  return 2.0 * p * (std::legendre(up + 1, xi) - std::legendre(up - 1, xi)) / (2.0 * p + 1.0);
}

}  // namespace lmor
