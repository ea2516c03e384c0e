#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "lmor/shapefn.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <cmath>
#include <random>

using namespace lmor;

namespace {

std::vector<double> random_points(int n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> out(n);
  for (auto& x : out) x = u(rng);
  return out;
}

}  // namespace

TEST_CASE("lagrange nodal property and partition of unity") {
  CHECK(lagrange_1d(1, 0, -1.0) == 1.0);
  CHECK(lagrange_1d(1, 0, 1.0) == 0.0);
  for (int q = 1; q <= 4; ++q) {
    for (int k = 0; k <= q; ++k)
      for (int m = 0; m <= q; ++m)
        CHECK(lagrange_1d(q, k, -1.0 + 2.0 * m / q) == doctest::Approx(k == m ? 1.0 : 0.0).epsilon(1e-14));
    for (double xi : random_points(20, q)) {
      double sum = 0.0;
      for (int k = 0; k <= q; ++k) sum += lagrange_1d(q, k, xi);
      CHECK(std::abs(sum - 1.0) <= 1e-12);
    }
  }
  CHECK(lagrange_1d(2, 1, 0.5) == doctest::Approx(0.75).epsilon(1e-15));
  CHECK_THROWS_AS(lagrange_1d(2, 3, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(lagrange_1d(0, 0, 0.0), std::invalid_argument);
}

TEST_CASE("lagrange reproduces monomials") {
  for (int q = 1; q <= 4; ++q) {
    for (int m = 0; m <= q; ++m) {
      for (double xi : random_points(10, 10 + q)) {
        double v = 0.0;
        double dv = 0.0;
        for (int k = 0; k <= q; ++k) {
          const double xk = -1.0 + 2.0 * k / q;
          v += lagrange_1d(q, k, xi) * std::pow(xk, m);
          dv += lagrange_1d_derivative(q, k, xi) * std::pow(xk, m);
        }
        CHECK(std::abs(v - std::pow(xi, m)) <= 1e-12);
        CHECK(std::abs(dv - (m == 0 ? 0.0 : m * std::pow(xi, m - 1))) <= 1e-11);
      }
    }
  }
}

TEST_CASE("bilinear coarse shapes") {
  for (int j = 0; j < 4; ++j) {
    for (int v = 0; v < 4; ++v) {
      const Vec2 x = macro_node(v);
      CHECK(coarse_shape(j, x.x(), x.y()) == (j == v ? 1.0 : 0.0));
    }
    CHECK(coarse_shape(j, 0.0, 0.0) == 0.25);
  }
  const auto pts = random_points(40, 3);
  for (std::size_t k = 0; k + 1 < pts.size(); k += 2) {
    double sum = 0.0;
    for (int j = 0; j < 4; ++j) sum += coarse_shape(j, pts[k], pts[k + 1]);
    CHECK(std::abs(sum - 1.0) <= 1e-14);
  }
}

TEST_CASE("serendipity shapes") {
  for (int i = 0; i < 8; ++i) {
    for (int n = 0; n < 8; ++n) {
      const Vec2 x = macro_node(n);
      CHECK(serendipity_quadratic(i, x.x(), x.y()) == doctest::Approx(i == n ? 1.0 : 0.0));
    }
  }
  for (int i = 4; i < 8; ++i) CHECK(serendipity_quadratic(i, 0.0, 0.0) == 0.5);
  const auto pts = random_points(60, 4);
  for (std::size_t k = 0; k + 1 < pts.size(); k += 2) {
    const double xi = pts[k], eta = pts[k + 1];
    // reproduces the 8-term quadratic space
    auto poly = [](const Vec2& x) {
      return 0.3 - x.x() + 2.0 * x.y() + 0.5 * x.x() * x.x() - x.x() * x.y() + 0.7 * x.y() * x.y() +
             0.2 * x.x() * x.x() * x.y() - 0.4 * x.x() * x.y() * x.y();
    };
    double sum = 0.0;
    double interp = 0.0;
    for (int i = 0; i < 8; ++i) {
      sum += serendipity_quadratic(i, xi, eta);
      interp += serendipity_quadratic(i, xi, eta) * poly(macro_node(i));
    }
    CHECK(std::abs(sum - 1.0) <= 1e-14);
    CHECK(std::abs(interp - poly(Vec2(xi, eta))) <= 1e-13);
  }
  CHECK_THROWS_AS(serendipity_quadratic(8, 0.0, 0.0), std::invalid_argument);
}

TEST_CASE("biquadratic shapes") {
  CHECK(macro_node_count(MacroFamily::serendipity) == 8);
  CHECK(macro_node_count(MacroFamily::biquadratic) == 9);
  for (int i = 0; i < 9; ++i)
    for (int n = 0; n < 9; ++n) {
      const Vec2 x = macro_node(n);
      CHECK(macro_shape(MacroFamily::biquadratic, i, x.x(), x.y()) == doctest::Approx(i == n ? 1.0 : 0.0));
    }
  double sum = 0.0;
  for (int i = 0; i < 9; ++i) sum += biquadratic_shape(i, 0.37, -0.81);
  CHECK(std::abs(sum - 1.0) <= 1e-14);
}

TEST_CASE("hierarchical edge functions") {
  CHECK(hierarchical_edge_fn(1, 0.0) == doctest::Approx(-1.0).epsilon(1e-15));
  for (double xi : random_points(10, 5)) CHECK(hierarchical_edge_fn(1, xi) == doctest::Approx(xi * xi - 1.0));
  for (int p = 1; p <= 6; ++p) {
    CHECK(hierarchical_edge_fn(p, 1.0) == 0.0);
    CHECK(hierarchical_edge_fn(p, -1.0) == 0.0);
    CHECK(std::abs(hierarchical_edge_fn(p, std::nextafter(1.0, 0.0))) <= 1e-13);
  }
  CHECK_THROWS_AS(hierarchical_edge_fn(0, 0.0), std::invalid_argument);
}

TEST_CASE("hierarchical derivatives are orthogonal") {
  using boost::math::quadrature::gauss;
  const double d = 1e-6;
  auto deriv = [d](int p, double xi) {
    return (hierarchical_edge_fn(p, xi + d) - hierarchical_edge_fn(p, xi - d)) / (2.0 * d);
  };
  // derivative equals 2p P_p
  for (int p = 1; p <= 6; ++p)
    for (double xi : random_points(5, 20 + p)) {
      const double x = 0.99 * xi;
      CHECK(deriv(p, x) == doctest::Approx(2.0 * p * std::legendre(p, x)).epsilon(1e-7));
    }
  for (int p = 1; p <= 6; ++p) {
    for (int q = 1; q <= 6; ++q) {
      const double v = gauss<double, 10>::integrate(
          [&](double x) { return 4.0 * p * q * std::legendre(p, x) * std::legendre(q, x); }, -1.0, 1.0);
      if (p == q)
        CHECK(v == doctest::Approx(8.0 * p * p / (2.0 * p + 1.0)));
      else
        CHECK(std::abs(v) <= 1e-13);
    }
  }
}
