#pragma once

#include "lmor/types.hpp"

namespace lmor {

/// Lagrange polynomial of degree q through q+1 equally spaced nodes on
/// [-1, 1], equal to one at node k.
double lagrange_1d(int q, int k, double xi);
double lagrange_1d_derivative(int q, int k, double xi);

/// Bilinear vertex shape on the reference square; j in (bl, br, tr, tl) order.
double coarse_shape(int j, double xi, double eta);

/// Macro-shape family used to parameterize oversampling boundary data.
enum class MacroFamily { serendipity, biquadratic };

/// Number of nodes: 8 (serendipity) or 9 (biquadratic).
int macro_node_count(MacroFamily family);

/// Reference coordinates of macro node i: corners (bl, br, tr, tl), midsides
/// (bottom, right, top, left), then the center for the biquadratic family.
Vec2 macro_node(int i);

/// 8-node serendipity shape i.
double serendipity_quadratic(int i, double xi, double eta);

/// 9-node tensor-product quadratic shape i.
double biquadratic_shape(int i, double xi, double eta);

double macro_shape(MacroFamily family, int i, double xi, double eta);

/// Integrated Legendre edge function of degree p+1 (p >= 1), zero at both ends.
/// Its derivative is 2p times the Legendre polynomial of degree p.
double hierarchical_edge_fn(int p, double xi);

}  // namespace lmor
