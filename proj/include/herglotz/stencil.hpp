#pragma once

// Finite-difference weights on arbitrary node sets (Fornberg recursion),
// derivatives of uniformly sampled series, and tail quadrature.

#include <span>
#include <vector>

namespace herglotz {

// Weights w with f^(k)(x0) ~ sum_i w[i] f(xs[i]). Requires xs.size() > k.
std::vector<double> fd_weights(double x0, std::span<const double> xs, int k);

// k-th derivative of a uniformly sampled series with step h. Central
// stencils of order >= 4 in the interior, shifted stencils of
// `sided_points` points near the ends (defaults to k+2, order >= 2).
// Requires v.size() >= k+2.
std::vector<double> series_derivative(std::span<const double> v, double h, int k,
                                      int sided_points = 0);

// Same derivative evaluated at a single index.
double series_derivative_at(std::span<const double> v, double h, int k, int i,
                            int sided_points = 0);

// Tail integrals of a uniformly sampled integrand: out[i] = integral from
// node i to the last node. Composite Simpson over interval pairs; when an
// odd interval count remains, the first interval is integrated with a
// 4-point cubic rule. Exact for constant integrands; O(h^4) for smooth
// ones. Requires v.size() >= 4.
std::vector<double> tail_integrals(std::span<const double> v, double h);

}  // namespace herglotz
