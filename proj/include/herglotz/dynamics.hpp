#pragma once

// Forward integration of zdot = L[x;z], the exponential multiplier psi_z,
// the derivative-channel multipliers phi_k and the Hamiltonian series.

#include <span>
#include <vector>

#include "herglotz/problem.hpp"

namespace herglotz {

struct Multipliers {
  // psi_z[i] at node M+i, i = 0..K; psi_z(b) = 1 and psi_z > 0
  std::vector<double> psi_z;
  // phi[k-1][g*m + (j-1)] on every grid node g = 0..M+K
  std::vector<std::vector<double>> phi;
  // per k: |second-branch value minus first-branch value| at t = a,
  // maximized over components (both branch formulas apply there)
  std::vector<double> phi_junction_gap;
  // H[i] at node M+i
  std::vector<double> hamiltonian;
};

// Classical 4th-order one-step scheme on the grid. Stage values of the
// jets at half steps use linear interpolation between the two neighboring
// nodes (history-side lookups are evaluated symbolically); this is the
// scheme's accuracy limiter when the samples have curvature or kinks.
std::vector<double> integrate_z(const HerglotzProblem& problem, const Grid& grid,
                                const TrajectoryJets& jets);

// psi_z(t) = exp of the tail integral of dL/dz along the pair, by
// composite Simpson with a cubic-rule interval when the remaining node
// count is odd.
std::vector<double> compute_psi_z(const HerglotzProblem& problem, const Grid& grid,
                                  const TrajectoryJets& jets, std::span<const double> z);

// phi_k for k = 1..n. The advanced term (arguments at t + tau) is present
// on [a - tau, b - tau] and absent beyond; the non-advanced term is
// present on [a, b]. Derivatives of the node-wise products are taken by
// stencils on each smooth segment separately.
struct PhiResult {
  std::vector<std::vector<double>> phi;
  std::vector<double> junction_gap;
};
PhiResult compute_phi(const HerglotzProblem& problem, const Grid& grid,
                      const TrajectoryJets& jets, std::span<const double> z,
                      std::span<const double> psi_z);

// H(t) = sum_k phi_k . x^(k) + psi_z * L along the pair, nodes of [a, b].
std::vector<double> compute_hamiltonian(const HerglotzProblem& problem, const Grid& grid,
                                        const TrajectoryJets& jets, std::span<const double> z,
                                        std::span<const double> psi_z,
                                        const std::vector<std::vector<double>>& phi);

Multipliers compute_multipliers(const HerglotzProblem& problem, const Grid& grid,
                                const TrajectoryJets& jets, std::span<const double> z);

// Right-hand side L evaluated at an integration stage of step g -> g+1
// (g is a global node index in [M, M+K-1]). Exposed so the reduced form
// and the direct form share one evaluation path in tests.
double z_rhs_stage(const HerglotzProblem& problem, const Grid& grid, const TrajectoryJets& jets,
                   int g, int stage, double z_stage);

}  // namespace herglotz
