#pragma once

// Direct-method search for extremizers: the decision variables are the x
// samples on (a, b], the objective is z(b), optimality is certified
// afterwards through the Euler-Lagrange residuals.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "herglotz/euler_lagrange.hpp"
#include "herglotz/problem.hpp"

namespace herglotz {

enum class SolveMode { Minimize, Maximize };

struct SolveOptions {
  SolveMode mode{SolveMode::Minimize};
  int max_iters{200};
  double grad_step{1e-6};  // central-difference step, within [1e-8, 1e-3]
  double tol_grad{1e-8};   // sup-norm gradient stopping threshold
  double tol_el{1e-4};     // residual threshold for the certificate
  std::uint64_t seed{0};
  double jitter{0.0};      // amplitude of the seeded initial-guess noise
  // fixture hook: quadratic penalty pinning x(b) to given targets
  std::optional<std::vector<double>> pin_b;
  double pin_weight{1e4};
  int threads{1};          // concurrent objective evaluations in the gradient
};

struct SolveResult {
  TrajectoryPair pair;
  double objective{0};  // z(b) of the returned pair
  ELReport el;
  int iterations{0};
  bool converged{false};
  bool diverged{false};
  double grad_norm{0};
  std::string message;
};

// z(b) for the trajectory made of the history samples plus the decision
// vector (nodes strictly after a, node-major, m components per node).
double objective(const HerglotzProblem& problem, const Grid& grid,
                 std::span<const double> x_decision);

SolveResult solve_extremal(const HerglotzProblem& problem, const Grid& grid,
                           const SolveOptions& opts);

}  // namespace herglotz
