#pragma once

// Residuals of the higher-order delayed Euler-Lagrange equations and the
// transversality conditions, used to certify candidate extremals.

#include <span>
#include <string>
#include <vector>

#include "herglotz/problem.hpp"

namespace herglotz {

struct ELReport {
  // residual on [a, b - tau] including the advanced term; empty when
  // tau = 0 (the single branch then lives in `late` on all of [a, b])
  std::vector<double> early;  // (count * m), node-major
  int early_first_node{0};
  // residual on [b - tau, b] without the advanced term
  std::vector<double> late;
  int late_first_node{0};
  // transversality residuals at t = b, k-major: n * m values
  std::vector<double> transversality;
  double max_early{0};
  double max_late{0};
  double max_transversality{0};
  // both branch values at the junction t = b - tau differ by stencil and
  // truncation effects; their gap is a useful diagnostic (0 when tau = 0)
  double junction_gap{0};

  double max_residual() const;
  int m{1}, n{1};
};

// Requires psi_z on [a, b] for the same pair. Each branch needs at
// least 2n + 5 nodes.
ELReport el_residual(const HerglotzProblem& problem, const Grid& grid,
                     const TrajectoryJets& jets, std::span<const double> z,
                     std::span<const double> psi_z);

struct ExtremalVerdict {
  bool extremal{false};
  std::string worst;   // human-readable location of the largest offender
  double worst_value{0};
};

// The transversality rows only bind when the right endpoint is free;
// pinned fixtures satisfy the equations but not the endpoint condition.
ExtremalVerdict is_extremal(const ELReport& report, double tol, bool free_endpoint = true);

}  // namespace herglotz
