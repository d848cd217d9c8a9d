#pragma once

// Rewrites the delayed problem as a first-order optimal control problem
// without delay by the method of steps: tau-shifted copies of the state
// jets become channels x^{k;i}, z splits into per-block z_j, and the
// n-th jets of the active blocks play the role of controls. Implemented
// as a literal re-indexing over the shared grid so the equivalence with
// direct integration is exact.

#include <vector>

#include "herglotz/dynamics.hpp"
#include "herglotz/problem.hpp"

namespace herglotz {

struct ReducedOCP {
  int N{0};                 // number of tau-blocks covering [a, b]
  int steps_per_block{0};   // grid steps per block (= M)
  int active_steps_last{0}; // active steps of block N; < M when b - a is
                            // not an integer multiple of tau (the block
                            // Lagrangian is zero on the padded tail)
  double block_length{0};   // tau
  int n{0}, m{0};
  double gamma{0};
  // L_j for j = 1..N: the Lagrangian with t rebound to block-local time
  // (t -> t + a + (j-1) tau). Block j reads its current jets from the
  // x^{k;j} channels and its delayed jets from x^{k;j-1}.
  std::vector<Expression> block_lagrangians;

  // channel counts; i = 0..N for the state jets (block 0 is the history
  // and never a decision variable), j = 1..N+1 for z (block N+1 is the
  // constant dummy)
  int state_channels() const { return (n + 1) * m * (N + 1); }
  int z_channels() const { return N + 1; }
  double payoff_time() const;  // block-local time where z_N is read
};

// Throws std::invalid_argument when tau = 0 (use the direct mode).
ReducedOCP reduce(const HerglotzProblem& problem, const Grid& grid);

// Block-wise jet samples x^{k;i}(l h) = x^(k)(a + (i-1) tau + l h).
// Padded locals of block N hold zero.
struct LiftedBlocks {
  int N{0}, steps{0}, n{0}, m{0};
  int active_steps_last{0};
  std::vector<double> data;

  double at(int k, int i, int local, int comp) const {
    return data[(((size_t)i * (n + 1) + k) * (steps + 1) + local) * m + (comp - 1)];
  }
  double& at(int k, int i, int local, int comp) {
    return data[(((size_t)i * (n + 1) + k) * (steps + 1) + local) * m + (comp - 1)];
  }
};

LiftedBlocks lift(const TrajectoryJets& jets, const ReducedOCP& reduced);

// Inverse of lift on the order-0 channel: x samples node-for-node.
std::vector<double> project(const LiftedBlocks& blocks, const Grid& grid);

// Sequential block integration of zdot_j = L_j with the linkage
// conditions z_1(0) = gamma, z_j(0) = z_{j-1}(tau). Same one-step scheme
// as integrate_z. Returns one series per block j = 1..N; z(b) is the
// last value of block N.
std::vector<std::vector<double>> integrate_reduced(const HerglotzProblem& problem,
                                                   const Grid& grid,
                                                   const TrajectoryJets& jets,
                                                   const ReducedOCP& reduced);

double reduced_terminal_z(const std::vector<std::vector<double>>& block_z);

}  // namespace herglotz
