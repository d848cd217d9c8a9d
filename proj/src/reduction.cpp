#include "herglotz/reduction.hpp"

#include <cmath>
#include <stdexcept>

namespace herglotz {

double ReducedOCP::payoff_time() const {
  return (double)active_steps_last * (block_length / (double)steps_per_block);
}

ReducedOCP reduce(const HerglotzProblem& problem, const Grid& grid) {
  if (grid.tau == 0.0)
    throw std::invalid_argument("reduction not applicable; use direct mode");
  ReducedOCP r;
  r.steps_per_block = grid.M;
  r.block_length = grid.tau;
  r.n = problem.n;
  r.m = problem.m;
  r.gamma = problem.gamma;
  r.N = (grid.K + grid.M - 1) / grid.M;
  r.active_steps_last = grid.K - (r.N - 1) * grid.M;

  for (int j = 1; j <= r.N; ++j) {
    const double offset = problem.a + (double)(j - 1) * grid.tau;
    ExprBuilder sb;
    std::int32_t shifted = sb.add(sb.slot(slot_t()), sb.constant(offset));
    Expression time = sb.take(shifted);
    r.block_lagrangians.push_back(problem.lagrangian.substitute(slot_t(), time));
  }
  return r;
}

LiftedBlocks lift(const TrajectoryJets& jets, const ReducedOCP& reduced) {
  const Grid& grid = jets.grid();
  if (grid.M != reduced.steps_per_block)
    throw std::invalid_argument("lift: grid does not match the reduction");
  LiftedBlocks blocks;
  blocks.N = reduced.N;
  blocks.steps = reduced.steps_per_block;
  blocks.n = reduced.n;
  blocks.m = reduced.m;
  blocks.active_steps_last = reduced.active_steps_last;
  blocks.data.assign((size_t)(reduced.N + 1) * (reduced.n + 1) * (blocks.steps + 1) * reduced.m,
                     0.0);
  for (int i = 0; i <= reduced.N; ++i) {
    const int active = (i == reduced.N) ? reduced.active_steps_last : blocks.steps;
    for (int l = 0; l <= active; ++l) {
      const int g = i * blocks.steps + l;
      for (int k = 0; k <= reduced.n; ++k)
        for (int j = 1; j <= reduced.m; ++j) blocks.at(k, i, l, j) = jets.at(k, g, j);
    }
    // the padded tail of the last block stays zero
  }
  // linkage consistency: x^{k;i}(0) = x^{k;i-1}(tau) holds by re-indexing
  for (int i = 1; i <= reduced.N; ++i)
    for (int k = 0; k <= reduced.n; ++k)
      for (int j = 1; j <= reduced.m; ++j)
        if (std::fabs(blocks.at(k, i, 0, j) - blocks.at(k, i - 1, blocks.steps, j)) > 1e-12)
          throw NumericalError("lift: block linkage mismatch");
  return blocks;
}

std::vector<double> project(const LiftedBlocks& blocks, const Grid& grid) {
  std::vector<double> x((size_t)grid.node_count() * blocks.m);
  for (int g = 0; g < grid.node_count(); ++g) {
    int i = g / blocks.steps;
    if (i > blocks.N) i = blocks.N;
    int l = g - i * blocks.steps;
    for (int j = 1; j <= blocks.m; ++j)
      x[(size_t)g * blocks.m + (j - 1)] = blocks.at(0, i, l, j);
  }
  return x;
}

namespace {

// L_j at an integration stage of block-local step l (block index j1based):
// current jets from block j, delayed jets from block j-1, t is block-local
double block_rhs(const HerglotzProblem& problem, const Grid& grid, const TrajectoryJets& jets,
                 const ReducedOCP& reduced, int j1based, int local_step, int stage,
                 double z_stage) {
  const int g = grid.M + (j1based - 1) * grid.M + local_step;  // global node of the step start
  EvalEnv env;
  double tl = (double)local_step * grid.h;
  if (stage == 1) tl += 0.5 * grid.h;
  if (stage == 2) tl = (double)(local_step + 1) * grid.h;
  env.bind_time(tl);
  env.bind_z(z_stage);
  const int n = problem.n;
  const int m = problem.m;
  std::vector<double> xj((size_t)(n + 1) * m), xtj((size_t)(n + 1) * m);
  for (int k = 0; k <= n; ++k)
    for (int j = 1; j <= m; ++j) {
      xj[(size_t)k * m + (j - 1)] = jets.at_stage(k, g, stage, j);
      xtj[(size_t)k * m + (j - 1)] = jets.at_stage_delayed(k, g - grid.M, stage, j);
    }
  env.bind_state_jets(n, m, std::move(xj));
  env.bind_delayed_jets(n, m, std::move(xtj));
  return reduced.block_lagrangians[j1based - 1].evaluate(env);
}

}  // namespace

std::vector<std::vector<double>> integrate_reduced(const HerglotzProblem& problem,
                                                   const Grid& grid, const TrajectoryJets& jets,
                                                   const ReducedOCP& reduced) {
  const double h = grid.h;
  std::vector<std::vector<double>> zs(reduced.N);
  double link = reduced.gamma;
  for (int j = 1; j <= reduced.N; ++j) {
    const int active = (j == reduced.N) ? reduced.active_steps_last : reduced.steps_per_block;
    std::vector<double>& z = zs[j - 1];
    z.resize(reduced.steps_per_block + 1);
    z[0] = link;
    if (j > 1 && std::fabs(z[0] - zs[j - 2][reduced.steps_per_block]) > 1e-12)
      throw NumericalError("integrate_reduced: z linkage mismatch");
    for (int l = 0; l < active; ++l) {
      const double zl = z[l];
      double k1 = block_rhs(problem, grid, jets, reduced, j, l, 0, zl);
      double k2 = block_rhs(problem, grid, jets, reduced, j, l, 1, zl + 0.5 * h * k1);
      double k3 = block_rhs(problem, grid, jets, reduced, j, l, 1, zl + 0.5 * h * k2);
      double k4 = block_rhs(problem, grid, jets, reduced, j, l, 2, zl + h * k3);
      z[l + 1] = zl + h / 6.0 * (k1 + 2.0 * (k2 + k3) + k4);
      if (!std::isfinite(z[l + 1]))
        throw NumericalError("integrate_reduced: non-finite value in block " + std::to_string(j));
    }
    // zdot = 0 on the padded tail of the last block
    for (int l = active; l < reduced.steps_per_block; ++l) z[l + 1] = z[l];
    link = z[reduced.steps_per_block];
  }
  return zs;
}

double reduced_terminal_z(const std::vector<std::vector<double>>& block_z) {
  return block_z.back().back();
}

}  // namespace herglotz
