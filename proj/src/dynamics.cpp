#include "herglotz/dynamics.hpp"

#include <cmath>

#include "herglotz/stencil.hpp"

namespace herglotz {

namespace {

EvalEnv stage_env(const HerglotzProblem& problem, const Grid& grid, const TrajectoryJets& jets,
                  int g, int stage, double z_stage) {
  EvalEnv env;
  double t = grid.time_at(g);
  if (stage == 1) t += 0.5 * grid.h;
  if (stage == 2) t = grid.time_at(g + 1);
  env.bind_time(t);
  env.bind_z(z_stage);
  const int n = problem.n;
  const int m = problem.m;
  std::vector<double> xj((size_t)(n + 1) * m), xtj((size_t)(n + 1) * m);
  for (int k = 0; k <= n; ++k)
    for (int j = 1; j <= m; ++j) {
      double cur = jets.at_stage(k, g, stage, j);
      xj[(size_t)k * m + (j - 1)] = cur;
      xtj[(size_t)k * m + (j - 1)] =
          grid.tau == 0.0 ? cur : jets.at_stage_delayed(k, g - grid.M, stage, j);
    }
  env.bind_state_jets(n, m, std::move(xj));
  env.bind_delayed_jets(n, m, std::move(xtj));
  return env;
}

}  // namespace

double z_rhs_stage(const HerglotzProblem& problem, const Grid& grid, const TrajectoryJets& jets,
                   int g, int stage, double z_stage) {
  return problem.lagrangian.evaluate(stage_env(problem, grid, jets, g, stage, z_stage));
}

std::vector<double> integrate_z(const HerglotzProblem& problem, const Grid& grid,
                                const TrajectoryJets& jets) {
  const double h = grid.h;
  std::vector<double> z(grid.K + 1);
  z[0] = problem.gamma;
  for (int i = 0; i < grid.K; ++i) {
    const int g = grid.M + i;
    const double zi = z[i];
    double k1 = z_rhs_stage(problem, grid, jets, g, 0, zi);
    double k2 = z_rhs_stage(problem, grid, jets, g, 1, zi + 0.5 * h * k1);
    double k3 = z_rhs_stage(problem, grid, jets, g, 1, zi + 0.5 * h * k2);
    double k4 = z_rhs_stage(problem, grid, jets, g, 2, zi + h * k3);
    z[i + 1] = zi + h / 6.0 * (k1 + 2.0 * (k2 + k3) + k4);
    if (!std::isfinite(z[i + 1]))
      throw NumericalError("integrate_z: non-finite value at step " + std::to_string(i));
  }
  return z;
}

std::vector<double> compute_psi_z(const HerglotzProblem& problem, const Grid& grid,
                                  const TrajectoryJets& jets, std::span<const double> z) {
  const Expression dLdz = problem.lagrangian.differentiate(slot_z());
  std::vector<double> g_series(grid.K + 1);
  for (int i = 0; i <= grid.K; ++i) {
    EvalEnv env = lagrangian_env(problem, grid, jets, z[i], grid.M + i);
    g_series[i] = dLdz.evaluate(env);
  }
  std::vector<double> tail = tail_integrals(g_series, grid.h);
  std::vector<double> psi(grid.K + 1);
  for (int i = 0; i <= grid.K; ++i) psi[i] = std::exp(tail[i]);
  return psi;
}

namespace {

// derivative of a segment of a node-wise product series, written back
// into an accumulator with the given sign
void accumulate_segment_derivative(std::vector<double>& acc, int acc_first,
                                   std::span<const double> segment, double h, int order,
                                   double sign) {
  if (order == 0) {
    for (size_t i = 0; i < segment.size(); ++i) acc[acc_first + i] += sign * segment[i];
    return;
  }
  if ((int)segment.size() < order + 2)
    throw NumericalError("grid too coarse to differentiate a multiplier segment of order " +
                         std::to_string(order));
  std::vector<double> d = series_derivative(segment, h, order);
  for (size_t i = 0; i < d.size(); ++i) acc[acc_first + i] += sign * d[i];
}

}  // namespace

PhiResult compute_phi(const HerglotzProblem& problem, const Grid& grid,
                      const TrajectoryJets& jets, std::span<const double> z,
                      std::span<const double> psi_z) {
  const int n = problem.n;
  const int m = problem.m;
  const int M = grid.M;
  const int K = grid.K;
  const int nodes = grid.node_count();

  // partials of L with respect to every jet channel, order-major
  std::vector<std::vector<Expression>> dLdx(n + 1), dLdxt(n + 1);
  for (int k = 0; k <= n; ++k)
    for (int j = 1; j <= m; ++j) {
      dLdx[k].push_back(problem.lagrangian.differentiate(slot_x(k, j)));
      dLdxt[k].push_back(problem.lagrangian.differentiate(slot_xt(k, j)));
    }

  // environments along [a, b]
  std::vector<EvalEnv> envs;
  envs.reserve(K + 1);
  for (int i = 0; i <= K; ++i)
    envs.push_back(lagrangian_env(problem, grid, jets, z[i], M + i));

  PhiResult out;
  out.phi.assign(n, std::vector<double>((size_t)nodes * m, 0.0));
  out.junction_gap.assign(n, 0.0);

  for (int k = 1; k <= n; ++k) {
    std::vector<double>& phi_k = out.phi[k - 1];
    std::vector<double> branch1_at_a(m, 0.0), branch2_at_a(m, 0.0);
    for (int j = 1; j <= m; ++j) {
      for (int l = 0; l <= n - k; ++l) {
        const double sign = (l % 2 == 0) ? -1.0 : 1.0;  // (-1)^(l+1)
        if (grid.tau == 0.0) {
          // no delay: one smooth segment on [a, b]; the delayed slots are
          // aliased to the current ones, so both partials contribute
          std::vector<double> prod(K + 1);
          for (int i = 0; i <= K; ++i)
            prod[i] = psi_z[i] * (dLdx[l + k][j - 1].evaluate(envs[i]) +
                                  dLdxt[l + k][j - 1].evaluate(envs[i]));
          std::vector<double> acc((size_t)(K + 1), 0.0);
          accumulate_segment_derivative(acc, 0, prod, grid.h, l, sign);
          for (int i = 0; i <= K; ++i) phi_k[(size_t)(M + i) * m + (j - 1)] += acc[i];
          continue;
        }

        // advanced product as a function of t on [a - tau, b - tau]:
        // psi_z(t + tau) * dL/dxt^(l+k) evaluated at t + tau
        std::vector<double> adv(K + 1);
        for (int g = 0; g <= K; ++g) adv[g] = psi_z[g] * dLdxt[l + k][j - 1].evaluate(envs[g]);
        // non-advanced product on [a, b]
        std::vector<double> plain(K + 1);
        for (int i = 0; i <= K; ++i) plain[i] = psi_z[i] * dLdx[l + k][j - 1].evaluate(envs[i]);

        // the trajectory may kink at t = a; differentiate the advanced
        // series on [a - tau, a] and [a, b - tau] separately
        std::vector<double> acc_nodes(nodes, 0.0);
        std::span<const double> adv_span(adv);
        accumulate_segment_derivative(acc_nodes, 0, adv_span.subspan(0, M + 1), grid.h, l, sign);
        std::vector<double> acc_mid(nodes, 0.0);
        accumulate_segment_derivative(acc_mid, M, adv_span.subspan(M), grid.h, l, sign);
        std::vector<double> acc_plain(nodes, 0.0);
        accumulate_segment_derivative(acc_plain, M, plain, grid.h, l, sign);

        for (int g = 0; g < M; ++g) phi_k[(size_t)g * m + (j - 1)] += acc_nodes[g];
        for (int g = M; g <= M + K; ++g) {
          double v = acc_plain[g];
          if (g <= K) v += acc_mid[g];  // advanced term exists up to b - tau
          phi_k[(size_t)g * m + (j - 1)] += v;
        }
        branch1_at_a[j - 1] += acc_nodes[M];
        branch2_at_a[j - 1] += acc_plain[M] + acc_mid[M];
      }
    }
    if (grid.tau > 0.0) {
      double gap = 0.0;
      for (int j = 0; j < m; ++j)
        gap = std::max(gap, std::fabs(branch2_at_a[j] - branch1_at_a[j]));
      out.junction_gap[k - 1] = gap;
    }
  }
  return out;
}

std::vector<double> compute_hamiltonian(const HerglotzProblem& problem, const Grid& grid,
                                        const TrajectoryJets& jets, std::span<const double> z,
                                        std::span<const double> psi_z,
                                        const std::vector<std::vector<double>>& phi) {
  const int m = problem.m;
  std::vector<double> H(grid.K + 1);
  for (int i = 0; i <= grid.K; ++i) {
    const int g = grid.M + i;
    double acc = 0.0;
    for (int k = 1; k <= problem.n; ++k)
      for (int j = 1; j <= m; ++j)
        acc += phi[k - 1][(size_t)g * m + (j - 1)] * jets.at(k, g, j);
    EvalEnv env = lagrangian_env(problem, grid, jets, z[i], g);
    acc += psi_z[i] * problem.lagrangian.evaluate(env);
    H[i] = acc;
  }
  return H;
}

Multipliers compute_multipliers(const HerglotzProblem& problem, const Grid& grid,
                                const TrajectoryJets& jets, std::span<const double> z) {
  Multipliers out;
  out.psi_z = compute_psi_z(problem, grid, jets, z);
  PhiResult pr = compute_phi(problem, grid, jets, z, out.psi_z);
  out.phi = std::move(pr.phi);
  out.phi_junction_gap = std::move(pr.junction_gap);
  out.hamiltonian = compute_hamiltonian(problem, grid, jets, z, out.psi_z, out.phi);
  return out;
}

}  // namespace herglotz
