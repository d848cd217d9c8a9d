#include "herglotz/euler_lagrange.hpp"

#include <cmath>

#include "herglotz/stencil.hpp"

namespace herglotz {

double ELReport::max_residual() const {
  return std::max(std::max(max_early, max_late), max_transversality);
}

namespace {

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::fabs(x));
  return m;
}

}  // namespace

ELReport el_residual(const HerglotzProblem& problem, const Grid& grid,
                     const TrajectoryJets& jets, std::span<const double> z,
                     std::span<const double> psi_z) {
  const int n = problem.n;
  const int m = problem.m;
  const int M = grid.M;
  const int K = grid.K;

  const int early_len = grid.tau == 0.0 ? 0 : K - M + 1;  // nodes of [a, b - tau]
  const int late_len = grid.tau == 0.0 ? K + 1 : M + 1;   // nodes of [b - tau, b]
  const int min_nodes = 2 * n + 5;
  if ((early_len > 0 && early_len < min_nodes) || late_len < min_nodes)
    throw NumericalError("el_residual: grid too coarse for order-" + std::to_string(n) +
                         " stencils (needs >= " + std::to_string(min_nodes) +
                         " nodes per branch)");

  std::vector<std::vector<Expression>> dLdx(n + 1), dLdxt(n + 1);
  for (int k = 0; k <= n; ++k)
    for (int j = 1; j <= m; ++j) {
      dLdx[k].push_back(problem.lagrangian.differentiate(slot_x(k, j)));
      dLdxt[k].push_back(problem.lagrangian.differentiate(slot_xt(k, j)));
    }

  std::vector<EvalEnv> envs;
  envs.reserve(K + 1);
  for (int i = 0; i <= K; ++i)
    envs.push_back(lagrangian_env(problem, grid, jets, z[i], M + i));

  ELReport report;
  report.n = n;
  report.m = m;

  if (grid.tau == 0.0) {
    // single branch on [a, b]; delayed slots alias the current ones
    report.late_first_node = M;
    report.late.assign((size_t)late_len * m, 0.0);
    for (int j = 1; j <= m; ++j)
      for (int l = 0; l <= n; ++l) {
        std::vector<double> prod(K + 1);
        for (int i = 0; i <= K; ++i)
          prod[i] =
              psi_z[i] * (dLdx[l][j - 1].evaluate(envs[i]) + dLdxt[l][j - 1].evaluate(envs[i]));
        std::vector<double> dl =
            l == 0 ? prod : series_derivative(prod, grid.h, l);
        const double sign = (l % 2 == 0) ? 1.0 : -1.0;
        for (int i = 0; i <= K; ++i) report.late[(size_t)i * m + (j - 1)] += sign * dl[i];
      }
  } else {
    report.early_first_node = M;
    report.early.assign((size_t)early_len * m, 0.0);
    report.late_first_node = K;  // global node of b - tau
    report.late.assign((size_t)late_len * m, 0.0);
    for (int j = 1; j <= m; ++j)
      for (int l = 0; l <= n; ++l) {
        const double sign = (l % 2 == 0) ? 1.0 : -1.0;
        // early branch on [a, b - tau]: psi(t) dL/dx^(l)(t) + psi(t+tau)
        // dL/dxt^(l)(t+tau); the advanced factor reads the environment at
        // t + tau, whose delayed jets live back at t
        std::vector<double> early(early_len);
        for (int i = 0; i < early_len; ++i) {
          double plain = psi_z[i] * dLdx[l][j - 1].evaluate(envs[i]);
          double adv = psi_z[i + M] * dLdxt[l][j - 1].evaluate(envs[i + M]);
          early[i] = plain + adv;
        }
        std::vector<double> de = l == 0 ? early : series_derivative(early, grid.h, l);
        for (int i = 0; i < early_len; ++i)
          report.early[(size_t)i * m + (j - 1)] += sign * de[i];

        // late branch on [b - tau, b]: no advanced term
        std::vector<double> late(late_len);
        for (int i = 0; i < late_len; ++i) {
          const int zi = K - M + i;
          late[i] = psi_z[zi] * dLdx[l][j - 1].evaluate(envs[zi]);
        }
        std::vector<double> dlate = l == 0 ? late : series_derivative(late, grid.h, l);
        for (int i = 0; i < late_len; ++i)
          report.late[(size_t)i * m + (j - 1)] += sign * dlate[i];
      }
    double gap = 0.0;
    for (int j = 0; j < m; ++j)
      gap = std::max(gap, std::fabs(report.early[(size_t)(early_len - 1) * m + j] -
                                    report.late[(size_t)0 * m + j]));
    report.junction_gap = gap;
  }

  // transversality at t = b: for each k = 1..n the alternating sum of
  // stencil derivatives of psi_z dL/dx^(l+k), evaluated at the last node
  report.transversality.assign((size_t)n * m, 0.0);
  for (int k = 1; k <= n; ++k)
    for (int j = 1; j <= m; ++j) {
      double acc = 0.0;
      for (int l = 0; l <= n - k; ++l) {
        std::vector<double> prod(K + 1);
        for (int i = 0; i <= K; ++i) {
          double v = dLdx[l + k][j - 1].evaluate(envs[i]);
          if (grid.tau == 0.0) v += dLdxt[l + k][j - 1].evaluate(envs[i]);
          prod[i] = psi_z[i] * v;
        }
        const double sign = (l % 2 == 0) ? 1.0 : -1.0;
        acc += sign * (l == 0 ? prod[K] : series_derivative_at(prod, grid.h, l, K));
      }
      report.transversality[(size_t)(k - 1) * m + (j - 1)] = acc;
    }

  report.max_early = max_abs(report.early);
  report.max_late = max_abs(report.late);
  report.max_transversality = max_abs(report.transversality);
  return report;
}

ExtremalVerdict is_extremal(const ELReport& report, double tol, bool free_endpoint) {
  ExtremalVerdict v;
  v.extremal = true;
  v.worst_value = 0.0;
  auto consider = [&](double value, const std::string& where) {
    if (std::fabs(value) > v.worst_value) {
      v.worst_value = std::fabs(value);
      v.worst = where;
    }
  };
  const int m = report.m;
  for (size_t i = 0; i < report.early.size(); ++i)
    consider(report.early[i], "early branch node " +
                                  std::to_string(report.early_first_node + (int)(i / m)) +
                                  " component " + std::to_string(1 + (int)(i % m)));
  for (size_t i = 0; i < report.late.size(); ++i)
    consider(report.late[i], "late branch node " +
                                 std::to_string(report.late_first_node + (int)(i / m)) +
                                 " component " + std::to_string(1 + (int)(i % m)));
  if (free_endpoint)
    for (size_t i = 0; i < report.transversality.size(); ++i)
      consider(report.transversality[i],
               "transversality k=" + std::to_string(1 + (int)(i / m)) + " component " +
                   std::to_string(1 + (int)(i % m)));
  v.extremal = v.worst_value <= tol;
  return v;
}

}  // namespace herglotz
