#include "herglotz/problem.hpp"

#include <cmath>
#include <cstdint>

#include "herglotz/stencil.hpp"

namespace herglotz {

bool HerglotzProblem::z_independent() const {
  Expression d = lagrangian.differentiate(slot_z());
  return d.is_constant() && d.constant_value() == 0.0;
}

std::vector<Diagnostic> validate(const HerglotzProblem& problem) {
  std::vector<Diagnostic> diags;
  auto bad = [&](const std::string& where, const std::string& message) {
    diags.push_back({where, message});
  };
  if (problem.n < 1) bad("n", "derivative order n must be >= 1");
  if (problem.m < 1) bad("m", "state dimension m must be >= 1");
  if (!(problem.b > problem.a)) bad("b", "interval must satisfy a < b");
  if (!(problem.tau >= 0.0) || !(problem.tau < problem.b - problem.a))
    bad("tau", "delay must satisfy 0 <= tau < b - a");
  if (!std::isfinite(problem.gamma)) bad("gamma", "gamma must be finite");

  const SlotVocabulary lv = problem.lagrangian_vocab();
  for (const SlotId& s : problem.lagrangian.slots()) {
    std::string err = lv.check(s);
    if (s.kind == SlotKind::GaugeJet || s.kind == SlotKind::GaugeAtA ||
        s.kind == SlotKind::GaugeAtB)
      err = "gauge slot in Lagrangian";
    if (s.kind == SlotKind::TerminalZ) err = "terminal z slot in Lagrangian";
    if (!err.empty()) bad("lagrangian", err + " (slot " + slot_name(s, problem.m, 1) + ")");
  }

  if ((int)problem.history.size() != problem.m) {
    bad("history", "expected " + std::to_string(problem.m) + " history expressions, got " +
                       std::to_string(problem.history.size()));
  }
  for (size_t j = 0; j < problem.history.size(); ++j) {
    const std::string where = "history[" + std::to_string(j) + "]";
    for (const SlotId& s : problem.history[j].slots())
      if (s.kind != SlotKind::Time) bad(where, "history uses only slot t");
    // n-times differentiable: symbolic differentiation must succeed
    try {
      Expression d = problem.history[j];
      for (int k = 0; k < problem.n; ++k) d = d.differentiate(slot_t());
    } catch (const ExprError& e) {
      bad(where, std::string("history not differentiable: ") + e.what());
    }
  }
  return diags;
}

Grid make_grid(const HerglotzProblem& problem, double target_h) {
  if (!(target_h > 0.0)) throw std::invalid_argument("make_grid: target_h must be > 0");
  const double span = problem.b - problem.a;
  Grid grid;
  grid.a = problem.a;
  grid.b = problem.b;
  grid.tau = problem.tau;
  if (problem.tau == 0.0) {
    std::int64_t K = (std::int64_t)std::ceil(span / target_h - 1e-12);
    if (K < 4) K = 4;
    if (K % 2) ++K;
    grid.M = 0;
    grid.K = (int)K;
    grid.h = span / (double)K;
  } else {
    std::int64_t M = (std::int64_t)std::ceil(problem.tau / target_h - 1e-12);
    if (M < 4) M = 4;
    for (;; ++M) {
      if (M > 8'000'000)
        throw NumericalError("make_grid: could not align the delay and the interval");
      double h = problem.tau / (double)M;
      double r = span / h;
      std::int64_t K = (std::int64_t)std::llround(r);
      if (K < 1) continue;
      if (std::fabs(r - (double)K) > 1e-9 * std::max(1.0, r)) continue;
      if (K % 2) continue;
      grid.M = (int)M;
      grid.K = (int)K;
      grid.h = h;
      break;
    }
  }
  grid.times.resize(grid.node_count());
  for (int g = 0; g < grid.node_count(); ++g)
    grid.times[g] = grid.a + (double)(g - grid.M) * grid.h;
  return grid;
}

std::vector<double> admissible_samples(const HerglotzProblem& problem, const Grid& grid,
                                       const std::vector<Expression>& interior_x) {
  if ((int)interior_x.size() != problem.m)
    throw std::invalid_argument("admissible_samples: expected m interior expressions");
  std::vector<double> x((size_t)grid.node_count() * problem.m);
  for (int g = 0; g < grid.node_count(); ++g) {
    EvalEnv env;
    env.bind_time(grid.time_at(g));
    const bool history_side = g <= grid.M;
    for (int j = 0; j < problem.m; ++j) {
      const Expression& src = history_side ? problem.history[j] : interior_x[j];
      x[(size_t)g * problem.m + j] = src.evaluate(env);
    }
  }
  return x;
}

std::vector<Diagnostic> check_admissible(const HerglotzProblem& problem, const Grid& grid,
                                         std::span<const double> x_samples) {
  std::vector<Diagnostic> diags;
  if ((int)x_samples.size() != grid.node_count() * problem.m) {
    diags.push_back({"x", "sample count does not match the grid"});
    return diags;
  }
  for (int g = 0; g <= grid.M; ++g) {
    EvalEnv env;
    env.bind_time(grid.time_at(g));
    for (int j = 0; j < problem.m; ++j) {
      double mu = problem.history[j].evaluate(env);
      double xv = x_samples[(size_t)g * problem.m + j];
      if (std::fabs(xv - mu) > 1e-12 * std::max(1.0, std::fabs(mu)))
        diags.push_back({"x[" + std::to_string(g) + "]",
                         "history mismatch in component " + std::to_string(j + 1)});
    }
  }
  return diags;
}

TrajectoryJets::TrajectoryJets(const HerglotzProblem& problem, const Grid& grid,
                               std::span<const double> x_samples, int max_order)
    : grid_(&grid), m_(problem.m), max_order_(max_order), history_nodes_(grid.M) {
  if ((int)x_samples.size() != grid.node_count() * m_)
    throw std::invalid_argument("TrajectoryJets: sample count does not match the grid");

  history_derivs_.resize(max_order_ + 1);
  history_derivs_[0] = problem.history;
  for (int k = 1; k <= max_order_; ++k) {
    history_derivs_[k].reserve(m_);
    for (int j = 0; j < m_; ++j)
      history_derivs_[k].push_back(history_derivs_[k - 1][j].differentiate(slot_t()));
  }

  const int nodes = grid.node_count();
  const int traj_first = grid.M;          // t = a
  const int traj_len = grid.K + 1;
  jets_.assign(max_order_ + 1, std::vector<double>((size_t)nodes * m_, 0.0));

  for (int g = 0; g < nodes; ++g)
    for (int j = 0; j < m_; ++j) jets_[0][(size_t)g * m_ + j] = x_samples[(size_t)g * m_ + j];

  // history side symbolic, all orders
  for (int k = 1; k <= max_order_; ++k)
    for (int g = 0; g < traj_first; ++g) {
      EvalEnv env;
      env.bind_time(grid.time_at(g));
      for (int j = 0; j < m_; ++j)
        jets_[k][(size_t)g * m_ + j] = history_derivs_[k][j].evaluate(env);
    }

  // trajectory side: stencil derivatives of the samples on [a, b]
  std::vector<double> column(traj_len);
  for (int j = 0; j < m_; ++j) {
    for (int i = 0; i < traj_len; ++i)
      column[i] = x_samples[(size_t)(traj_first + i) * m_ + j];
    for (int k = 1; k <= max_order_; ++k) {
      // order-4 shifted stencils at the ends: derivatives of assembled
      // product series stay O(h^2) after one more differentiation
      std::vector<double> d = series_derivative(column, grid.h, k, k + 4);
      for (int i = 0; i < traj_len; ++i) jets_[k][(size_t)(traj_first + i) * m_ + j] = d[i];
    }
  }

  // stage jets: repeated short symmetric differences of the samples
  stage_jets_.assign(max_order_ + 1, jets_[0]);
  std::vector<double> cur(traj_len), nxt(traj_len);
  for (int j = 0; j < m_; ++j) {
    for (int i = 0; i < traj_len; ++i)
      cur[i] = x_samples[(size_t)(traj_first + i) * m_ + j];
    for (int k = 1; k <= max_order_; ++k) {
      const double h = grid.h;
      for (int i = 0; i < traj_len; ++i) {
        if (i == 0)
          nxt[i] = (-1.5 * cur[0] + 2.0 * cur[1] - 0.5 * cur[2]) / h;
        else if (i == traj_len - 1)
          nxt[i] = (1.5 * cur[i] - 2.0 * cur[i - 1] + 0.5 * cur[i - 2]) / h;
        else
          nxt[i] = (cur[i + 1] - cur[i - 1]) / (2.0 * h);
      }
      for (int i = 0; i < traj_len; ++i)
        stage_jets_[k][(size_t)(traj_first + i) * m_ + j] = nxt[i];
      cur = nxt;
    }
  }
  for (int k = 1; k <= max_order_; ++k)
    for (int g = 0; g < traj_first; ++g)
      for (int j = 0; j < m_; ++j)
        stage_jets_[k][(size_t)g * m_ + j] = jets_[k][(size_t)g * m_ + j];
}

double TrajectoryJets::stage_node(int order, int g, int component) const {
  return stage_jets_[order][(size_t)g * m_ + (component - 1)];
}

double TrajectoryJets::at(int order, int g, int component) const {
  return jets_[order][(size_t)g * m_ + (component - 1)];
}

double TrajectoryJets::at_stage(int order, int g, int stage, int component) const {
  if (stage == 0) return stage_node(order, g, component);
  if (stage == 2) return stage_node(order, g + 1, component);
  // midpoint of [g, g+1]
  const double mid_time = grid_->time_at(g) + 0.5 * grid_->h;
  if (g < history_nodes_) {
    EvalEnv env;
    env.bind_time(mid_time);
    return history_derivs_[order][component - 1].evaluate(env);
  }
  // cubic through four node jets, shifted at the segment ends; the
  // trajectory segment starts at the history junction
  static constexpr double w_low[4] = {0.3125, 0.9375, -0.3125, 0.0625};
  static constexpr double w_mid[4] = {-0.0625, 0.5625, 0.5625, -0.0625};
  static constexpr double w_high[4] = {0.0625, -0.3125, 0.9375, 0.3125};
  const int lo = history_nodes_;
  const int hi = grid_->node_count() - 1;
  int first = g - 1;
  if (first < lo) first = lo;
  if (first > hi - 3) first = hi - 3;
  const double* w = g - first == 0 ? w_low : (g - first == 1 ? w_mid : w_high);
  double acc = 0.0;
  for (int i = 0; i < 4; ++i) acc += w[i] * stage_node(order, first + i, component);
  return acc;
}

double TrajectoryJets::at_stage_delayed(int order, int g, int stage, int component) const {
  if (stage == 0) return stage_node(order, g, component);
  if (stage == 2) return stage_node(order, g + 1, component);
  const double mid_time = grid_->time_at(g) + 0.5 * grid_->h;
  if (g < history_nodes_) {
    EvalEnv env;
    env.bind_time(mid_time);
    return history_derivs_[order][component - 1].evaluate(env);
  }
  return 0.5 * (stage_node(order, g, component) + stage_node(order, g + 1, component));
}

std::vector<double> jet(const TrajectoryJets& jets, int g, int order) {
  std::vector<double> out(jets.state_dim());
  for (int j = 1; j <= jets.state_dim(); ++j) out[j - 1] = jets.at(order, g, j);
  return out;
}

EvalEnv lagrangian_env(const HerglotzProblem& problem, const Grid& grid,
                       const TrajectoryJets& jets, double z_value, int g, int jet_order_max) {
  const int kmax = jet_order_max < 0 ? problem.n : jet_order_max;
  EvalEnv env;
  env.bind_time(grid.time_at(g));
  env.bind_z(z_value);
  std::vector<double> xj((size_t)(kmax + 1) * problem.m);
  std::vector<double> xtj((size_t)(kmax + 1) * problem.m);
  const int gd = grid.tau == 0.0 ? g : g - grid.M;
  for (int k = 0; k <= kmax; ++k)
    for (int j = 1; j <= problem.m; ++j) {
      xj[(size_t)k * problem.m + (j - 1)] = jets.at(k, g, j);
      xtj[(size_t)k * problem.m + (j - 1)] = jets.at(k, gd, j);
    }
  env.bind_state_jets(kmax, problem.m, std::move(xj));
  env.bind_delayed_jets(kmax, problem.m, std::move(xtj));
  return env;
}

}  // namespace herglotz
