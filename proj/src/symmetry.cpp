#include "herglotz/symmetry.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "herglotz/stencil.hpp"

namespace herglotz {

// ---------------------------------------------------------------- polynomials

double Polynomial::eval(double t) const {
  double acc = 0.0;
  for (size_t i = c.size(); i-- > 0;) acc = acc * t + c[i];
  return acc;
}

Polynomial Polynomial::derivative() const {
  Polynomial d;
  if (c.size() <= 1) {
    d.c = {0.0};
    return d;
  }
  d.c.resize(c.size() - 1);
  for (size_t i = 1; i < c.size(); ++i) d.c[i - 1] = c[i] * (double)i;
  return d;
}

double Polynomial::derivative_value(int order, double t) const {
  Polynomial p = *this;
  for (int i = 0; i < order; ++i) p = p.derivative();
  return p.eval(t);
}

std::string Polynomial::describe() const {
  std::ostringstream os;
  bool first = true;
  for (size_t i = 0; i < c.size(); ++i) {
    if (c[i] == 0.0 && c.size() > 1) continue;
    if (!first) os << " + ";
    os << format_double(c[i]);
    if (i >= 1) os << "*t";
    if (i >= 2) os << "^" << i;
    first = false;
  }
  if (first) os << "0";
  return os.str();
}

std::vector<GaugeTestFunction> make_test_family(int d, std::span<const int> degrees, double a,
                                                double b, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.2, 0.2);
  const double span = b - a;
  std::vector<GaugeTestFunction> family;
  for (int deg : degrees) {
    GaugeTestFunction p;
    for (int J = 0; J < d; ++J) {
      // coefficients in normalized time keep |p'| < 1 on [a, b]
      Polynomial normalized;
      normalized.c.resize(deg + 1);
      for (int i = 0; i <= deg; ++i) normalized.c[i] = u(rng) / (double)(1 + i);
      // expand sum c_i ((t-a)/span)^i into plain powers of t
      Polynomial plain;
      plain.c.assign(deg + 1, 0.0);
      std::vector<double> base = {1.0};  // ((t-a)/span)^i coefficients
      for (int i = 0; i <= deg; ++i) {
        for (size_t r = 0; r < base.size(); ++r) plain.c[r] += normalized.c[i] * base[r];
        // multiply base by (t - a)/span
        std::vector<double> next(base.size() + 1, 0.0);
        for (size_t r = 0; r < base.size(); ++r) {
          next[r + 1] += base[r] / span;
          next[r] += base[r] * (-a / span);
        }
        base = std::move(next);
      }
      p.comps.push_back(std::move(plain));
    }
    family.push_back(std::move(p));
  }
  return family;
}

// ---------------------------------------------------------------- envs

namespace {

int required_p_orders(const GaugeGroup& group, int n) {
  // symbolic recursion shifts gauge jets up to n-1 extra orders
  return group.q + std::max(1, n);
}

}  // namespace

int gauge_jet_order(int n) { return std::max(n + 1, 2 * n - 1); }

EvalEnv alpha_env(const HerglotzProblem& problem, const Grid& grid, const TrajectoryJets& jets,
                  std::span<const double> z, const GaugeGroup& group,
                  const GaugeTestFunction* p, int g, int x_orders, int p_orders) {
  EvalEnv env;
  const double t = grid.time_at(g);
  env.bind_time(t);
  env.bind_z(z[g - grid.M]);
  env.bind_terminal_z(z.back());
  const int m = problem.m;
  std::vector<double> xj((size_t)(x_orders + 1) * m), xtj((size_t)(x_orders + 1) * m);
  const int gd = grid.tau == 0.0 ? g : g - grid.M;
  for (int k = 0; k <= x_orders; ++k)
    for (int j = 1; j <= m; ++j) {
      xj[(size_t)k * m + (j - 1)] = jets.at(k, g, j);
      xtj[(size_t)k * m + (j - 1)] = jets.at(k, gd, j);
    }
  env.bind_state_jets(x_orders, m, std::move(xj));
  env.bind_delayed_jets(x_orders, m, std::move(xtj));

  std::vector<double> pj((size_t)(p_orders + 1) * group.d, 0.0);
  std::vector<double> pa(group.d, 0.0), pb(group.d, 0.0);
  if (p != nullptr) {
    for (int I = 0; I <= p_orders; ++I)
      for (int J = 1; J <= group.d; ++J) pj[(size_t)I * group.d + (J - 1)] = p->jet(J, I, t);
    for (int J = 1; J <= group.d; ++J) {
      pa[J - 1] = p->jet(J, 0, grid.a);
      pb[J - 1] = p->jet(J, 0, grid.b);
    }
  }
  env.bind_gauge_jets(p_orders, group.d, std::move(pj));
  env.bind_gauge_boundary(std::move(pa), std::move(pb));
  return env;
}

// ---------------------------------------------------------------- identity

std::vector<Diagnostic> check_identity_at_zero(const GaugeGroup& group, int n, int m,
                                               int sample_count, std::uint64_t seed) {
  std::vector<Diagnostic> diags;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  const int p_orders = required_p_orders(group, n);
  for (int s = 0; s < sample_count; ++s) {
    EvalEnv env;
    env.bind_time(u(rng));
    double zv = u(rng);
    env.bind_z(zv);
    env.bind_terminal_z(u(rng));
    std::vector<double> xj((size_t)(n + 1) * m);
    for (double& v : xj) v = u(rng);
    std::vector<double> xtj = xj;  // sample on the diagonal
    env.bind_state_jets(n, m, std::move(xj));
    env.bind_delayed_jets(n, m, std::move(xtj));
    env.bind_gauge_jets(p_orders, group.d, std::vector<double>((p_orders + 1) * group.d, 0.0));
    env.bind_gauge_boundary(std::vector<double>(group.d, 0.0),
                            std::vector<double>(group.d, 0.0));

    auto complain = [&](const std::string& where, double gap) {
      diags.push_back({where, "not the identity at zero gauge (gap " + format_double(gap) +
                                  " at sample " + std::to_string(s) + ")"});
    };
    double tv = group.T.evaluate(env);
    if (std::fabs(tv - env.lookup(slot_t())) > 1e-12) complain("T", tv - env.lookup(slot_t()));
    for (int j = 1; j <= m; ++j) {
      double xv = group.X[j - 1].evaluate(env);
      double ref = env.lookup(slot_x(0, j));
      if (std::fabs(xv - ref) > 1e-12) {
        complain("X[" + std::to_string(j) + "]", xv - ref);
        break;
      }
    }
    double zg = group.Z.evaluate(env);
    if (std::fabs(zg - zv) > 1e-12) complain("Z", zg - zv);
    if (!diags.empty()) break;
  }
  return diags;
}

// ---------------------------------------------------------------- chain rule

namespace {

// numeric rate of change of a slot along the pair at node g
double slot_rate(const SlotId& s, const HerglotzProblem& problem, const Grid& grid,
                 const TrajectoryJets& jets, std::span<const double> z,
                 const GaugeTestFunction* p, int g) {
  switch (s.kind) {
    case SlotKind::Time: return 1.0;
    case SlotKind::StateJet: return jets.at(s.order + 1, g, s.component);
    case SlotKind::DelayedJet: {
      const int gd = grid.tau == 0.0 ? g : g - grid.M;
      return jets.at(s.order + 1, gd, s.component);
    }
    case SlotKind::Z: {
      EvalEnv env = lagrangian_env(problem, grid, jets, z[g - grid.M], g);
      return problem.lagrangian.evaluate(env);
    }
    case SlotKind::GaugeJet:
      if (p == nullptr) return 0.0;
      return p->jet(s.component, s.order + 1, grid.time_at(g));
    case SlotKind::GaugeAtA:
    case SlotKind::GaugeAtB:
    case SlotKind::TerminalZ: return 0.0;
  }
  return 0.0;
}

}  // namespace

double total_time_derivative(const Expression& expr, const HerglotzProblem& problem,
                             const Grid& grid, const TrajectoryJets& jets,
                             std::span<const double> z, const GaugeGroup& group,
                             const GaugeTestFunction* p, int g) {
  const int p_orders = required_p_orders(group, problem.n);
  EvalEnv env = alpha_env(problem, grid, jets, z, group, p, g, problem.n + 1, p_orders);
  double acc = 0.0;
  for (const SlotId& s : expr.slots()) {
    if (s.kind == SlotKind::GaugeAtA || s.kind == SlotKind::GaugeAtB ||
        s.kind == SlotKind::TerminalZ)
      continue;
    Expression part = expr.differentiate(s);
    if (part.is_constant() && part.constant_value() == 0.0) continue;
    acc += part.evaluate(env) * slot_rate(s, problem, grid, jets, z, p, g);
  }
  return acc;
}

Expression symbolic_total_derivative(const Expression& expr, const HerglotzProblem& problem) {
  ExprBuilder b;
  std::int32_t acc = b.constant(0.0);
  for (const SlotId& s : expr.slots()) {
    std::int32_t rate;
    switch (s.kind) {
      case SlotKind::Time: rate = b.constant(1.0); break;
      case SlotKind::StateJet: rate = b.slot(slot_x(s.order + 1, s.component)); break;
      case SlotKind::DelayedJet: rate = b.slot(slot_xt(s.order + 1, s.component)); break;
      case SlotKind::Z: rate = b.copy(problem.lagrangian); break;
      case SlotKind::GaugeJet: rate = b.slot(slot_p(s.order + 1, s.component)); break;
      default: continue;  // frozen slots do not move
    }
    Expression part = expr.differentiate(s);
    acc = b.add(acc, b.mul(b.copy(part), rate));
  }
  return b.take(acc);
}

Expression dTkX_expression(const GaugeGroup& group, const HerglotzProblem& problem,
                           int comp1based, int k) {
  Expression level = group.X[comp1based - 1];
  if (k == 0) return level;
  Expression dT = symbolic_total_derivative(group.T, problem);
  for (int l = 1; l <= k; ++l) {
    Expression num = symbolic_total_derivative(level, problem);
    ExprBuilder b;
    std::int32_t n0 = b.copy(num);
    std::int32_t d0 = b.copy(dT);
    level = b.take(b.div(n0, d0));
  }
  return level;
}

std::vector<std::vector<double>> dTkX_series(const HerglotzProblem& problem, const Grid& grid,
                                             const TrajectoryJets& jets,
                                             std::span<const double> z, const GaugeGroup& group,
                                             const GaugeTestFunction& p, int comp1based,
                                             int kmax) {
  const int K = grid.K;
  const int p_orders = required_p_orders(group, problem.n);
  std::vector<std::vector<double>> series(kmax + 1, std::vector<double>(K + 1));
  std::vector<double> dT(K + 1);
  for (int i = 0; i <= K; ++i) {
    const int g = grid.M + i;
    EvalEnv env = alpha_env(problem, grid, jets, z, group, &p, g, problem.n + 1, p_orders);
    series[0][i] = group.X[comp1based - 1].evaluate(env);
    dT[i] = total_time_derivative(group.T, problem, grid, jets, z, group, &p, g);
    if (std::fabs(dT[i]) < 1e-8)
      throw NumericalError("singular transformation: dT/dt vanishes at node " +
                           std::to_string(g));
  }
  if (kmax >= 1) {
    for (int i = 0; i <= K; ++i) {
      const int g = grid.M + i;
      double dX =
          total_time_derivative(group.X[comp1based - 1], problem, grid, jets, z, group, &p, g);
      series[1][i] = dX / dT[i];
    }
  }
  for (int k = 2; k <= kmax; ++k) {
    std::vector<double> num = series_derivative(series[k - 1], grid.h, 1);
    for (int i = 0; i <= K; ++i) series[k][i] = num[i] / dT[i];
  }
  return series;
}

double gauge_partial_at_zero(const Expression& expr, const SlotId& gauge_slot,
                             const EvalEnv& env_at_zero) {
  Expression d = expr.differentiate(gauge_slot);
  return d.evaluate(env_at_zero);
}

std::vector<double> numeric_gauge_partial(
    const std::function<std::vector<double>(const GaugeTestFunction&)>& series_of_p,
    const Grid& grid, int I, int J, int d, double step) {
  const int K = grid.K;
  std::vector<double> out(K + 1);
  for (int i = 0; i <= K; ++i) {
    const double t0 = grid.time_at(grid.M + i);
    // p_J(s) = c (s - t0)^I / I! realizes jet I = c, all others 0 at t0
    double fact = 1.0;
    for (int r = 2; r <= I; ++r) fact *= (double)r;
    auto family = [&](double c) {
      GaugeTestFunction p;
      p.comps.assign(d, Polynomial{{0.0}});
      std::vector<double> coeff(I + 1, 0.0);
      // expand c (s - t0)^I / I!
      std::vector<double> binom = {1.0};
      for (int r = 0; r < I; ++r) {
        std::vector<double> next(binom.size() + 1, 0.0);
        for (size_t q = 0; q < binom.size(); ++q) {
          next[q + 1] += binom[q];
          next[q] += binom[q] * (-t0);
        }
        binom = std::move(next);
      }
      for (size_t q = 0; q < binom.size(); ++q) coeff[q] = c * binom[q] / fact;
      p.comps[J - 1].c = coeff;
      return p;
    };
    std::vector<double> plus = series_of_p(family(step));
    std::vector<double> minus = series_of_p(family(-step));
    out[i] = (plus[i] - minus[i]) / (2.0 * step);
  }
  return out;
}

// ---------------------------------------------------------------- invariance

SemiInvarianceReport check_semi_invariance(const HerglotzProblem& problem, const Grid& grid,
                                           const TrajectoryJets& jets, std::span<const double> z,
                                           const GaugeGroup& group,
                                           std::span<const GaugeTestFunction> test_functions) {
  const int K = grid.K;
  const int n = problem.n;
  const int m = problem.m;
  const int p_orders = required_p_orders(group, n);
  const double zb = z.back();
  const double span = problem.b - problem.a;

  SemiInvarianceReport report;
  report.identity = check_identity_at_zero(group, n, m, 64);

  for (const GaugeTestFunction& p : test_functions) {
    std::string desc = "p = (";
    for (size_t J = 0; J < p.comps.size(); ++J) {
      if (J) desc += "; ";
      desc += p.comps[J].describe();
    }
    desc += ")";
    report.family.push_back(desc);

    // transformed jets for every component, levels 0..n
    std::vector<std::vector<std::vector<double>>> S(m);
    for (int j = 1; j <= m; ++j)
      S[j - 1] = dTkX_series(problem, grid, jets, z, group, p, j, n);

    EvalEnv env_a = alpha_env(problem, grid, jets, z, group, &p, grid.M, n + 1, p_orders);
    EvalEnv env_b = alpha_env(problem, grid, jets, z, group, &p, grid.M + K, n + 1, p_orders);
    const double T_a = group.T.evaluate(env_a);
    const double T_b = group.T.evaluate(env_b);
    const double Z_b = group.Z.evaluate(env_b);
    if (std::fabs(T_b - T_a) < 1e-8)
      throw NumericalError("singular transformation: T(alpha(b)) - T(alpha(a)) vanishes");

    double eq1 = 0.0, eq2 = 0.0;
    for (int i = 0; i <= K; ++i) {
      const int g = grid.M + i;
      EvalEnv env = alpha_env(problem, grid, jets, z, group, &p, g, n + 1, p_orders);
      const double dT = total_time_derivative(group.T, problem, grid, jets, z, group, &p, g);
      if (std::fabs(dT) < 1e-8)
        throw NumericalError("singular transformation: dT/dt vanishes at node " +
                             std::to_string(g));
      const double dF = total_time_derivative(group.F, problem, grid, jets, z, group, &p, g);
      const double r1 = zb / span + dF - Z_b / (T_b - T_a) * dT;
      eq1 = std::max(eq1, std::fabs(r1));

      const double dZ = total_time_derivative(group.Z, problem, grid, jets, z, group, &p, g);
      EvalEnv tenv;
      tenv.bind_time(group.T.evaluate(env));
      tenv.bind_z(group.Z.evaluate(env));
      std::vector<double> xj((size_t)(n + 1) * m);
      for (int k = 0; k <= n; ++k)
        for (int j = 1; j <= m; ++j) xj[(size_t)k * m + (j - 1)] = S[j - 1][k][i];
      std::vector<double> xtj = xj;
      tenv.bind_state_jets(n, m, std::move(xj));
      tenv.bind_delayed_jets(n, m, std::move(xtj));
      const double r2 = dZ - problem.lagrangian.evaluate(tenv) * dT;
      eq2 = std::max(eq2, std::fabs(r2));
    }
    report.eq1_per_p.push_back(eq1);
    report.eq2_per_p.push_back(eq2);
    report.eq1_max = std::max(report.eq1_max, eq1);
    report.eq2_max = std::max(report.eq2_max, eq2);
  }
  return report;
}

// ---------------------------------------------------------------- currents

NoetherReport noether_currents(const HerglotzProblem& problem, const Grid& grid,
                               const TrajectoryJets& jets, std::span<const double> z,
                               const Multipliers& multipliers, const GaugeGroup& group,
                               CurrentsPath path) {
  const int n = problem.n;
  const int m = problem.m;
  const int K = grid.K;
  const int M = grid.M;
  const double zb = z.back();
  const double span = problem.b - problem.a;

  if ((int)group.theta.size() != group.q + 1)
    throw std::invalid_argument("noether_currents: theta must have q + 1 rows");
  for (const auto& row : group.theta)
    if ((int)row.size() != group.d)
      throw std::invalid_argument("noether_currents: theta rows must have d entries");

  const bool z_indep = problem.z_independent();
  const bool z_slot_only = group.Z.structurally_equal(Expression::slot(slot_z()));
  if (path == CurrentsPath::Auto) {
    if (n == 1 && z_indep && z_slot_only)
      path = CurrentsPath::ZIndependent;
    else if (n == 1)
      path = CurrentsPath::FirstOrder;
    else
      path = CurrentsPath::General;
  }
  if (path != CurrentsPath::General && n != 1)
    throw std::invalid_argument("noether_currents: specialized paths require n = 1");
  if (path == CurrentsPath::ZIndependent && !(z_indep && z_slot_only))
    throw std::invalid_argument(
        "noether_currents: the z-independent path requires dL/dz = 0 and Z = z");

  // extended orders: the symbolic jet recursion raises state orders to
  // n + (k-1) <= 2n - 1 and gauge orders to q + (n-1)
  const int x_orders = std::max(n + 1, 2 * n - 1);
  const int p_orders = required_p_orders(group, n);
  if (jets.max_order() < x_orders)
    throw std::invalid_argument("noether_currents: jets were built with too low an order");

  // zero-gauge environments per node
  std::vector<EvalEnv> env0;
  env0.reserve(K + 1);
  for (int i = 0; i <= K; ++i)
    env0.push_back(alpha_env(problem, grid, jets, z, group, nullptr, M + i, x_orders, p_orders));

  // transformed-jet expressions for the recursion terms (k >= 2)
  std::vector<std::vector<Expression>> recursion;  // [k-1][comp]
  if (path == CurrentsPath::General)
    for (int k = 1; k <= n; ++k) {
      std::vector<Expression> per_comp;
      for (int j = 1; j <= m; ++j)
        per_comp.push_back(dTkX_expression(group, problem, j, k - 1));
      recursion.push_back(std::move(per_comp));
    }

  NoetherReport report;
  report.q = group.q;
  report.d = group.d;
  report.path_used = path;

  for (int I = 0; I <= group.q; ++I)
    for (int J = 1; J <= group.d; ++J) {
      const SlotId ps = slot_p(I, J);
      Expression dF = group.F.differentiate(ps);
      Expression dT = group.T.differentiate(ps);
      Expression dZ = group.Z.differentiate(ps);
      std::vector<Expression> dX;
      for (int j = 1; j <= m; ++j) dX.push_back(group.X[j - 1].differentiate(ps));
      std::vector<Expression> dRec;  // partials of the recursion levels
      if (path == CurrentsPath::General)
        for (int k = 1; k <= n; ++k) {
          for (int j = 1; j <= m; ++j)
            dRec.push_back(recursion[k - 1][j - 1].differentiate(ps));
        }

      std::array<std::vector<double>, 5> terms;
      for (auto& t : terms) t.assign(K + 1, 0.0);
      std::vector<double> current(K + 1);
      const double theta_term = group.theta[I][J - 1] * zb / span;

      for (int i = 0; i <= K; ++i) {
        const int g = M + i;
        terms[0][i] = dF.evaluate(env0[i]);
        terms[1][i] = theta_term;
        double phi_dot = 0.0;
        if (path == CurrentsPath::General) {
          for (int k = 1; k <= n; ++k)
            for (int j = 1; j <= m; ++j)
              phi_dot += multipliers.phi[k - 1][(size_t)g * m + (j - 1)] *
                         dRec[(size_t)(k - 1) * m + (j - 1)].evaluate(env0[i]);
        } else {
          for (int j = 1; j <= m; ++j)
            phi_dot +=
                multipliers.phi[0][(size_t)g * m + (j - 1)] * dX[j - 1].evaluate(env0[i]);
        }
        terms[2][i] = phi_dot;

        double H;
        double psi = multipliers.psi_z[i];
        switch (path) {
          case CurrentsPath::General:
            H = multipliers.hamiltonian[i];
            terms[3][i] = psi * dZ.evaluate(env0[i]);
            break;
          case CurrentsPath::FirstOrder: {
            // H = phi_1 . xdot + psi_z L, assembled in place
            double acc = 0.0;
            for (int j = 1; j <= m; ++j)
              acc += multipliers.phi[0][(size_t)g * m + (j - 1)] * jets.at(1, g, j);
            EvalEnv lenv = lagrangian_env(problem, grid, jets, z[i], g);
            H = acc + psi * problem.lagrangian.evaluate(lenv);
            terms[3][i] = psi * dZ.evaluate(env0[i]);
            break;
          }
          case CurrentsPath::ZIndependent: {
            // psi_z = 1 and the psi dZ term drops (Z = z)
            double acc = 0.0;
            for (int j = 1; j <= m; ++j)
              acc += multipliers.phi[0][(size_t)g * m + (j - 1)] * jets.at(1, g, j);
            EvalEnv lenv = lagrangian_env(problem, grid, jets, z[i], g);
            H = acc + problem.lagrangian.evaluate(lenv);
            terms[3][i] = 0.0;
            break;
          }
          default: H = 0.0;
        }
        terms[4][i] = -H * dT.evaluate(env0[i]);
        current[i] = terms[0][i] + terms[1][i] + terms[2][i] + terms[3][i] + terms[4][i];
      }

      double dev = 0.0, scale = 0.0;
      for (int i = 0; i <= K; ++i) {
        dev = std::max(dev, std::fabs(current[i] - current[0]));
        scale = std::max(scale, std::fabs(current[i]));
      }
      report.currents.push_back(std::move(current));
      report.terms.push_back(std::move(terms));
      report.deviation.push_back(dev);
      report.deviation_rel.push_back(dev / std::max(1.0, scale));
    }
  return report;
}

ConstancySummary constancy_report(const NoetherReport& report, const ELReport& el, double tol,
                                  double el_tol, bool free_endpoint) {
  ConstancySummary summary;
  ExtremalVerdict ev = is_extremal(el, el_tol, free_endpoint);
  summary.extremal_certified = ev.extremal;
  summary.el_worst = ev.worst_value;
  summary.all_constant = true;
  for (size_t c = 0; c < report.currents.size(); ++c) {
    CurrentVerdict v;
    v.deviation = report.deviation[c];
    v.normalized = report.deviation_rel[c];
    v.constant = summary.extremal_certified && v.normalized <= tol;
    summary.all_constant = summary.all_constant && v.constant;
    summary.per_current.push_back(v);
  }
  return summary;
}

}  // namespace herglotz
