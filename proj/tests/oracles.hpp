#pragma once

// Test-side oracles kept independent of the library's evaluation and
// quadrature code paths.

#include <cmath>
#include <random>
#include <vector>

#include "herglotz/expr.hpp"
#include "herglotz/problem.hpp"

namespace testutil {

using herglotz::EvalEnv;
using herglotz::Expression;
using herglotz::SlotId;

// hand-rolled tree walk; integer powers expand to repeated multiplication
// per the documented exponent semantics
inline double oracle_eval(const Expression& e, const EvalEnv& env, std::int32_t node) {
  using Node = Expression::Node;
  const Node& n = e.nodes()[node];
  switch (n.kind) {
    case Node::Kind::Constant: return n.value;
    case Node::Kind::Slot: return env.lookup(n.slot);
    case Node::Kind::Unary: {
      double a = oracle_eval(e, env, n.lhs);
      switch (n.uop) {
        case herglotz::UnaryOp::Neg: return -a;
        case herglotz::UnaryOp::Sin: return std::sin(a);
        case herglotz::UnaryOp::Cos: return std::cos(a);
        case herglotz::UnaryOp::Exp: return std::exp(a);
        case herglotz::UnaryOp::Log: return std::log(a);
        case herglotz::UnaryOp::Sqrt: return std::sqrt(a);
      }
      return 0;
    }
    case Node::Kind::Binary: {
      double a = oracle_eval(e, env, n.lhs);
      double b = oracle_eval(e, env, n.rhs);
      switch (n.bop) {
        case herglotz::BinaryOp::Add: return a + b;
        case herglotz::BinaryOp::Sub: return a - b;
        case herglotz::BinaryOp::Mul: return a * b;
        case herglotz::BinaryOp::Div: return a / b;
        case herglotz::BinaryOp::Pow: {
          long long k = (long long)b;
          double r = 1.0;
          for (long long i = 0; i < std::llabs(k); ++i) r *= a;
          return k < 0 ? 1.0 / r : r;
        }
      }
      return 0;
    }
  }
  return 0;
}

inline double oracle_eval(const Expression& e, const EvalEnv& env) {
  return oracle_eval(e, env, e.root());
}

// value table for one slot family layout; rebuilds EvalEnv on demand so a
// single slot can be nudged for finite differences
struct EnvSampler {
  double t{0.4}, z{0.7}, zb{1.1};
  int n{1}, m{1}, q{1}, d{1};
  std::vector<double> xjets, xtjets, pjets, pa, pb;

  void resize() {
    xjets.assign((size_t)(n + 1) * m, 0.0);
    xtjets.assign((size_t)(n + 1) * m, 0.0);
    pjets.assign((size_t)(q + 1) * d, 0.0);
    pa.assign(d, 0.0);
    pb.assign(d, 0.0);
  }

  void randomize(std::mt19937_64& rng, double lo = 0.3, double hi = 2.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    t = u(rng);
    z = u(rng);
    zb = u(rng);
    for (double& v : xjets) v = u(rng);
    for (double& v : xtjets) v = u(rng);
    for (double& v : pjets) v = u(rng);
    for (double& v : pa) v = u(rng);
    for (double& v : pb) v = u(rng);
  }

  double& slot_ref(const SlotId& s) {
    switch (s.kind) {
      case herglotz::SlotKind::Time: return t;
      case herglotz::SlotKind::Z: return z;
      case herglotz::SlotKind::TerminalZ: return zb;
      case herglotz::SlotKind::StateJet: return xjets[(size_t)s.order * m + (s.component - 1)];
      case herglotz::SlotKind::DelayedJet:
        return xtjets[(size_t)s.order * m + (s.component - 1)];
      case herglotz::SlotKind::GaugeJet: return pjets[(size_t)s.order * d + (s.component - 1)];
      case herglotz::SlotKind::GaugeAtA: return pa[s.component - 1];
      case herglotz::SlotKind::GaugeAtB: return pb[s.component - 1];
    }
    return t;
  }

  EvalEnv make() const {
    EvalEnv env;
    env.bind_time(t);
    env.bind_z(z);
    env.bind_terminal_z(zb);
    env.bind_state_jets(n, m, xjets);
    env.bind_delayed_jets(n, m, xtjets);
    env.bind_gauge_jets(q, d, pjets);
    env.bind_gauge_boundary(pa, pb);
    return env;
  }
};

// central finite difference of evaluate with respect to one slot
inline double fd_partial(const Expression& e, EnvSampler sampler, const SlotId& s,
                         double step = 1e-5) {
  double& ref = sampler.slot_ref(s);
  const double v0 = ref;
  ref = v0 + step;
  double fp = e.evaluate(sampler.make());
  ref = v0 - step;
  double fm = e.evaluate(sampler.make());
  return (fp - fm) / (2.0 * step);
}

// seeded random expression trees over the given leaves
struct ExprGen {
  std::mt19937_64 rng;
  std::vector<SlotId> leaves;
  bool allow_pow{true};
  bool allow_log_sqrt{false};

  Expression gen(int max_depth) {
    herglotz::ExprBuilder b;
    std::int32_t root = gen_node(b, max_depth);
    return b.take(root);
  }

  std::int32_t gen_node(herglotz::ExprBuilder& b, int depth) {
    std::uniform_real_distribution<double> uc(-2.0, 2.0);
    std::uniform_int_distribution<int> pick(0, 9);
    if (depth == 0 || pick(rng) < 2) {
      if (pick(rng) < 4 || leaves.empty()) return b.constant(uc(rng));
      std::uniform_int_distribution<size_t> ls(0, leaves.size() - 1);
      return b.slot(leaves[ls(rng)]);
    }
    int choice = pick(rng);
    if (choice < 5) {
      std::int32_t l = gen_node(b, depth - 1);
      std::int32_t r = gen_node(b, depth - 1);
      switch (choice) {
        case 0: return b.add(l, r);
        case 1: return b.sub(l, r);
        case 2:
        case 3: return b.mul(l, r);
        default: return b.div(l, r);
      }
    }
    if (choice < 8) {
      std::int32_t u = gen_node(b, depth - 1);
      switch (choice) {
        case 5: return b.unary(herglotz::UnaryOp::Sin, u);
        case 6: return b.unary(herglotz::UnaryOp::Cos, u);
        default: return b.unary(herglotz::UnaryOp::Exp, u);
      }
    }
    if (choice == 8 && allow_pow) {
      std::uniform_int_distribution<int> ke(1, 3);
      std::int32_t u = gen_node(b, depth - 1);
      return b.pow(u, b.constant((double)ke(rng)));
    }
    return b.neg(gen_node(b, depth - 1));
  }
};

// damped-oscillator closed form for the generalized damping fixture
struct Oscillator {
  double k{0.2};
  double phase{0.3};
  double omega() const { return std::sqrt(1.0 - k * k / 4.0); }
  double x(double t) const { return std::exp(-k * t / 2.0) * std::cos(omega() * t + phase); }
  double xdot(double t) const {
    return std::exp(-k * t / 2.0) *
           (-k / 2.0 * std::cos(omega() * t + phase) - omega() * std::sin(omega() * t + phase));
  }
};

// composite trapezoid with an Euler-Maclaurin end correction; an
// independent O(h^4) tail-integral oracle
inline std::vector<double> oracle_tail_integrals(const std::vector<double>& v, double h) {
  const int len = (int)v.size();
  auto deriv = [&](int i) {
    if (i == 0) return (-1.5 * v[0] + 2.0 * v[1] - 0.5 * v[2]) / h;
    if (i == len - 1) return (1.5 * v[len - 1] - 2.0 * v[len - 2] + 0.5 * v[len - 3]) / h;
    return (v[i + 1] - v[i - 1]) / (2.0 * h);
  };
  std::vector<double> out(len, 0.0);
  double acc = 0.0;
  for (int i = len - 2; i >= 0; --i) {
    acc += 0.5 * h * (v[i] + v[i + 1]);
    out[i] = acc - h * h / 12.0 * (deriv(len - 1) - deriv(i));
  }
  return out;
}

}  // namespace testutil
