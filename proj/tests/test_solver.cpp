#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "herglotz/dynamics.hpp"
#include "herglotz/solver.hpp"
#include "oracles.hpp"

using namespace herglotz;

namespace {

HerglotzProblem quadratic_problem() {
  HerglotzProblem p;
  p.n = 1;
  p.m = 1;
  p.a = 0.0;
  p.b = 1.0;
  p.tau = 0.0;
  p.gamma = 0.0;
  p.lagrangian = parse_expression("x1^2", p.lagrangian_vocab());
  p.history = {parse_expression("1", SlotVocabulary::history())};
  return p;
}

HerglotzProblem delayed_growth(double gamma) {
  HerglotzProblem p;
  p.n = 1;
  p.m = 1;
  p.a = 0.0;
  p.b = 2.0;
  p.tau = 1.0;
  p.gamma = gamma;
  p.lagrangian = parse_expression("xt0 * z", p.lagrangian_vocab());
  p.history = {parse_expression("0.5", SlotVocabulary::history())};
  return p;
}

}  // namespace

TEST_CASE("objective: zero Lagrangian returns gamma for any decision vector") {
  HerglotzProblem p = quadratic_problem();
  p.gamma = 0.25;
  p.lagrangian = parse_expression("0", p.lagrangian_vocab());
  Grid g = make_grid(p, 0.1);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<double> decision(g.K);
    for (double& v : decision) v = u(rng);
    CHECK(objective(p, g, decision) == 0.25);
  }
}

TEST_CASE("objective: constant continuation of a constant history reproduces the block form") {
  // x = 0.5 everywhere: zdot = 0.5 z, so z(b) = gamma exp(0.5 (b - a))
  HerglotzProblem p = delayed_growth(1.0);
  Grid g = make_grid(p, 0.01);
  std::vector<double> decision(g.K, 0.5);
  double zb = objective(p, g, decision);
  CHECK(std::fabs(zb - std::exp(0.5 * 2.0)) < 1e-9);
}

TEST_CASE("objective: single-node perturbations have finite-difference-consistent slopes") {
  HerglotzProblem p = quadratic_problem();
  Grid g = make_grid(p, 0.1);
  std::vector<double> decision(g.K);
  for (int i = 0; i < g.K; ++i) decision[i] = 1.0 + 0.1 * std::sin(2.0 * g.time_at(g.M + 1 + i));
  const int probe = g.K / 2;
  const double delta = 1e-6;
  auto at = [&](double v) {
    std::vector<double> d = decision;
    d[probe] = v;
    return objective(p, g, d);
  };
  double central = (at(decision[probe] + delta) - at(decision[probe] - delta)) / (2.0 * delta);
  double onesided = (at(decision[probe] + delta) - at(decision[probe])) / delta;
  CHECK(std::fabs(central - onesided) <= 1e-5 * (1.0 + std::fabs(central)));
  CHECK(std::fabs(central) > 1e-6);  // the objective responds at O(delta)
}

TEST_CASE("solve: the free-endpoint quadratic relaxes to the constant trajectory") {
  HerglotzProblem p = quadratic_problem();
  Grid g = make_grid(p, 0.05);
  SolveOptions opts;
  opts.max_iters = 400;
  opts.tol_grad = 1e-8;
  opts.tol_el = 1e-4;
  opts.seed = 3;
  opts.jitter = 0.01;
  SolveResult res = solve_extremal(p, g, opts);
  CHECK(res.converged);
  CHECK(res.objective == doctest::Approx(0.0).epsilon(1e-8));
  TrajectoryJets jets(p, g, res.pair.x, 1);
  for (int i = 0; i <= g.K; ++i) CHECK(std::fabs(jets.at(1, g.M + i, 1)) < 1e-4);
  CHECK(res.el.max_transversality < 1e-6);
}

TEST_CASE("solve: maximize mode mirrors the sign-flipped objective") {
  HerglotzProblem p = quadratic_problem();
  p.lagrangian = parse_expression("0 - x1^2", p.lagrangian_vocab());
  Grid g = make_grid(p, 0.05);
  SolveOptions opts;
  opts.mode = SolveMode::Maximize;
  opts.max_iters = 400;
  opts.tol_grad = 1e-8;
  opts.seed = 3;
  opts.jitter = 0.01;
  SolveResult res = solve_extremal(p, g, opts);
  CHECK(res.converged);
  CHECK(res.objective == doctest::Approx(0.0).epsilon(1e-8));
}

TEST_CASE("solve: pinned oscillator recovers the closed form") {
  testutil::Oscillator osc;
  HerglotzProblem p;
  p.n = 1;
  p.m = 1;
  p.a = 0.0;
  p.b = 1.0;
  p.tau = 0.0;
  p.gamma = 0.0;
  p.lagrangian = parse_expression("x1^2 / 2 - x0^2 / 2 - 0.2 * z", p.lagrangian_vocab());
  p.history = {Expression::constant(osc.x(0.0))};
  Grid g = make_grid(p, 0.05);  // coarse probe; the acceptance suite runs h = 1e-2
  SolveOptions opts;
  opts.max_iters = 500;
  opts.tol_grad = 1e-7;
  opts.seed = 7;
  opts.jitter = 0.01;
  opts.pin_b = std::vector<double>{osc.x(1.0)};
  opts.pin_weight = 1e4;
  SolveResult res = solve_extremal(p, g, opts);
  CHECK(res.converged);
  double worst = 0.0;
  for (int i = 0; i <= g.K; ++i)
    worst = std::max(worst,
                     std::fabs(res.pair.x[(size_t)(g.M + i)] - osc.x(g.time_at(g.M + i))));
  CHECK(worst < 5e-3);
}

TEST_CASE("solve: determinism, two runs agree to the last bit") {
  HerglotzProblem p = quadratic_problem();
  Grid g = make_grid(p, 0.1);
  SolveOptions opts;
  opts.max_iters = 60;
  opts.seed = 11;
  opts.jitter = 0.02;
  SolveResult r1 = solve_extremal(p, g, opts);
  SolveResult r2 = solve_extremal(p, g, opts);
  CHECK(r1.iterations == r2.iterations);
  CHECK(r1.objective == r2.objective);
  for (size_t i = 0; i < r1.pair.x.size(); ++i) CHECK(r1.pair.x[i] == r2.pair.x[i]);
}

TEST_CASE("solve: threaded gradients reproduce the serial iterates") {
  HerglotzProblem p = quadratic_problem();
  Grid g = make_grid(p, 0.1);
  SolveOptions opts;
  opts.max_iters = 40;
  opts.seed = 11;
  opts.jitter = 0.02;
  SolveResult serial = solve_extremal(p, g, opts);
  opts.threads = 4;
  SolveResult threaded = solve_extremal(p, g, opts);
  CHECK(serial.objective == threaded.objective);
  for (size_t i = 0; i < serial.pair.x.size(); ++i)
    CHECK(serial.pair.x[i] == threaded.pair.x[i]);
}

TEST_CASE("solve: unbounded delayed growth does not fake convergence") {
  // maximizing z(b) for zdot = x(t - tau) z with gamma > 0 has no
  // extremal; the iteration must either diverge or hit the cap
  HerglotzProblem p = delayed_growth(1.0);
  Grid g = make_grid(p, 0.1);
  SolveOptions opts;
  opts.mode = SolveMode::Maximize;
  opts.max_iters = 60;
  opts.tol_grad = 1e-10;
  SolveResult res = solve_extremal(p, g, opts);
  CHECK_FALSE(res.converged);
}

TEST_CASE("solve: option validation") {
  HerglotzProblem p = quadratic_problem();
  Grid g = make_grid(p, 0.1);
  SolveOptions opts;
  opts.grad_step = 1e-2;
  CHECK_THROWS_AS(solve_extremal(p, g, opts), std::invalid_argument);
}
