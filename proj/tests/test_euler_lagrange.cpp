#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "herglotz/dynamics.hpp"
#include "herglotz/euler_lagrange.hpp"
#include "oracles.hpp"

using namespace herglotz;

namespace {

HerglotzProblem oscillator_problem() {
  HerglotzProblem p;
  p.n = 1;
  p.m = 1;
  p.a = 0.0;
  p.b = 1.0;
  p.tau = 0.0;
  p.gamma = 0.0;
  p.lagrangian = parse_expression("x1^2 / 2 - x0^2 / 2 - 0.2 * z", p.lagrangian_vocab());
  testutil::Oscillator osc;
  p.history = {Expression::constant(osc.x(0.0))};
  return p;
}

struct PairFixture {
  Grid g;
  std::vector<double> x;
  TrajectoryJets jets;
  std::vector<double> z;
  std::vector<double> psi;

  PairFixture(const HerglotzProblem& p, double target_h, std::vector<double> samples)
      : g(make_grid(p, target_h)),
        x(std::move(samples)),
        jets(p, g, x, p.n + 1),
        z(integrate_z(p, g, jets)),
        psi(compute_psi_z(p, g, jets, z)) {}
};

std::vector<double> sample_oscillator(const Grid& g) {
  testutil::Oscillator osc;
  std::vector<double> x(g.node_count());
  for (int i = 0; i < g.node_count(); ++i) x[i] = osc.x(g.time_at(i));
  return x;
}

double oscillator_residual_max(double h) {
  HerglotzProblem p = oscillator_problem();
  Grid g = make_grid(p, h);
  PairFixture f(p, h, sample_oscillator(g));
  ELReport rep = el_residual(p, f.g, f.jets, f.z, f.psi);
  // the pinned oscillator satisfies the equations, not the free-endpoint
  // transversality condition, so only the branch residuals count here
  return std::max(rep.max_early, rep.max_late);
}

}  // namespace

TEST_CASE("the classical damped oscillator satisfies the generalized equations") {
  // zdot = L with L = xdot^2/2 - x^2/2 - k z turns the stationarity
  // condition into xdd + k xd + x = 0; the closed form must pass
  double r1 = oscillator_residual_max(0.02);
  double r2 = oscillator_residual_max(0.01);
  CHECK(r1 < 1e-2);
  double order = std::log2(r1 / r2);
  CHECK(order > 1.6);
  CHECK(order < 2.4);
}

TEST_CASE("delayed growth with gamma = 0 is an exact discrete extremal") {
  HerglotzProblem p;
  p.n = 1;
  p.m = 1;
  p.a = 0.0;
  p.b = 2.0;
  p.tau = 1.0;
  p.gamma = 0.0;
  p.lagrangian = parse_expression("xt0 * z", p.lagrangian_vocab());
  p.history = {parse_expression("1", SlotVocabulary::history())};
  Grid g = make_grid(p, 0.05);
  std::vector<double> x =
      admissible_samples(p, g, {parse_expression("1", SlotVocabulary::history())});
  PairFixture f(p, 0.05, x);
  ELReport rep = el_residual(p, f.g, f.jets, f.z, f.psi);
  for (double v : rep.early) CHECK(v == 0.0);
  for (double v : rep.late) CHECK(v == 0.0);
  for (double v : rep.transversality) CHECK(v == 0.0);
  CHECK(is_extremal(rep, 1e-12).extremal);
}

TEST_CASE("a random non-extremal trajectory is flagged loudly") {
  HerglotzProblem p = oscillator_problem();
  Grid g = make_grid(p, 0.01);
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> x(g.node_count());
  testutil::Oscillator osc;
  x[0] = osc.x(0.0);
  for (int i = 1; i < g.node_count(); ++i)
    x[i] = osc.x(0.0) + 0.5 * std::sin(7.0 * g.time_at(i)) + 0.1 * u(rng);
  PairFixture f(p, 0.01, x);
  ELReport rep = el_residual(p, f.g, f.jets, f.z, f.psi);
  CHECK(rep.max_residual() > 0.1);
  CHECK_FALSE(is_extremal(rep, 1e-6).extremal);
}

TEST_CASE("is_extremal verdicts and the worst offender") {
  ELReport rep;
  rep.n = 1;
  rep.m = 1;
  rep.late = {0.0, 0.0, 0.0};
  rep.late_first_node = 0;
  rep.transversality = {0.0};
  CHECK(is_extremal(rep, 1e-6).extremal);
  rep.late[1] = 1e-3;
  rep.max_late = 1e-3;
  ExtremalVerdict v = is_extremal(rep, 1e-6);
  CHECK_FALSE(v.extremal);
  CHECK(v.worst_value == 1e-3);
  CHECK(v.worst.find("late branch node 1") != std::string::npos);
}

TEST_CASE("transversality at a free endpoint measures dL/dxdot(b)") {
  HerglotzProblem p;
  p.n = 1;
  p.m = 1;
  p.a = 0.0;
  p.b = 1.0;
  p.tau = 0.0;
  p.gamma = 0.0;
  p.lagrangian = parse_expression("x1^2", p.lagrangian_vocab());
  p.history = {parse_expression("1", SlotVocabulary::history())};
  Grid g = make_grid(p, 0.05);

  SUBCASE("a constant trajectory satisfies it exactly") {
    std::vector<double> x(g.node_count(), 1.0);
    PairFixture f(p, 0.05, x);
    ELReport rep = el_residual(p, f.g, f.jets, f.z, f.psi);
    CHECK(rep.transversality[0] == 0.0);
  }
  SUBCASE("unit slope leaves 2 xdot(b) = 2") {
    std::vector<double> x(g.node_count());
    for (int i = 0; i < g.node_count(); ++i) x[i] = 1.0 + g.time_at(i);
    PairFixture f(p, 0.05, x);
    ELReport rep = el_residual(p, f.g, f.jets, f.z, f.psi);
    CHECK(rep.transversality[0] == doctest::Approx(2.0).epsilon(1e-8));
  }
}

TEST_CASE("junction gap between the two branches is reported") {
  HerglotzProblem p;
  p.n = 1;
  p.m = 1;
  p.a = 0.0;
  p.b = 2.0;
  p.tau = 1.0;
  p.gamma = 1.0;
  p.lagrangian = parse_expression("x1 * xt1 + xt0 * z", p.lagrangian_vocab());
  p.history = {parse_expression("cos(t)", SlotVocabulary::history())};
  Grid g = make_grid(p, 0.02);
  std::vector<double> x =
      admissible_samples(p, g, {parse_expression("cos(t)", SlotVocabulary::history())});
  PairFixture f(p, 0.02, x);
  ELReport rep = el_residual(p, f.g, f.jets, f.z, f.psi);
  // the advanced term drops across b - tau, so the branch values differ
  CHECK(rep.junction_gap > 1e-3);
}

TEST_CASE("grids too coarse for the stencils are rejected") {
  HerglotzProblem p;
  p.n = 1;
  p.m = 1;
  p.a = 0.0;
  p.b = 1.25;
  p.tau = 1.0;
  p.gamma = 0.0;
  p.lagrangian = parse_expression("x1^2 + xt0", p.lagrangian_vocab());
  p.history = {parse_expression("0", SlotVocabulary::history())};
  Grid g = make_grid(p, 0.25);  // M = 4: the early branch has 2 nodes
  std::vector<double> x(g.node_count(), 0.0);
  TrajectoryJets jets(p, g, x, p.n + 1);
  std::vector<double> z = integrate_z(p, g, jets);
  std::vector<double> psi = compute_psi_z(p, g, jets, z);
  CHECK_THROWS_AS(el_residual(p, g, jets, z, psi), NumericalError);
}
