#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "herglotz/problem.hpp"
#include "oracles.hpp"

using namespace herglotz;

namespace {

HerglotzProblem delayed_growth(double gamma = 1.0) {
  HerglotzProblem p;
  p.n = 1;
  p.m = 1;
  p.a = 0.0;
  p.b = 2.0;
  p.tau = 1.0;
  p.gamma = gamma;
  p.lagrangian = parse_expression("xt0 * z", p.lagrangian_vocab());
  p.history = {parse_expression("1", SlotVocabulary::history())};
  return p;
}

bool has_message(const std::vector<Diagnostic>& diags, const std::string& needle) {
  for (const auto& d : diags)
    if (d.message.find(needle) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST_CASE("validate: delay bound") {
  HerglotzProblem p = delayed_growth();
  p.tau = p.b - p.a;
  CHECK(has_message(validate(p), "delay must satisfy 0 <= tau < b - a"));
}

TEST_CASE("validate: zero delay with a well-formed Lagrangian passes") {
  HerglotzProblem p = delayed_growth();
  p.tau = 0.0;
  CHECK(validate(p).empty());
}

TEST_CASE("validate: gauge slot in the Lagrangian is rejected") {
  HerglotzProblem p = delayed_growth();
  ExprBuilder b;
  p.lagrangian = [&] {
    std::int32_t root = b.mul(b.slot(slot_p(0, 1)), b.slot(slot_z()));
    return b.take(root);
  }();
  CHECK(has_message(validate(p), "gauge slot in Lagrangian"));
}

TEST_CASE("validate: history must be a function of t alone") {
  HerglotzProblem p = delayed_growth();
  ExprBuilder b;
  p.history[0] = b.take(b.slot(slot_x(0, 1)));
  CHECK(has_message(validate(p), "history uses only slot t"));
}

TEST_CASE("validate: history differentiability is checked symbolically") {
  HerglotzProblem p = delayed_growth();
  SlotVocabulary hv = SlotVocabulary::history();
  ExprBuilder b;
  std::int32_t root = b.pow(b.slot(slot_t()), b.constant(0.5));
  p.history[0] = b.take(root);
  CHECK(has_message(validate(p), "not differentiable"));
}

TEST_CASE("make_grid: snapping examples") {
  HerglotzProblem p = delayed_growth();
  Grid g = make_grid(p, 0.3);
  CHECK(g.h == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(g.M == 4);
  CHECK(g.K == 8);

  p.tau = 0.0;
  p.b = 1.0;
  Grid g2 = make_grid(p, 0.1);
  CHECK(g2.h == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(g2.K == 10);
  CHECK(g2.M == 0);

  p.tau = 1.0;
  p.b = 3.0;
  Grid g3 = make_grid(p, 0.02);
  CHECK(g3.h == doctest::Approx(0.02).epsilon(1e-12));
  CHECK(g3.M == 50);
  CHECK(g3.K == 150);
}

TEST_CASE("make_grid: h never exceeds the target, K stays even, delay stays aligned") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> uspan(0.5, 3.0), utarget(0.01, 0.4);
  std::uniform_int_distribution<int> unum(1, 8), uden(1, 8);
  for (int i = 0; i < 50; ++i) {
    HerglotzProblem p = delayed_growth();
    p.a = 0.0;
    double tau = 0.25 * uden(rng);
    p.tau = tau;
    p.b = tau * (1.0 + 0.25 * unum(rng));
    if (!(p.tau < p.b - p.a)) continue;
    double target = utarget(rng);
    Grid g = make_grid(p, target);
    CHECK(g.h <= target * (1.0 + 1e-12));
    CHECK(g.K % 2 == 0);
    CHECK(g.M >= 4);
    CHECK(std::fabs(g.M * g.h - p.tau) < 1e-9);
    CHECK(std::fabs(g.K * g.h - (p.b - p.a)) < 1e-9);
    CHECK(g.time_at(g.M) == p.a);
  }
}

TEST_CASE("jets: first derivative of t^2 is exact at interior nodes") {
  HerglotzProblem p = delayed_growth();
  p.tau = 0.0;
  p.b = 1.0;
  p.history = {parse_expression("0", SlotVocabulary::history())};
  Grid g = make_grid(p, 0.05);
  std::vector<double> x(g.node_count());
  for (int i = 0; i < g.node_count(); ++i) x[i] = g.time_at(i) * g.time_at(i);
  // t^2 has x(0) = 0, matching the zero history at the single history node
  TrajectoryJets jets(p, g, x, 2);
  for (int i = 3; i < g.node_count() - 3; ++i)
    CHECK(std::fabs(jets.at(1, i, 1) - 2.0 * g.time_at(i)) < 1e-10);
  SUBCASE("order zero returns the sample") {
    for (int i = 0; i < g.node_count(); ++i) CHECK(jets.at(0, i, 1) == x[i]);
  }
}

TEST_CASE("jets: second derivative of sin t within 1e-6 at h = 0.01") {
  HerglotzProblem p = delayed_growth();
  p.tau = 0.0;
  p.a = 0.0;
  p.b = 1.0;
  p.history = {parse_expression("0", SlotVocabulary::history())};
  Grid g = make_grid(p, 0.01);
  std::vector<double> x(g.node_count());
  for (int i = 0; i < g.node_count(); ++i) x[i] = std::sin(g.time_at(i));
  TrajectoryJets jets(p, g, x, 2);
  double worst_interior = 0.0, worst_boundary = 0.0;
  for (int i = 0; i < g.node_count(); ++i) {
    double err = std::fabs(jets.at(2, i, 1) + std::sin(g.time_at(i)));
    if (i >= 2 && i < g.node_count() - 2)
      worst_interior = std::max(worst_interior, err);
    else
      worst_boundary = std::max(worst_boundary, err);
  }
  CHECK(worst_interior < 1e-6);                 // O(h^4) central stencils
  CHECK(worst_boundary < 2.0 * 0.01 * 0.01);    // O(h^2) one-sided stencils
}

TEST_CASE("jets: cubic samples are reproduced to 1e-9 at interior nodes") {
  HerglotzProblem p = delayed_growth();
  p.tau = 0.0;
  p.b = 1.0;
  p.history = {parse_expression("-1", SlotVocabulary::history())};
  Grid g = make_grid(p, 0.02);
  auto f = [](double t) { return 2.0 * t * t * t - t * t + 3.0 * t - 1.0; };
  auto f1 = [](double t) { return 6.0 * t * t - 2.0 * t + 3.0; };
  std::vector<double> x(g.node_count());
  for (int i = 0; i < g.node_count(); ++i) x[i] = f(g.time_at(i));
  TrajectoryJets jets(p, g, x, 1);
  for (int i = 2; i < g.node_count() - 2; ++i)
    CHECK(std::fabs(jets.at(1, i, 1) - f1(g.time_at(i))) < 1e-9);
}

TEST_CASE("jets: history side is symbolic, matching the history derivatives exactly") {
  HerglotzProblem p = delayed_growth();
  p.history = {parse_expression("sin(t) + t^2", SlotVocabulary::history())};
  Grid g = make_grid(p, 0.1);
  std::vector<Expression> interior = {parse_expression("1", SlotVocabulary::history())};
  std::vector<double> x = admissible_samples(p, g, interior);
  TrajectoryJets jets(p, g, x, 2);
  Expression d1 = p.history[0].differentiate(slot_t());
  Expression d2 = d1.differentiate(slot_t());
  for (int gnode = 0; gnode < g.M; ++gnode) {
    EvalEnv env;
    env.bind_time(g.time_at(gnode));
    CHECK(jets.at(1, gnode, 1) == d1.evaluate(env));
    CHECK(jets.at(2, gnode, 1) == d2.evaluate(env));
  }
}

TEST_CASE("lagrangian_env: delayed jets come from the history at t = a") {
  HerglotzProblem p = delayed_growth();
  p.history = {parse_expression("cos(t)", SlotVocabulary::history())};
  Grid g = make_grid(p, 0.1);
  std::vector<double> x =
      admissible_samples(p, g, {parse_expression("1", SlotVocabulary::history())});
  TrajectoryJets jets(p, g, x, 1);
  EvalEnv env = lagrangian_env(p, g, jets, 0.5, g.M);
  CHECK(env.lookup(slot_xt(0, 1)) == std::cos(g.time_at(0)));
  CHECK(env.lookup(slot_t()) == p.a);
  CHECK(env.lookup(slot_z()) == 0.5);
}

TEST_CASE("lagrangian_env: zero delay aliases the delayed jets") {
  HerglotzProblem p = delayed_growth();
  p.tau = 0.0;
  p.b = 1.0;
  p.history = {parse_expression("1", SlotVocabulary::history())};
  Grid g = make_grid(p, 0.1);
  std::vector<double> x =
      admissible_samples(p, g, {parse_expression("1", SlotVocabulary::history())});
  TrajectoryJets jets(p, g, x, 1);
  for (int i = 0; i <= g.K; i += 3) {
    EvalEnv env = lagrangian_env(p, g, jets, 0.0, g.M + i);
    CHECK(env.lookup(slot_xt(0, 1)) == env.lookup(slot_x(0, 1)));
    CHECK(env.lookup(slot_xt(1, 1)) == env.lookup(slot_x(1, 1)));
  }
}

TEST_CASE("lagrangian_env: at t = a + tau the delayed jets come from the trajectory at a") {
  HerglotzProblem p = delayed_growth();
  Grid g = make_grid(p, 0.1);
  std::vector<double> x =
      admissible_samples(p, g, {parse_expression("1", SlotVocabulary::history())});
  TrajectoryJets jets(p, g, x, 1);
  EvalEnv env = lagrangian_env(p, g, jets, 0.0, 2 * g.M);
  CHECK(env.lookup(slot_xt(0, 1)) == jets.at(0, g.M, 1));
  CHECK(env.lookup(slot_xt(1, 1)) == jets.at(1, g.M, 1));
}

TEST_CASE("admissibility checking flags history mismatches") {
  HerglotzProblem p = delayed_growth();
  Grid g = make_grid(p, 0.25);
  std::vector<double> x =
      admissible_samples(p, g, {parse_expression("t", SlotVocabulary::history())});
  CHECK(check_admissible(p, g, x).empty());
  x[1] += 0.5;
  CHECK(!check_admissible(p, g, x).empty());
}

TEST_CASE("extremizer tolerance must be positive") {
  ExtremizerTolerance tol;
  CHECK(tol.epsilon > 0.0);
}
