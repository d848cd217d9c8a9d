#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <functional>
#include <string>

#include "herglotz/expr.hpp"
#include "oracles.hpp"

using namespace herglotz;

namespace {

SlotVocabulary vocab_n1m1() { return SlotVocabulary::lagrangian(1, 1); }

int operator_count(const Expression& e) {
  int count = 0;
  std::function<void(std::int32_t)> rec = [&](std::int32_t i) {
    const auto& n = e.nodes()[i];
    if (n.kind == Expression::Node::Kind::Unary) {
      ++count;
      rec(n.lhs);
    } else if (n.kind == Expression::Node::Kind::Binary) {
      ++count;
      rec(n.lhs);
      rec(n.rhs);
    }
  };
  rec(e.root());
  return count;
}

}  // namespace

TEST_CASE("parse: product of a delayed slot and z") {
  Expression e = parse_expression("xt0_1 * z", vocab_n1m1());
  const auto& root = e.nodes()[e.root()];
  REQUIRE(root.kind == Expression::Node::Kind::Binary);
  CHECK(root.bop == BinaryOp::Mul);
  CHECK(e.nodes()[root.lhs].slot == slot_xt(0, 1));
  CHECK(e.nodes()[root.rhs].slot == slot_z());
}

TEST_CASE("parse: constant literal") {
  Expression e = parse_expression("0", vocab_n1m1());
  CHECK(e.is_constant());
  CHECK(e.constant_value() == 0.0);
}

TEST_CASE("parse: five operator nodes in the split-quadratic source") {
  Expression e = parse_expression("x1_1^2 / 2 - x0_1^2 / 2", vocab_n1m1());
  CHECK(operator_count(e) == 5);
}

TEST_CASE("parse: errors carry positions") {
  CHECK_THROWS_WITH_AS(parse_expression("x0 + q3", vocab_n1m1()),
                       "unknown slot name 'q3' (line 1, column 6)", ParseError);
  try {
    parse_expression("x0 *\n x7", vocab_n1m1());
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
    CHECK(e.column() == 2);
    CHECK(std::string(e.what()).find("exceeds maximum") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_expression("1 + * 2", vocab_n1m1()), ParseError);
  CHECK_THROWS_AS(parse_expression("sin(x0", vocab_n1m1()), ParseError);
  CHECK_THROWS_AS(parse_expression("2 x0", vocab_n1m1()), ParseError);  // no implicit product
}

TEST_CASE("parse: component suffix optional when the dimension is 1") {
  Expression plain = parse_expression("x0", vocab_n1m1());
  Expression suffixed = parse_expression("x0_1", vocab_n1m1());
  CHECK(plain.structurally_equal(suffixed));
  // dimension 2 requires the suffix to stay within range
  SlotVocabulary v2 = SlotVocabulary::lagrangian(1, 2);
  CHECK_NOTHROW(parse_expression("x0_2", v2));
  CHECK_THROWS_AS(parse_expression("x0_3", v2), ParseError);
}

TEST_CASE("differentiate: delayed-growth Lagrangian in z") {
  Expression e = parse_expression("xt0 * z", vocab_n1m1());
  Expression d = e.differentiate(slot_z());
  CHECK(d.structurally_equal(Expression::slot(slot_xt(0, 1))));
}

TEST_CASE("differentiate: absent slot gives zero") {
  Expression e = parse_expression("t", vocab_n1m1());
  Expression d = e.differentiate(slot_x(0, 1));
  CHECK(d.is_constant());
  CHECK(d.constant_value() == 0.0);
}

TEST_CASE("differentiate: quadratic slope matches a finite difference") {
  Expression e = parse_expression("x1^2/2", vocab_n1m1());
  Expression d = e.differentiate(slot_x(1, 1));
  testutil::EnvSampler sampler;
  sampler.resize();
  sampler.xjets[1] = 0.7;
  double sym = d.evaluate(sampler.make());
  double fd = testutil::fd_partial(e, sampler, slot_x(1, 1));
  CHECK(std::fabs(sym - fd) < 1e-8);
  CHECK(sym == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("differentiate: general power requires an integer exponent") {
  SlotVocabulary v = vocab_n1m1();
  Expression ok = parse_expression("x0^3", v);
  CHECK_NOTHROW(ok.differentiate(slot_x(0, 1)));
  Expression bad = parse_expression("x0^0.5", v);
  CHECK_THROWS_AS(bad.differentiate(slot_x(0, 1)), ExprError);
  Expression viaexp = parse_expression("exp(0.5 * log(x0))", v);
  testutil::EnvSampler sampler;
  sampler.resize();
  sampler.xjets[0] = 1.3;
  double sym = viaexp.differentiate(slot_x(0, 1)).evaluate(sampler.make());
  CHECK(sym == doctest::Approx(0.5 / std::sqrt(1.3)).epsilon(1e-10));
}

TEST_CASE("evaluate: worked examples") {
  testutil::EnvSampler sampler;
  sampler.resize();
  sampler.xtjets[0] = 2.0;
  sampler.z = 3.0;
  CHECK(parse_expression("xt0 * z", vocab_n1m1()).evaluate(sampler.make()) == 6.0);
  CHECK(parse_expression("exp(0)", vocab_n1m1()).evaluate(sampler.make()) == 1.0);
}

TEST_CASE("evaluate: unbound slot and domain errors name the offender") {
  EvalEnv empty;
  CHECK_THROWS_AS(parse_expression("x0", vocab_n1m1()).evaluate(empty), EvalError);
  testutil::EnvSampler sampler;
  sampler.resize();
  sampler.xjets[0] = -1.0;
  CHECK_THROWS_WITH_AS(parse_expression("log(x0)", vocab_n1m1()).evaluate(sampler.make()),
                       "log of non-positive value in subexpression 'log(x0_1)'", EvalError);
  sampler.xjets[0] = 0.0;
  CHECK_THROWS_AS(parse_expression("1 / x0", vocab_n1m1()).evaluate(sampler.make()), EvalError);
}

TEST_CASE("evaluate: random trees match the hand-rolled interpreter") {
  testutil::ExprGen gen;
  gen.rng.seed(411);
  gen.leaves = {slot_t(), slot_x(0, 1), slot_x(1, 1), slot_xt(0, 1), slot_z()};
  testutil::EnvSampler sampler;
  sampler.resize();
  std::mt19937_64 env_rng(42);
  int checked = 0;
  while (checked < 200) {
    Expression e = gen.gen(4);
    sampler.randomize(env_rng);
    EvalEnv env = sampler.make();
    double mine;
    try {
      mine = e.evaluate(env);
    } catch (const EvalError&) {
      continue;  // domain-error draws are skipped
    }
    if (!std::isfinite(mine) || std::fabs(mine) > 1e9) continue;
    double ref = testutil::oracle_eval(e, env);
    CHECK(mine == ref);
    ++checked;
  }
}

TEST_CASE("property: symbolic partials match central differences on 1000 samples") {
  testutil::ExprGen gen;
  gen.rng.seed(2718);
  gen.leaves = {slot_t(), slot_x(0, 1), slot_x(1, 1), slot_xt(0, 1), slot_xt(1, 1), slot_z()};
  testutil::EnvSampler sampler;
  sampler.resize();
  std::mt19937_64 env_rng(31);
  std::uniform_int_distribution<size_t> pick_slot(0, gen.leaves.size() - 1);
  int checked = 0;
  while (checked < 1000) {
    Expression e = gen.gen(4);
    SlotId s = gen.leaves[pick_slot(env_rng)];
    sampler.randomize(env_rng);
    double sym, fd;
    try {
      sym = e.differentiate(s).evaluate(sampler.make());
      fd = testutil::fd_partial(e, sampler, s);
    } catch (const EvalError&) {
      continue;
    }
    if (!std::isfinite(sym) || !std::isfinite(fd)) continue;
    if (std::fabs(fd) > 1e5) continue;  // forward curvature ruins the step
    CHECK(std::fabs(sym - fd) <= 1e-6 * (1.0 + std::fabs(fd)));
    ++checked;
  }
}

TEST_CASE("property: print/parse round trip is structurally idempotent") {
  testutil::ExprGen gen;
  gen.rng.seed(99);
  gen.leaves = {slot_t(), slot_x(0, 1), slot_x(1, 1), slot_xt(0, 1), slot_z()};
  SlotVocabulary v = vocab_n1m1();
  for (int i = 0; i < 300; ++i) {
    Expression e = gen.gen(4);
    Expression reparsed = parse_expression(e.print(1, 1), v);
    CHECK(e.structurally_equal(reparsed));
  }
}

TEST_CASE("property: simplify preserves values exactly") {
  testutil::ExprGen gen;
  gen.rng.seed(5150);
  gen.leaves = {slot_t(), slot_x(0, 1), slot_z()};
  testutil::EnvSampler sampler;
  sampler.resize();
  std::mt19937_64 env_rng(7);
  int checked = 0;
  while (checked < 1000) {
    Expression e = gen.gen(4);
    Expression s = e.simplify();
    sampler.randomize(env_rng);
    EvalEnv env = sampler.make();
    double before, after;
    try {
      before = e.evaluate(env);
      after = s.evaluate(env);
    } catch (const EvalError&) {
      continue;
    }
    CHECK(before == after);
    ++checked;
  }
}

TEST_CASE("simplify: sanctioned rewrites") {
  SlotVocabulary v = vocab_n1m1();
  CHECK(parse_expression("0 * x0 + x1 * 1", v)
            .structurally_equal(parse_expression("x1", v)));
  CHECK(parse_expression("x0 + 0", v).structurally_equal(parse_expression("x0", v)));
  CHECK(parse_expression("2 * 3 + 1", v).constant_value() == 7.0);
  CHECK(parse_expression("x0 ^ 1", v).structurally_equal(parse_expression("x0", v)));
}

TEST_CASE("shortest round-trip decimals") {
  std::mt19937_64 rng(1234);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    double v = u(rng) * std::pow(10.0, (int)(i % 13) - 6);
    std::string s = format_double(v);
    CHECK(std::strtod(s.c_str(), nullptr) == v);
  }
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1.0) == "1");
}
