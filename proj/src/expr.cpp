#include "herglotz/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <sstream>

namespace herglotz {

// ---------------------------------------------------------------- slots

std::string slot_name(const SlotId& s, int state_dim, int gauge_dim) {
  auto with_comp = [](std::string base, int comp, int dim) {
    if (dim > 1) base += "_" + std::to_string(comp);
    return base;
  };
  switch (s.kind) {
    case SlotKind::Time: return "t";
    case SlotKind::Z: return "z";
    case SlotKind::TerminalZ: return "zb";
    case SlotKind::StateJet:
      return with_comp("x" + std::to_string(s.order), s.component, state_dim);
    case SlotKind::DelayedJet:
      return with_comp("xt" + std::to_string(s.order), s.component, state_dim);
    case SlotKind::GaugeJet:
      return with_comp("p" + std::to_string(s.order), s.component, gauge_dim);
    case SlotKind::GaugeAtA: return with_comp("pa", s.component, gauge_dim);
    case SlotKind::GaugeAtB: return with_comp("pb", s.component, gauge_dim);
  }
  return "?";
}

SlotVocabulary SlotVocabulary::lagrangian(int n, int m) {
  SlotVocabulary v;
  v.state_order_max = n;
  v.state_dim = m;
  v.allow_z = true;
  v.allow_delayed = true;
  return v;
}

SlotVocabulary SlotVocabulary::history() {
  SlotVocabulary v;  // t only
  return v;
}

SlotVocabulary SlotVocabulary::group_map(int n, int m, int q, int d) {
  SlotVocabulary v = lagrangian(n, m);
  v.gauge_order_max = q;
  v.gauge_dim = d;
  return v;
}

SlotVocabulary SlotVocabulary::gauge_payoff(int n, int m, int q, int d) {
  SlotVocabulary v = group_map(n, m, q, d);
  v.allow_frozen = true;
  return v;
}

std::string SlotVocabulary::check(const SlotId& s) const {
  switch (s.kind) {
    case SlotKind::Time:
      if (!allow_time) return "slot t not allowed here";
      return {};
    case SlotKind::Z:
      if (!allow_z) return "slot z not allowed here";
      return {};
    case SlotKind::TerminalZ:
      if (!allow_frozen) return "slot zb not allowed here";
      return {};
    case SlotKind::StateJet:
    case SlotKind::DelayedJet: {
      if (state_order_max < 0) return "state slots not allowed here";
      if (s.kind == SlotKind::DelayedJet && !allow_delayed)
        return "delayed slots not allowed here";
      if (s.order > state_order_max)
        return "derivative order " + std::to_string(s.order) +
               " exceeds maximum " + std::to_string(state_order_max);
      if (s.component < 1 || s.component > state_dim)
        return "component " + std::to_string(s.component) + " out of range 1.." +
               std::to_string(state_dim);
      return {};
    }
    case SlotKind::GaugeJet: {
      if (gauge_order_max < 0) return "gauge slots not allowed here";
      if (s.order > gauge_order_max)
        return "gauge derivative order " + std::to_string(s.order) +
               " exceeds maximum " + std::to_string(gauge_order_max);
      if (s.component < 1 || s.component > gauge_dim)
        return "gauge component " + std::to_string(s.component) + " out of range 1.." +
               std::to_string(gauge_dim);
      return {};
    }
    case SlotKind::GaugeAtA:
    case SlotKind::GaugeAtB:
      if (!allow_frozen || gauge_order_max < 0) return "frozen gauge slots not allowed here";
      if (s.component < 1 || s.component > gauge_dim)
        return "gauge component " + std::to_string(s.component) + " out of range 1.." +
               std::to_string(gauge_dim);
      return {};
  }
  return "unknown slot kind";
}

// ---------------------------------------------------------------- env

void EvalEnv::bind_time(double t) { t_ = t; has_t_ = true; }
void EvalEnv::bind_z(double z) { z_ = z; has_z_ = true; }
void EvalEnv::bind_terminal_z(double zb) { zb_ = zb; has_zb_ = true; }

void EvalEnv::bind_state_jets(int order_max, int dim, std::vector<double> jets) {
  x_orders_ = order_max;
  x_dim_ = dim;
  xjets_ = std::move(jets);
}

void EvalEnv::bind_delayed_jets(int order_max, int dim, std::vector<double> jets) {
  xt_orders_ = order_max;
  xt_dim_ = dim;
  xtjets_ = std::move(jets);
}

void EvalEnv::bind_gauge_jets(int order_max, int dim, std::vector<double> jets) {
  p_orders_ = order_max;
  p_dim_ = dim;
  pjets_ = std::move(jets);
}

void EvalEnv::bind_gauge_boundary(std::vector<double> at_a, std::vector<double> at_b) {
  pa_ = std::move(at_a);
  pb_ = std::move(at_b);
  has_pab_ = true;
}

bool EvalEnv::bound(const SlotId& s) const {
  switch (s.kind) {
    case SlotKind::Time: return has_t_;
    case SlotKind::Z: return has_z_;
    case SlotKind::TerminalZ: return has_zb_;
    case SlotKind::StateJet:
      return s.order <= x_orders_ && s.component >= 1 && s.component <= x_dim_;
    case SlotKind::DelayedJet:
      return s.order <= xt_orders_ && s.component >= 1 && s.component <= xt_dim_;
    case SlotKind::GaugeJet:
      return s.order <= p_orders_ && s.component >= 1 && s.component <= p_dim_;
    case SlotKind::GaugeAtA: return has_pab_ && s.component <= (int)pa_.size();
    case SlotKind::GaugeAtB: return has_pab_ && s.component <= (int)pb_.size();
  }
  return false;
}

double EvalEnv::lookup(const SlotId& s) const {
  if (!bound(s))
    throw EvalError("unbound slot " + slot_name(s, x_dim_ ? x_dim_ : 2, p_dim_ ? p_dim_ : 2));
  switch (s.kind) {
    case SlotKind::Time: return t_;
    case SlotKind::Z: return z_;
    case SlotKind::TerminalZ: return zb_;
    case SlotKind::StateJet: return xjets_[s.order * x_dim_ + (s.component - 1)];
    case SlotKind::DelayedJet: return xtjets_[s.order * xt_dim_ + (s.component - 1)];
    case SlotKind::GaugeJet: return pjets_[s.order * p_dim_ + (s.component - 1)];
    case SlotKind::GaugeAtA: return pa_[s.component - 1];
    case SlotKind::GaugeAtB: return pb_[s.component - 1];
  }
  throw EvalError("unknown slot kind");
}

// ---------------------------------------------------------------- helpers

bool is_integer_constant(double v, long long& out) {
  if (!std::isfinite(v)) return false;
  if (v != std::nearbyint(v)) return false;
  if (std::fabs(v) > 1e15) return false;
  out = (long long)v;
  return true;
}

double eval_pow(double base, double expo) {
  long long k;
  if (is_integer_constant(expo, k) && std::llabs(k) <= 32) {
    double r = 1.0;
    long long kk = std::llabs(k);
    for (long long i = 0; i < kk; ++i) r *= base;
    if (k < 0) {
      if (r == 0.0) throw EvalError("zero raised to a negative power");
      r = 1.0 / r;
    }
    return r;
  }
  if (base < 0.0) throw EvalError("negative base with non-integer exponent");
  if (base == 0.0 && expo < 0.0) throw EvalError("zero raised to a negative power");
  return std::pow(base, expo);
}

std::string format_double(double v) {
  char buf[40];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

// ---------------------------------------------------------------- builder

std::int32_t ExprBuilder::constant(double v) {
  Expression::Node n;
  n.kind = Expression::Node::Kind::Constant;
  n.value = v;
  nodes_.push_back(n);
  return (std::int32_t)nodes_.size() - 1;
}

std::int32_t ExprBuilder::slot(const SlotId& s) {
  Expression::Node n;
  n.kind = Expression::Node::Kind::Slot;
  n.slot = s;
  nodes_.push_back(n);
  return (std::int32_t)nodes_.size() - 1;
}

namespace {

bool node_is_const(const std::vector<Expression::Node>& nodes, std::int32_t i, double v) {
  return nodes[i].kind == Expression::Node::Kind::Constant && nodes[i].value == v;
}

bool node_is_any_const(const std::vector<Expression::Node>& nodes, std::int32_t i) {
  return nodes[i].kind == Expression::Node::Kind::Constant;
}

double apply_unary(UnaryOp op, double a) {
  switch (op) {
    case UnaryOp::Neg: return -a;
    case UnaryOp::Sin: return std::sin(a);
    case UnaryOp::Cos: return std::cos(a);
    case UnaryOp::Exp: return std::exp(a);
    case UnaryOp::Log:
      if (a <= 0.0) throw EvalError("log of non-positive value");
      return std::log(a);
    case UnaryOp::Sqrt:
      if (a < 0.0) throw EvalError("sqrt of negative value");
      return std::sqrt(a);
  }
  throw EvalError("unknown unary op");
}

double apply_binary(BinaryOp op, double a, double b) {
  switch (op) {
    case BinaryOp::Add: return a + b;
    case BinaryOp::Sub: return a - b;
    case BinaryOp::Mul: return a * b;
    case BinaryOp::Div:
      if (b == 0.0) throw EvalError("division by zero");
      return a / b;
    case BinaryOp::Pow: return eval_pow(a, b);
  }
  throw EvalError("unknown binary op");
}

}  // namespace

std::int32_t ExprBuilder::unary(UnaryOp op, std::int32_t a) {
  if (node_is_any_const(nodes_, a)) {
    // fold when the value is defined; otherwise keep the node so the
    // domain error surfaces at evaluation with context
    try {
      double v = apply_unary(op, nodes_[a].value);
      if (std::isfinite(v)) return constant(v);
    } catch (const EvalError&) {
    }
  }
  if (op == UnaryOp::Neg && nodes_[a].kind == Expression::Node::Kind::Unary &&
      nodes_[a].uop == UnaryOp::Neg)
    return nodes_[a].lhs;
  Expression::Node n;
  n.kind = Expression::Node::Kind::Unary;
  n.uop = op;
  n.lhs = a;
  nodes_.push_back(n);
  return (std::int32_t)nodes_.size() - 1;
}

std::int32_t ExprBuilder::binary(BinaryOp op, std::int32_t a, std::int32_t b) {
  if (node_is_any_const(nodes_, a) && node_is_any_const(nodes_, b)) {
    try {
      double v = apply_binary(op, nodes_[a].value, nodes_[b].value);
      if (std::isfinite(v)) return constant(v);
    } catch (const EvalError&) {
    }
  }
  switch (op) {
    case BinaryOp::Add:
      if (node_is_const(nodes_, a, 0.0)) return b;
      if (node_is_const(nodes_, b, 0.0)) return a;
      break;
    case BinaryOp::Sub:
      if (node_is_const(nodes_, b, 0.0)) return a;
      if (node_is_const(nodes_, a, 0.0)) return unary(UnaryOp::Neg, b);
      break;
    case BinaryOp::Mul:
      if (node_is_const(nodes_, a, 0.0) || node_is_const(nodes_, b, 0.0)) return constant(0.0);
      if (node_is_const(nodes_, a, 1.0)) return b;
      if (node_is_const(nodes_, b, 1.0)) return a;
      break;
    case BinaryOp::Div:
      if (node_is_const(nodes_, b, 1.0)) return a;
      break;
    case BinaryOp::Pow:
      if (node_is_const(nodes_, b, 1.0)) return a;
      if (node_is_const(nodes_, b, 0.0)) return constant(1.0);
      break;
  }
  Expression::Node n;
  n.kind = Expression::Node::Kind::Binary;
  n.bop = op;
  n.lhs = a;
  n.rhs = b;
  nodes_.push_back(n);
  return (std::int32_t)nodes_.size() - 1;
}

std::int32_t ExprBuilder::copy(const Expression& e) { return copy(e, e.root()); }

std::int32_t ExprBuilder::copy(const Expression& e, std::int32_t node) {
  const auto& n = e.nodes()[node];
  switch (n.kind) {
    case Expression::Node::Kind::Constant: return constant(n.value);
    case Expression::Node::Kind::Slot: return slot(n.slot);
    case Expression::Node::Kind::Unary: return unary(n.uop, copy(e, n.lhs));
    case Expression::Node::Kind::Binary: {
      std::int32_t l = copy(e, n.lhs);
      std::int32_t r = copy(e, n.rhs);
      return binary(n.bop, l, r);
    }
  }
  throw ExprError("corrupt expression node");
}

Expression ExprBuilder::take(std::int32_t root) {
  Expression e;
  e.nodes_ = std::move(nodes_);
  e.root_ = root;
  nodes_.clear();
  return e;
}

// ---------------------------------------------------------------- expression

Expression::Expression() {
  Node n;
  n.kind = Node::Kind::Constant;
  n.value = 0.0;
  nodes_.push_back(n);
  root_ = 0;
}

Expression Expression::constant(double v) {
  ExprBuilder b;
  return b.take(b.constant(v));
}

Expression Expression::slot(const SlotId& s) {
  ExprBuilder b;
  return b.take(b.slot(s));
}

bool Expression::is_constant() const { return nodes_[root_].kind == Node::Kind::Constant; }

double Expression::constant_value() const {
  if (!is_constant()) throw ExprError("expression is not a constant");
  return nodes_[root_].value;
}

double Expression::evaluate(const EvalEnv& env) const {
  std::function<double(std::int32_t)> rec = [&](std::int32_t i) -> double {
    const Node& n = nodes_[i];
    switch (n.kind) {
      case Node::Kind::Constant: return n.value;
      case Node::Kind::Slot: return env.lookup(n.slot);
      case Node::Kind::Unary: {
        double a = rec(n.lhs);
        try {
          return apply_unary(n.uop, a);
        } catch (const EvalError& e) {
          throw EvalError(std::string(e.what()) + " in subexpression '" + print_subtree(i, 2, 2) + "'");
        }
      }
      case Node::Kind::Binary: {
        double a = rec(n.lhs);
        double b = rec(n.rhs);
        try {
          return apply_binary(n.bop, a, b);
        } catch (const EvalError& e) {
          throw EvalError(std::string(e.what()) + " in subexpression '" + print_subtree(i, 2, 2) + "'");
        }
      }
    }
    throw EvalError("corrupt expression node");
  };
  return rec(root_);
}

Expression Expression::differentiate(const SlotId& s) const {
  ExprBuilder b;
  // returns (copy of node, derivative of node)
  std::function<std::pair<std::int32_t, std::int32_t>(std::int32_t)> rec =
      [&](std::int32_t i) -> std::pair<std::int32_t, std::int32_t> {
    const Node& n = nodes_[i];
    switch (n.kind) {
      case Node::Kind::Constant:
        return {b.constant(n.value), b.constant(0.0)};
      case Node::Kind::Slot:
        return {b.slot(n.slot), b.constant(n.slot == s ? 1.0 : 0.0)};
      case Node::Kind::Unary: {
        auto [u, du] = rec(n.lhs);
        switch (n.uop) {
          case UnaryOp::Neg: return {b.neg(u), b.neg(du)};
          case UnaryOp::Sin: return {b.unary(UnaryOp::Sin, u), b.mul(b.unary(UnaryOp::Cos, u), du)};
          case UnaryOp::Cos:
            return {b.unary(UnaryOp::Cos, u), b.neg(b.mul(b.unary(UnaryOp::Sin, u), du))};
          case UnaryOp::Exp: {
            std::int32_t e = b.unary(UnaryOp::Exp, u);
            return {e, b.mul(e, du)};
          }
          case UnaryOp::Log: return {b.unary(UnaryOp::Log, u), b.div(du, u)};
          case UnaryOp::Sqrt: {
            std::int32_t r = b.unary(UnaryOp::Sqrt, u);
            return {r, b.div(du, b.mul(b.constant(2.0), r))};
          }
        }
        throw ExprError("unknown unary op");
      }
      case Node::Kind::Binary: {
        auto [u, du] = rec(n.lhs);
        auto [v, dv] = rec(n.rhs);
        switch (n.bop) {
          case BinaryOp::Add: return {b.add(u, v), b.add(du, dv)};
          case BinaryOp::Sub: return {b.sub(u, v), b.sub(du, dv)};
          case BinaryOp::Mul: return {b.mul(u, v), b.add(b.mul(du, v), b.mul(u, dv))};
          case BinaryOp::Div:
            return {b.div(u, v), b.div(b.sub(b.mul(du, v), b.mul(u, dv)), b.mul(v, v))};
          case BinaryOp::Pow: {
            long long k = 0;
            bool const_int = nodes_[n.rhs].kind == Node::Kind::Constant &&
                             is_integer_constant(nodes_[n.rhs].value, k);
            if (!const_int)
              throw ExprError(
                  "power exponent must be a constant integer for differentiation; "
                  "rewrite general powers with exp and log");
            std::int32_t p = b.pow(u, v);
            std::int32_t km1 = b.constant((double)(k - 1));
            std::int32_t d = b.mul(b.constant((double)k), b.mul(b.pow(u, km1), du));
            return {p, d};
          }
        }
        throw ExprError("unknown binary op");
      }
    }
    throw ExprError("corrupt expression node");
  };
  auto [_, d] = rec(root_);
  return b.take(d);
}

Expression Expression::simplify() const {
  ExprBuilder b;
  return b.take(b.copy(*this));
}

std::set<SlotId> Expression::slots() const {
  // rewrites can leave unreachable nodes in the arena; walk from the root
  std::set<SlotId> reach;
  std::function<void(std::int32_t)> rec = [&](std::int32_t i) {
    const Node& n = nodes_[i];
    if (n.kind == Node::Kind::Slot) reach.insert(n.slot);
    if (n.kind == Node::Kind::Unary) rec(n.lhs);
    if (n.kind == Node::Kind::Binary) {
      rec(n.lhs);
      rec(n.rhs);
    }
  };
  rec(root_);
  return reach;
}

bool Expression::uses(const SlotId& s) const { return slots().count(s) > 0; }

bool Expression::structurally_equal(const Expression& other) const {
  std::function<bool(std::int32_t, std::int32_t)> rec = [&](std::int32_t i,
                                                            std::int32_t j) -> bool {
    const Node& a = nodes_[i];
    const Node& b = other.nodes_[j];
    if (a.kind != b.kind) return false;
    switch (a.kind) {
      case Node::Kind::Constant: return a.value == b.value;
      case Node::Kind::Slot: return a.slot == b.slot;
      case Node::Kind::Unary: return a.uop == b.uop && rec(a.lhs, b.lhs);
      case Node::Kind::Binary:
        return a.bop == b.bop && rec(a.lhs, b.lhs) && rec(a.rhs, b.rhs);
    }
    return false;
  };
  return rec(root_, other.root_);
}

Expression Expression::substitute(const SlotId& s, const Expression& replacement) const {
  ExprBuilder b;
  std::function<std::int32_t(std::int32_t)> rec = [&](std::int32_t i) -> std::int32_t {
    const Node& n = nodes_[i];
    switch (n.kind) {
      case Node::Kind::Constant: return b.constant(n.value);
      case Node::Kind::Slot:
        if (n.slot == s) return b.copy(replacement);
        return b.slot(n.slot);
      case Node::Kind::Unary: return b.unary(n.uop, rec(n.lhs));
      case Node::Kind::Binary: {
        std::int32_t l = rec(n.lhs);
        std::int32_t r = rec(n.rhs);
        return b.binary(n.bop, l, r);
      }
    }
    throw ExprError("corrupt expression node");
  };
  return b.take(rec(root_));
}

// ---------------------------------------------------------------- printing

namespace {
const char* unary_name(UnaryOp op) {
  switch (op) {
    case UnaryOp::Neg: return "-";
    case UnaryOp::Sin: return "sin";
    case UnaryOp::Cos: return "cos";
    case UnaryOp::Exp: return "exp";
    case UnaryOp::Log: return "log";
    case UnaryOp::Sqrt: return "sqrt";
  }
  return "?";
}

int precedence_of(const Expression::Node& n) {
  switch (n.kind) {
    case Expression::Node::Kind::Constant:
      return n.value < 0 ? 1 : 100;  // negative literals print with sign
    case Expression::Node::Kind::Slot: return 100;
    case Expression::Node::Kind::Unary:
      return n.uop == UnaryOp::Neg ? 2 : 100;  // call syntax binds tight
    case Expression::Node::Kind::Binary:
      switch (n.bop) {
        case BinaryOp::Add:
        case BinaryOp::Sub: return 1;
        case BinaryOp::Mul:
        case BinaryOp::Div: return 2;
        case BinaryOp::Pow: return 3;
      }
  }
  return 0;
}
}  // namespace

std::string Expression::print(int state_dim, int gauge_dim) const {
  return print_subtree(root_, state_dim, gauge_dim);
}

std::string Expression::print_subtree(std::int32_t node, int state_dim, int gauge_dim) const {
  std::function<std::string(std::int32_t, int, bool)> rec = [&](std::int32_t i, int parent_prec,
                                                                bool right_side) -> std::string {
    const Node& n = nodes_[i];
    int prec = precedence_of(n);
    std::string s;
    switch (n.kind) {
      case Node::Kind::Constant: s = format_double(n.value); break;
      case Node::Kind::Slot: s = slot_name(n.slot, state_dim, gauge_dim); break;
      case Node::Kind::Unary:
        if (n.uop == UnaryOp::Neg)
          s = "-" + rec(n.lhs, prec, true);
        else
          s = std::string(unary_name(n.uop)) + "(" + rec(n.lhs, 0, false) + ")";
        break;
      case Node::Kind::Binary: {
        const char* op = n.bop == BinaryOp::Add   ? " + "
                         : n.bop == BinaryOp::Sub ? " - "
                         : n.bop == BinaryOp::Mul ? " * "
                         : n.bop == BinaryOp::Div ? " / "
                                                  : "^";
        bool right_assoc = n.bop == BinaryOp::Pow;
        std::string l = rec(n.lhs, right_assoc ? prec + 1 : prec, false);
        std::string r = rec(n.rhs, right_assoc ? prec : prec + 1, true);
        s = l + op + r;
        break;
      }
    }
    bool need_paren = prec < parent_prec || (prec == parent_prec && right_side && prec < 100);
    if (need_paren) s = "(" + s + ")";
    return s;
  };
  return rec(node, 0, false);
}

// ---------------------------------------------------------------- parser

namespace {

struct Lexer {
  const std::string& src;
  size_t pos{0};
  int line{1}, col{1};

  struct Token {
    enum Kind { End, Number, Name, Plus, Minus, Star, Slash, Caret, LParen, RParen } kind{End};
    double number{0};
    std::string name;
    int line{1}, col{1};
  } tok;

  explicit Lexer(const std::string& s) : src(s) { next(); }

  void advance_char() {
    if (src[pos] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
    ++pos;
  }

  void next() {
    while (pos < src.size() && std::isspace((unsigned char)src[pos])) advance_char();
    tok = Token{};
    tok.line = line;
    tok.col = col;
    if (pos >= src.size()) {
      tok.kind = Token::End;
      return;
    }
    char c = src[pos];
    if (std::isdigit((unsigned char)c) || c == '.') {
      const char* start = src.c_str() + pos;
      char* end = nullptr;
      double v = std::strtod(start, &end);
      if (end == start) throw ParseError("cannot parse number", line, col);
      size_t len = (size_t)(end - start);
      for (size_t i = 0; i < len; ++i) advance_char();
      tok.kind = Token::Number;
      tok.number = v;
      return;
    }
    if (std::isalpha((unsigned char)c) || c == '_') {
      std::string name;
      while (pos < src.size() &&
             (std::isalnum((unsigned char)src[pos]) || src[pos] == '_')) {
        name += src[pos];
        advance_char();
      }
      tok.kind = Token::Name;
      tok.name = name;
      return;
    }
    advance_char();
    switch (c) {
      case '+': tok.kind = Token::Plus; return;
      case '-': tok.kind = Token::Minus; return;
      case '*': tok.kind = Token::Star; return;
      case '/': tok.kind = Token::Slash; return;
      case '^': tok.kind = Token::Caret; return;
      case '(': tok.kind = Token::LParen; return;
      case ')': tok.kind = Token::RParen; return;
    }
    throw ParseError(std::string("unexpected character '") + c + "'", tok.line, tok.col);
  }
};

bool parse_index_suffix(const std::string& text, size_t from, int& order, int& comp,
                        bool& has_comp) {
  // digits [ '_' digits ]
  size_t i = from;
  if (i >= text.size() || !std::isdigit((unsigned char)text[i])) return false;
  order = 0;
  while (i < text.size() && std::isdigit((unsigned char)text[i]))
    order = order * 10 + (text[i++] - '0');
  has_comp = false;
  comp = 1;
  if (i < text.size() && text[i] == '_') {
    ++i;
    if (i >= text.size() || !std::isdigit((unsigned char)text[i])) return false;
    comp = 0;
    while (i < text.size() && std::isdigit((unsigned char)text[i]))
      comp = comp * 10 + (text[i++] - '0');
    has_comp = true;
  }
  return i == text.size();
}

bool parse_component_only(const std::string& text, size_t from, int& comp) {
  if (from == text.size()) {
    comp = 1;
    return true;
  }
  if (text[from] != '_') return false;
  size_t i = from + 1;
  if (i >= text.size() || !std::isdigit((unsigned char)text[i])) return false;
  comp = 0;
  while (i < text.size() && std::isdigit((unsigned char)text[i]))
    comp = comp * 10 + (text[i++] - '0');
  return i == text.size();
}

bool lookup_slot(const std::string& name, SlotId& out) {
  if (name == "t") {
    out = slot_t();
    return true;
  }
  if (name == "z") {
    out = slot_z();
    return true;
  }
  if (name == "zb") {
    out = slot_zb();
    return true;
  }
  int order = 0, comp = 1;
  bool has_comp = false;
  if (name.rfind("xt", 0) == 0 && parse_index_suffix(name, 2, order, comp, has_comp)) {
    out = slot_xt(order, comp);
    return true;
  }
  if (name.rfind("pa", 0) == 0 && parse_component_only(name, 2, comp)) {
    out = slot_pa(comp);
    return true;
  }
  if (name.rfind("pb", 0) == 0 && parse_component_only(name, 2, comp)) {
    out = slot_pb(comp);
    return true;
  }
  if (name[0] == 'x' && parse_index_suffix(name, 1, order, comp, has_comp)) {
    out = slot_x(order, comp);
    return true;
  }
  if (name[0] == 'p' && parse_index_suffix(name, 1, order, comp, has_comp)) {
    out = slot_p(order, comp);
    return true;
  }
  return false;
}

struct Parser {
  Lexer lex;
  ExprBuilder& b;
  const SlotVocabulary& vocab;

  Parser(const std::string& src, ExprBuilder& builder, const SlotVocabulary& v)
      : lex(src), b(builder), vocab(v) {}

  using Token = Lexer::Token;

  [[noreturn]] void fail(const std::string& msg) { throw ParseError(msg, lex.tok.line, lex.tok.col); }

  std::int32_t parse_expr() {
    std::int32_t left = parse_term();
    while (lex.tok.kind == Token::Plus || lex.tok.kind == Token::Minus) {
      bool plus = lex.tok.kind == Token::Plus;
      lex.next();
      std::int32_t right = parse_term();
      left = plus ? b.add(left, right) : b.sub(left, right);
    }
    return left;
  }

  std::int32_t parse_term() {
    std::int32_t left = parse_unary();
    while (lex.tok.kind == Token::Star || lex.tok.kind == Token::Slash) {
      bool star = lex.tok.kind == Token::Star;
      lex.next();
      std::int32_t right = parse_unary();
      left = star ? b.mul(left, right) : b.div(left, right);
    }
    return left;
  }

  std::int32_t parse_unary() {
    if (lex.tok.kind == Token::Minus) {
      lex.next();
      return b.neg(parse_unary());
    }
    return parse_power();
  }

  std::int32_t parse_power() {
    std::int32_t base = parse_atom();
    if (lex.tok.kind == Token::Caret) {
      lex.next();
      std::int32_t expo = parse_unary();  // right associative, allows x^-2
      return b.pow(base, expo);
    }
    return base;
  }

  std::int32_t parse_atom() {
    switch (lex.tok.kind) {
      case Token::Number: {
        double v = lex.tok.number;
        lex.next();
        return b.constant(v);
      }
      case Token::LParen: {
        lex.next();
        std::int32_t e = parse_expr();
        if (lex.tok.kind != Token::RParen) fail("expected ')'");
        lex.next();
        return e;
      }
      case Token::Name: {
        std::string name = lex.tok.name;
        int nline = lex.tok.line, ncol = lex.tok.col;
        lex.next();
        if (lex.tok.kind == Token::LParen) {
          UnaryOp op;
          if (name == "sin")
            op = UnaryOp::Sin;
          else if (name == "cos")
            op = UnaryOp::Cos;
          else if (name == "exp")
            op = UnaryOp::Exp;
          else if (name == "log")
            op = UnaryOp::Log;
          else if (name == "sqrt")
            op = UnaryOp::Sqrt;
          else
            throw ParseError("unknown function '" + name + "'", nline, ncol);
          lex.next();
          std::int32_t arg = parse_expr();
          if (lex.tok.kind != Token::RParen) fail("expected ')'");
          lex.next();
          return b.unary(op, arg);
        }
        SlotId s;
        if (!lookup_slot(name, s)) throw ParseError("unknown slot name '" + name + "'", nline, ncol);
        std::string err = vocab.check(s);
        if (!err.empty()) throw ParseError("slot '" + name + "': " + err, nline, ncol);
        return b.slot(s);
      }
      default: fail("expected a number, slot, function call or '('");
    }
  }
};

}  // namespace

ParseError::ParseError(std::string message, int line, int column)
    : std::runtime_error(message + " (line " + std::to_string(line) + ", column " +
                         std::to_string(column) + ")"),
      line_(line),
      column_(column) {}

Expression parse_expression(const std::string& source, const SlotVocabulary& vocab) {
  ExprBuilder b;
  Parser p(source, b, vocab);
  std::int32_t root = p.parse_expr();
  if (p.lex.tok.kind != Lexer::Token::End) p.fail("unexpected trailing input");
  return b.take(root);
}

}  // namespace herglotz
