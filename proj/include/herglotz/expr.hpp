#pragma once

// Scalar expression trees over named slots (time, state jets, delayed
// jets, z, gauge jets) with exact symbolic partial differentiation.
// Expressions are immutable after construction; evaluation and
// differentiation are pure.

#include <cstdint>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace herglotz {

enum class SlotKind : std::uint8_t {
  Time,        // t
  StateJet,    // x{k}_{j}   : k-th derivative of state component j at t
  DelayedJet,  // xt{k}_{j}  : k-th derivative of state component j at t - tau
  Z,           // z
  GaugeJet,    // p{I}_{J}   : I-th derivative of gauge component J at t
  GaugeAtA,    // pa_{J}     : gauge component J at t = a (frozen)
  GaugeAtB,    // pb_{J}     : gauge component J at t = b (frozen)
  TerminalZ,   // zb         : z(b) of the pair under evaluation (frozen)
};

struct SlotId {
  SlotKind kind{SlotKind::Time};
  int order{0};      // derivative order; 0 for non-jet kinds
  int component{1};  // 1-based vector component; 1 for scalar kinds

  friend bool operator==(const SlotId&, const SlotId&) = default;
  friend auto operator<=>(const SlotId&, const SlotId&) = default;
};

inline SlotId slot_t() { return {SlotKind::Time, 0, 1}; }
inline SlotId slot_x(int order, int comp = 1) { return {SlotKind::StateJet, order, comp}; }
inline SlotId slot_xt(int order, int comp = 1) { return {SlotKind::DelayedJet, order, comp}; }
inline SlotId slot_z() { return {SlotKind::Z, 0, 1}; }
inline SlotId slot_p(int order, int comp = 1) { return {SlotKind::GaugeJet, order, comp}; }
inline SlotId slot_pa(int comp = 1) { return {SlotKind::GaugeAtA, 0, comp}; }
inline SlotId slot_pb(int comp = 1) { return {SlotKind::GaugeAtB, 0, comp}; }
inline SlotId slot_zb() { return {SlotKind::TerminalZ, 0, 1}; }

// Canonical textual name; the component suffix is omitted when the owning
// vector dimension is 1.
std::string slot_name(const SlotId& s, int state_dim, int gauge_dim);

// Which slot families an expression may reference and their bounds.
// Derivative-order / component violations are reported at parse time.
struct SlotVocabulary {
  int state_order_max{-1};  // -1: state jets not allowed
  int state_dim{1};
  int gauge_order_max{-1};  // -1: gauge jets not allowed
  int gauge_dim{1};
  bool allow_time{true};
  bool allow_z{false};
  bool allow_delayed{false};
  bool allow_frozen{false};  // pa, pb, zb

  static SlotVocabulary lagrangian(int n, int m);
  static SlotVocabulary history();
  static SlotVocabulary group_map(int n, int m, int q, int d);     // T, X, Z
  static SlotVocabulary gauge_payoff(int n, int m, int q, int d);  // F

  // empty string when admissible, else the reason
  std::string check(const SlotId& s) const;
};

enum class UnaryOp : std::uint8_t { Neg, Sin, Cos, Exp, Log, Sqrt };
enum class BinaryOp : std::uint8_t { Add, Sub, Mul, Div, Pow };

class ParseError : public std::runtime_error {
 public:
  ParseError(std::string message, int line, int column);
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_, column_;
};

class EvalError : public std::runtime_error {
 public:
  explicit EvalError(const std::string& message) : std::runtime_error(message) {}
};

class ExprError : public std::runtime_error {
 public:
  explicit ExprError(const std::string& message) : std::runtime_error(message) {}
};

// Dense slot environment. Families are bound as contiguous arrays; an
// evaluation touching an unbound slot raises EvalError naming the slot.
class EvalEnv {
 public:
  void bind_time(double t);
  void bind_z(double z);
  void bind_terminal_z(double zb);
  // jets[(order)*(dim) + (component-1)], orders 0..order_max
  void bind_state_jets(int order_max, int dim, std::vector<double> jets);
  void bind_delayed_jets(int order_max, int dim, std::vector<double> jets);
  void bind_gauge_jets(int order_max, int dim, std::vector<double> jets);
  void bind_gauge_boundary(std::vector<double> at_a, std::vector<double> at_b);

  double lookup(const SlotId& s) const;  // throws EvalError when unbound
  bool bound(const SlotId& s) const;

 private:
  bool has_t_{false}, has_z_{false}, has_zb_{false}, has_pab_{false};
  double t_{0}, z_{0}, zb_{0};
  int x_orders_{-1}, x_dim_{0};
  std::vector<double> xjets_;
  int xt_orders_{-1}, xt_dim_{0};
  std::vector<double> xtjets_;
  int p_orders_{-1}, p_dim_{0};
  std::vector<double> pjets_;
  std::vector<double> pa_, pb_;
};

class Expression {
 public:
  struct Node {
    enum class Kind : std::uint8_t { Constant, Slot, Unary, Binary } kind;
    UnaryOp uop{UnaryOp::Neg};
    BinaryOp bop{BinaryOp::Add};
    double value{0.0};
    SlotId slot{};
    std::int32_t lhs{-1}, rhs{-1};
  };

  Expression();  // constant 0

  static Expression constant(double v);
  static Expression slot(const SlotId& s);

  bool is_constant() const;
  double constant_value() const;  // requires is_constant()

  const std::vector<Node>& nodes() const { return nodes_; }
  std::int32_t root() const { return root_; }

  double evaluate(const EvalEnv& env) const;
  Expression differentiate(const SlotId& s) const;
  Expression simplify() const;
  std::string print(int state_dim = 1, int gauge_dim = 1) const;

  std::set<SlotId> slots() const;
  bool uses(const SlotId& s) const;
  bool structurally_equal(const Expression& other) const;

  // Replace every occurrence of a slot with a copy of `replacement`.
  Expression substitute(const SlotId& s, const Expression& replacement) const;

  friend class ExprBuilder;

 private:
  std::string print_subtree(std::int32_t node, int state_dim, int gauge_dim) const;

  std::vector<Node> nodes_;
  std::int32_t root_{0};
};

// Appends nodes into a fresh arena, folding constants and applying the
// value-preserving rewrites 0+x, x+0, x-0, 0*x, x*0, 1*x, x*1, x/1,
// x^0, x^1 and double negation.
class ExprBuilder {
 public:
  std::int32_t constant(double v);
  std::int32_t slot(const SlotId& s);
  std::int32_t unary(UnaryOp op, std::int32_t a);
  std::int32_t binary(BinaryOp op, std::int32_t a, std::int32_t b);

  std::int32_t add(std::int32_t a, std::int32_t b) { return binary(BinaryOp::Add, a, b); }
  std::int32_t sub(std::int32_t a, std::int32_t b) { return binary(BinaryOp::Sub, a, b); }
  std::int32_t mul(std::int32_t a, std::int32_t b) { return binary(BinaryOp::Mul, a, b); }
  std::int32_t div(std::int32_t a, std::int32_t b) { return binary(BinaryOp::Div, a, b); }
  std::int32_t pow(std::int32_t a, std::int32_t b) { return binary(BinaryOp::Pow, a, b); }
  std::int32_t neg(std::int32_t a) { return unary(UnaryOp::Neg, a); }

  std::int32_t copy(const Expression& e);
  std::int32_t copy(const Expression& e, std::int32_t node);

  Expression take(std::int32_t root);

 private:
  std::vector<Expression::Node> nodes_;
};

// Parse `source` in the given vocabulary. Grammar: standard infix with
// ^ for power (right associative), function-call syntax for unary ops,
// no implicit multiplication. Errors carry 1-based line and column.
Expression parse_expression(const std::string& source, const SlotVocabulary& vocab);

// Exponent semantics shared by evaluation and constant folding: integer
// exponents with |k| <= 32 are expanded as repeated multiplication.
double eval_pow(double base, double expo);

bool is_integer_constant(double v, long long& out);

// Shortest decimal string that parses back to exactly `v`.
std::string format_double(double v);

}  // namespace herglotz
