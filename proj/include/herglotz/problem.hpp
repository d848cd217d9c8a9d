#pragma once

// Problem model: interval, delay, Lagrangian, history, and the gridded
// trajectory machinery (samples, finite-difference jets, Lagrangian
// environments). All types are immutable after construction.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "herglotz/expr.hpp"

namespace herglotz {

class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& message) : std::runtime_error(message) {}
};

struct Diagnostic {
  std::string where;
  std::string message;
};

struct HerglotzProblem {
  int n{1};          // highest derivative order in the Lagrangian
  int m{1};          // state dimension
  double a{0.0};
  double b{1.0};
  double tau{0.0};   // delay, 0 <= tau < b - a
  double gamma{0.0};  // z(a)
  Expression lagrangian;             // over t, x-jets <= n, xt-jets <= n, z
  std::vector<Expression> history;   // m expressions in t, valid on [a-tau, a]

  SlotVocabulary lagrangian_vocab() const { return SlotVocabulary::lagrangian(n, m); }
  bool z_independent() const;  // dL/dz simplifies to the zero constant
};

// Empty list iff the problem satisfies all structural requirements.
std::vector<Diagnostic> validate(const HerglotzProblem& problem);

// Uniform grid over [a - tau, b]. Nodes are a + (g - M) * h for
// g = 0..M+K. tau = M*h with M >= 4 when tau > 0; b - a = K*h with K
// even (the tail quadrature wants an even interval count from a).
struct Grid {
  double a{0}, b{1}, tau{0};
  double h{0};
  int M{0};  // delay steps; 0 when tau == 0
  int K{0};  // steps in [a, b]
  std::vector<double> times;  // size M + K + 1

  int node_count() const { return M + K + 1; }
  int index_of_a() const { return M; }
  double time_at(int g) const { return times[g]; }
};

Grid make_grid(const HerglotzProblem& problem, double target_h);

// x samples on every grid node (row-major, node*m + component) and z
// samples on [a, b] (z[i] belongs to node M + i).
struct TrajectoryPair {
  std::vector<double> x;
  std::vector<double> z;
};

struct ExtremizerTolerance {
  double epsilon{1e-6};  // sup-norm neighborhood radius, > 0
};

// Builds x samples that satisfy the history constraint: nodes in
// [a - tau, a] take the history values, later nodes come from `interior`
// evaluated per node (interior receives the node time).
std::vector<double> admissible_samples(const HerglotzProblem& problem, const Grid& grid,
                                       const std::vector<Expression>& interior_x);

// Diagnostics when the samples violate admissibility (history mismatch).
std::vector<Diagnostic> check_admissible(const HerglotzProblem& problem, const Grid& grid,
                                         std::span<const double> x_samples);

// Time-derivative jets of a sampled trajectory. On [a - tau, a) jets come
// from symbolic differentiation of the history; from t = a on they are
// finite differences of the samples, with the junction at a treated as a
// boundary (the trajectory may kink there).
class TrajectoryJets {
 public:
  TrajectoryJets(const HerglotzProblem& problem, const Grid& grid,
                 std::span<const double> x_samples, int max_order);

  int max_order() const { return max_order_; }
  int state_dim() const { return m_; }

  // value of the order-k jet at a grid node
  double at(int order, int g, int component) const;

  // stage = 0: node g; stage = 1: midpoint of [g, g+1]; stage = 2: node
  // g+1. Midpoints on the history side evaluate the history symbolically.
  // Stage jets feed the one-step integrator and come from short symmetric
  // differences (locally supported), so the discrete objective built on
  // them has an optimality system consistent with the continuous
  // equations; the wide high-order windows of at() would displace direct
  // minimizers through their boundary rows. Midpoints interpolate
  // cubically for the current state and linearly for delayed lookups
  // (the documented delayed-stage scheme, and its accuracy limiter).
  double at_stage(int order, int g, int stage, int component) const;
  double at_stage_delayed(int order, int g, int stage, int component) const;

  const Grid& grid() const { return *grid_; }

 private:
  double stage_node(int order, int g, int component) const;

  const Grid* grid_;
  int m_;
  int max_order_;
  int history_nodes_;                       // nodes strictly before a
  std::vector<std::vector<double>> jets_;   // [order][g*m + (j-1)]
  std::vector<std::vector<double>> stage_jets_;  // local symmetric differences
  std::vector<std::vector<Expression>> history_derivs_;  // [order][j-1]
};

// m-vector jet at a node (the order-k derivative of x at that node).
std::vector<double> jet(const TrajectoryJets& jets, int g, int order);

// Environment binding t, the x-jets at node g, the delayed jets at
// g - M (same node when tau = 0) and z. Jets are bound up to
// jet_order_max (defaults to the problem order n).
EvalEnv lagrangian_env(const HerglotzProblem& problem, const Grid& grid,
                       const TrajectoryJets& jets, double z_value, int g,
                       int jet_order_max = -1);

}  // namespace herglotz
