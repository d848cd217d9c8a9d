#pragma once

// Gauge transformation groups (T, X, Z) depending on arbitrary functions
// p and their derivatives, semi-invariance residuals, and the d(q+1)
// Noether currents evaluated along a pair.

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "herglotz/dynamics.hpp"
#include "herglotz/euler_lagrange.hpp"
#include "herglotz/problem.hpp"

namespace herglotz {

struct GaugeGroup {
  int q{0};  // highest gauge-derivative order
  int d{1};  // gauge dimension
  Expression T;                // over t, x-jets, xt-jets, z, p-jets
  std::vector<Expression> X;   // m components, same vocabulary
  Expression Z;
  // F may additionally reference the frozen scalars pa_J, pb_J (values of
  // p at the interval ends) and zb (terminal z of the pair). The frozen
  // slots are constants under both d/dt and the gauge partials, and are
  // zero at the zero-gauge point.
  Expression F;
  std::vector<std::vector<double>> theta;  // (q+1) rows, d columns

  SlotVocabulary map_vocab(int n, int m) const {
    return SlotVocabulary::group_map(n, m, q, d);
  }
};

// exact polynomial in t; derivatives of every order are available
struct Polynomial {
  std::vector<double> c;  // sum c[i] t^i

  double eval(double t) const;
  Polynomial derivative() const;
  double derivative_value(int order, double t) const;
  std::string describe() const;
};

// one gauge test function p: [a,b] -> R^d
struct GaugeTestFunction {
  std::vector<Polynomial> comps;

  double jet(int comp1based, int order, double t) const {
    return comps[comp1based - 1].derivative_value(order, t);
  }
};

// seeded polynomial family of the given degrees, scaled so that
// |dT/dt - 1| stays well below 1 for translation-style groups
std::vector<GaugeTestFunction> make_test_family(int d, std::span<const int> degrees,
                                                double a, double b, std::uint64_t seed);

// The group must reduce to the identity when every gauge jet vanishes.
// Samples are drawn with the delayed jets equal to the current ones, so
// groups whose X transforms the delayed coordinate qualify as well.
std::vector<Diagnostic> check_identity_at_zero(const GaugeGroup& group, int n, int m,
                                               int sample_count, std::uint64_t seed = 12345);

// Environment of the full argument tuple alpha(t) at a node of [a, b]:
// x-jets and delayed jets to x_orders, z(t), gauge jets of p to p_orders
// (zero when p is null), pa/pb and zb bound as frozen values.
EvalEnv alpha_env(const HerglotzProblem& problem, const Grid& grid, const TrajectoryJets& jets,
                  std::span<const double> z, const GaugeGroup& group,
                  const GaugeTestFunction* p, int g, int x_orders, int p_orders);

// d/dt of expr(alpha(t)) at node g by the exact slot chain rule; the
// z slot moves with L, gauge jets move with the exact derivatives of p,
// frozen slots do not move.
double total_time_derivative(const Expression& expr, const HerglotzProblem& problem,
                             const Grid& grid, const TrajectoryJets& jets,
                             std::span<const double> z, const GaugeGroup& group,
                             const GaugeTestFunction* p, int g);

// d^k/dT^k X along the pair for a concrete test function: level 0 is X
// itself, level 1 uses the exact chain rule, higher levels differentiate
// the cached series by stencils and divide by dT/dt. Series live on the
// nodes of [a, b]. Raises when |dT/dt| < 1e-8 somewhere.
std::vector<std::vector<double>> dTkX_series(const HerglotzProblem& problem, const Grid& grid,
                                             const TrajectoryJets& jets,
                                             std::span<const double> z, const GaugeGroup& group,
                                             const GaugeTestFunction& p, int comp1based,
                                             int kmax);

// d/dt of expr(alpha(t)) as an expression: slots shift one derivative
// order up, the z slot is replaced by the Lagrangian, frozen slots drop.
Expression symbolic_total_derivative(const Expression& expr, const HerglotzProblem& problem);

// d^k/dT^k X_j as an expression over the extended slot vocabulary
Expression dTkX_expression(const GaugeGroup& group, const HerglotzProblem& problem,
                           int comp1based, int k);

// symbolic gauge partial: differentiate w.r.t. the gauge-jet slot and
// evaluate at an environment whose gauge jets are zero
double gauge_partial_at_zero(const Expression& expr, const SlotId& gauge_slot,
                             const EvalEnv& env_at_zero);

// Numeric fallback: central difference in the amplitude of the monomial
// family p_J(s) = c (s - t_g)^I / I!, re-centered at every node; only
// certified for first-order problems with q <= 2.
std::vector<double> numeric_gauge_partial(
    const std::function<std::vector<double>(const GaugeTestFunction&)>& series_of_p,
    const Grid& grid, int I, int J, int d, double step = 1e-5);

struct SemiInvarianceReport {
  double eq1_max{0};
  double eq2_max{0};
  std::vector<double> eq1_per_p, eq2_per_p;
  std::vector<std::string> family;
  std::vector<Diagnostic> identity;

  bool pass(double tol) const {
    return identity.empty() && eq1_max <= tol && eq2_max <= tol;
  }
};

// Node-wise residuals of the two semi-invariance identities for every
// test function. The transformed Lagrangian environment binds the time
// slot to T, both the current and the delayed state slots to the
// transformed jets d^k/dT^k X evaluated at the node, and z to Z; the
// group's X describes the transformed trajectory as the Lagrangian
// consumes it (a single state image transforms one effective coordinate).
SemiInvarianceReport check_semi_invariance(const HerglotzProblem& problem, const Grid& grid,
                                           const TrajectoryJets& jets, std::span<const double> z,
                                           const GaugeGroup& group,
                                           std::span<const GaugeTestFunction> test_functions);

enum class CurrentsPath {
  Auto,
  General,       // any n
  FirstOrder,    // n = 1: no jet recursion inside the currents
  ZIndependent,  // n = 1, dL/dz = 0 and Z = z: psi_z = 1 and no psi dZ term
};

struct NoetherReport {
  int q{0}, d{1};
  CurrentsPath path_used{CurrentsPath::General};
  // currents[I*d + (J-1)][i] on the nodes of [a, b]
  std::vector<std::vector<double>> currents;
  // term breakdown: dF/dp, theta z(b)/(b-a), phi-dot-X, psi dZ, -H dT
  std::vector<std::array<std::vector<double>, 5>> terms;
  std::vector<double> deviation;       // max |C(t) - C(a)|
  std::vector<double> deviation_rel;   // deviation / max(1, max |C|)
};

NoetherReport noether_currents(const HerglotzProblem& problem, const Grid& grid,
                               const TrajectoryJets& jets, std::span<const double> z,
                               const Multipliers& multipliers, const GaugeGroup& group,
                               CurrentsPath path = CurrentsPath::Auto);

struct CurrentVerdict {
  double deviation{0};
  double normalized{0};
  bool constant{false};
};

struct ConstancySummary {
  std::vector<CurrentVerdict> per_current;
  bool extremal_certified{false};
  double el_worst{0};
  bool all_constant{false};
};

// A current counts as constant only along certified extremals: the
// deviation bound is meaningless when the Euler-Lagrange residuals are
// large, so the verdict requires both.
ConstancySummary constancy_report(const NoetherReport& report, const ELReport& el, double tol,
                                  double el_tol, bool free_endpoint = true);

// jets order the gauge machinery needs from TrajectoryJets
int gauge_jet_order(int n);

}  // namespace herglotz
