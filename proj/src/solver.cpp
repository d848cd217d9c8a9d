#include "herglotz/solver.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <thread>

#include "herglotz/dynamics.hpp"

namespace herglotz {

namespace {

std::vector<double> full_samples(const HerglotzProblem& problem, const Grid& grid,
                                 std::span<const double> decision) {
  const int m = problem.m;
  std::vector<double> x((size_t)grid.node_count() * m);
  for (int g = 0; g <= grid.M; ++g) {
    EvalEnv env;
    env.bind_time(grid.time_at(g));
    for (int j = 0; j < m; ++j) x[(size_t)g * m + j] = problem.history[j].evaluate(env);
  }
  for (int i = 0; i < grid.K; ++i)
    for (int j = 0; j < m; ++j)
      x[(size_t)(grid.M + 1 + i) * m + j] = decision[(size_t)i * m + j];
  return x;
}

double terminal_z(const HerglotzProblem& problem, const Grid& grid,
                  std::span<const double> decision) {
  std::vector<double> x = full_samples(problem, grid, decision);
  TrajectoryJets jets(problem, grid, x, problem.n);
  std::vector<double> z = integrate_z(problem, grid, jets);
  return z.back();
}

struct Merit {
  const HerglotzProblem& problem;
  const Grid& grid;
  const SolveOptions& opts;
  double sign;  // +1 minimize, -1 maximize

  // merit value; +inf when the integration blows up
  double operator()(std::span<const double> decision) const {
    double zb;
    try {
      zb = terminal_z(problem, grid, decision);
    } catch (const NumericalError&) {
      return std::numeric_limits<double>::infinity();
    }
    double f = sign * zb;
    if (opts.pin_b) {
      const int m = problem.m;
      for (int j = 0; j < m; ++j) {
        double dv = decision[(size_t)(grid.K - 1) * m + j] - (*opts.pin_b)[j];
        f += opts.pin_weight * dv * dv;
      }
    }
    return f;
  }
};

void fd_gradient(const Merit& merit, std::vector<double>& x, double step, int threads,
                 std::vector<double>& grad) {
  const int dim = (int)x.size();
  grad.assign(dim, 0.0);
  auto component = [&](int i, std::vector<double>& work) {
    const double xi = work[i];
    work[i] = xi + step;
    double fp = merit(work);
    work[i] = xi - step;
    double fm = merit(work);
    work[i] = xi;
    grad[i] = (fp - fm) / (2.0 * step);
  };
  if (threads <= 1) {
    std::vector<double> work = x;
    for (int i = 0; i < dim; ++i) component(i, work);
    return;
  }
  std::vector<std::thread> pool;
  const int nthreads = std::min(threads, dim);
  for (int t = 0; t < nthreads; ++t)
    pool.emplace_back([&, t]() {
      std::vector<double> work = x;
      for (int i = t; i < dim; i += nthreads) component(i, work);
    });
  for (auto& th : pool) th.join();
}

double inf_norm(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::fabs(x));
  return m;
}

}  // namespace

double objective(const HerglotzProblem& problem, const Grid& grid,
                 std::span<const double> x_decision) {
  if ((int)x_decision.size() != grid.K * problem.m)
    throw std::invalid_argument("objective: decision vector has wrong size");
  return terminal_z(problem, grid, x_decision);
}

SolveResult solve_extremal(const HerglotzProblem& problem, const Grid& grid,
                           const SolveOptions& opts) {
  if (!(opts.grad_step >= 1e-8 && opts.grad_step <= 1e-3))
    throw std::invalid_argument("solve_extremal: grad_step must lie in [1e-8, 1e-3]");
  if (!(opts.tol_grad > 0) || !(opts.tol_el > 0))
    throw std::invalid_argument("solve_extremal: tolerances must be positive");

  const int m = problem.m;
  const int dim = grid.K * m;

  // initial guess: constant continuation of the history value at a
  std::vector<double> x(dim);
  {
    EvalEnv env;
    env.bind_time(problem.a);
    std::vector<double> mu_a(m);
    for (int j = 0; j < m; ++j) mu_a[j] = problem.history[j].evaluate(env);
    for (int i = 0; i < grid.K; ++i)
      for (int j = 0; j < m; ++j) x[(size_t)i * m + j] = mu_a[j];
    if (opts.jitter > 0.0) {
      std::mt19937_64 rng(opts.seed);
      std::uniform_real_distribution<double> u(-opts.jitter, opts.jitter);
      for (double& v : x) v += u(rng);
    }
  }

  Merit merit{problem, grid, opts, opts.mode == SolveMode::Minimize ? 1.0 : -1.0};
  SolveResult result;

  double f = merit(x);
  if (!std::isfinite(f)) {
    result.diverged = true;
    result.message = "objective non-finite at the initial guess";
  }

  std::vector<double> grad(dim), grad_new(dim);
  fd_gradient(merit, x, opts.grad_step, opts.threads, grad);

  // BFGS inverse-Hessian accumulation with Armijo backtracking
  std::vector<double> Hinv((size_t)dim * dim, 0.0);
  for (int i = 0; i < dim; ++i) Hinv[(size_t)i * dim + i] = 1.0;
  std::vector<double> dir(dim), x_new(dim), s(dim), y(dim), Hy(dim);

  int iter = 0;
  for (; iter < opts.max_iters && !result.diverged; ++iter) {
    result.grad_norm = inf_norm(grad);
    if (result.grad_norm <= opts.tol_grad) {
      result.converged = true;
      break;
    }
    for (int i = 0; i < dim; ++i) {
      double acc = 0.0;
      for (int j = 0; j < dim; ++j) acc += Hinv[(size_t)i * dim + j] * grad[j];
      dir[i] = -acc;
    }
    double slope = 0.0;
    for (int i = 0; i < dim; ++i) slope += dir[i] * grad[i];
    if (slope >= 0.0) {  // reset to steepest descent
      for (int i = 0; i < dim; ++i) {
        for (int j = 0; j < dim; ++j) Hinv[(size_t)i * dim + j] = (i == j) ? 1.0 : 0.0;
        dir[i] = -grad[i];
      }
      slope = 0.0;
      for (int i = 0; i < dim; ++i) slope += dir[i] * grad[i];
    }

    double step = 1.0;
    double f_new = std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int ls = 0; ls < 48; ++ls) {
      for (int i = 0; i < dim; ++i) x_new[i] = x[i] + step * dir[i];
      f_new = merit(x_new);
      if (std::isfinite(f_new) && f_new <= f + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      result.message = "line search stalled";
      break;
    }

    fd_gradient(merit, x_new, opts.grad_step, opts.threads, grad_new);
    double sy = 0.0;
    for (int i = 0; i < dim; ++i) {
      s[i] = x_new[i] - x[i];
      y[i] = grad_new[i] - grad[i];
      sy += s[i] * y[i];
    }
    if (sy > 1e-14) {
      const double rho = 1.0 / sy;
      // Hinv <- (I - rho s y^T) Hinv (I - rho y s^T) + rho s s^T
      for (int i = 0; i < dim; ++i) {
        double acc = 0.0;
        for (int j = 0; j < dim; ++j) acc += Hinv[(size_t)i * dim + j] * y[j];
        Hy[i] = acc;
      }
      double yHy = 0.0;
      for (int i = 0; i < dim; ++i) yHy += y[i] * Hy[i];
      for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) {
          double v = Hinv[(size_t)i * dim + j];
          v -= rho * (s[i] * Hy[j] + Hy[i] * s[j]);
          v += rho * rho * yHy * s[i] * s[j];
          v += rho * s[i] * s[j];
          Hinv[(size_t)i * dim + j] = v;
        }
    }
    x = x_new;
    f = f_new;
    grad.swap(grad_new);
    if (!std::isfinite(f) || std::fabs(f) > 1e12) {
      result.diverged = true;
      result.message = "objective diverged";
    }
  }
  result.iterations = iter;
  if (!result.converged && result.message.empty())
    result.message = "iteration limit reached";

  // assemble the returned pair and its certificate; on divergence the
  // partial iterate is still returned, possibly without a certificate
  result.pair.x = full_samples(problem, grid, x);
  try {
    TrajectoryJets jets(problem, grid, result.pair.x, problem.n);
    result.pair.z = integrate_z(problem, grid, jets);
    result.objective = result.pair.z.back();
    std::vector<double> psi = compute_psi_z(problem, grid, jets, result.pair.z);
    result.el = el_residual(problem, grid, jets, result.pair.z, psi);
  } catch (const NumericalError& e) {
    result.diverged = true;
    result.objective = std::numeric_limits<double>::quiet_NaN();
    if (result.message.empty()) result.message = e.what();
  }
  return result;
}

}  // namespace herglotz
