// Command-line surface: validate problem files, integrate z for a given
// trajectory, search for extremals, evaluate Euler-Lagrange residuals,
// check semi-invariance and evaluate Noether currents.
//
// Exit codes: 0 pass, 1 usage or JSON parse error, 2 validation error,
// 3 check failed, 4 numerical failure.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "herglotz/dynamics.hpp"
#include "herglotz/report_io.hpp"
#include "herglotz/reduction.hpp"

namespace fs = std::filesystem;
using namespace herglotz;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitValidation = 2;
constexpr int kExitCheckFailed = 3;
constexpr int kExitNumerical = 4;

struct Context {
  ProblemFile file;
  Grid grid;
  std::string out_dir;
};

int load_or_fail(const std::string& path, ProblemFile& out) {
  LoadResult r = load_problem_file(path);
  if (r.json_malformed) {
    for (const Diagnostic& d : r.errors) std::cerr << "error: " << d.message << "\n";
    return kExitUsage;
  }
  if (!r.file) {
    for (const Diagnostic& d : r.errors)
      std::cerr << "error: " << d.where << ": " << d.message << "\n";
    return kExitValidation;
  }
  out = std::move(*r.file);
  return kExitOk;
}

int thread_count_from_env() {
  const char* v = std::getenv("HERGLOTZ_THREADS");
  if (v == nullptr) return 1;
  int n = std::atoi(v);
  return n >= 1 ? n : 1;
}

void prepare_out_dir(const std::string& dir) { fs::create_directories(dir); }

std::string default_out_dir(const std::string& input) {
  fs::path p(input);
  return p.stem().string() + "_out";
}

// trajectory samples for commands that accept --x-from; the fallback is
// the constant continuation of the history value at a
std::vector<double> samples_for(const Context& ctx, const std::string& x_from) {
  if (!x_from.empty()) return samples_from_source(ctx.file.problem, ctx.grid, x_from);
  EvalEnv env;
  env.bind_time(ctx.file.problem.a);
  std::vector<Expression> constant;
  for (int j = 0; j < ctx.file.problem.m; ++j)
    constant.push_back(
        Expression::constant(ctx.file.problem.history[j].evaluate(env)));
  return admissible_samples(ctx.file.problem, ctx.grid, constant);
}

struct PairData {
  std::vector<double> x;
  TrajectoryJets jets;
  std::vector<double> z;
};

PairData build_pair(const Context& ctx, const std::vector<double>& x) {
  TrajectoryJets jets(ctx.file.problem, ctx.grid, x,
                      gauge_jet_order(ctx.file.problem.n));
  std::vector<double> z = integrate_z(ctx.file.problem, ctx.grid, jets);
  return PairData{x, std::move(jets), std::move(z)};
}

int cmd_validate(const std::string& input) {
  ProblemFile file;
  int rc = load_or_fail(input, file);
  if (rc != kExitOk) return rc;
  std::cout << "OK: " << input << " is a valid problem file\n";
  return kExitOk;
}

int cmd_simulate(Context& ctx, const std::string& x_from, bool check_reduction) {
  PairData pd = build_pair(ctx, samples_for(ctx, x_from));
  std::ostringstream summary;
  summary << "z(b) = " << format_double(pd.z.back()) << "\n";
  if (check_reduction) {
    if (ctx.grid.tau == 0.0) {
      summary << "reduction check skipped: tau = 0 (direct mode only)\n";
    } else {
      ReducedOCP reduced = reduce(ctx.file.problem, ctx.grid);
      auto block_z = integrate_reduced(ctx.file.problem, ctx.grid, pd.jets, reduced);
      double dz = std::fabs(pd.z.back() - reduced_terminal_z(block_z));
      summary << "reduction blocks N = " << reduced.N
              << ", |z_direct(b) - z_reduced(b)| = " << format_double(dz) << "\n";
    }
  }
  prepare_out_dir(ctx.out_dir);
  write_trajectory_csv(ctx.out_dir + "/trajectory.csv", ctx.file.problem, ctx.grid, pd.jets,
                       pd.z);
  write_gnuplot_script(ctx.out_dir + "/plot.gp", {"trajectory.csv"}, ctx.file.problem.m);
  write_text_file(ctx.out_dir + "/summary.txt", summary.str());
  std::cout << summary.str();
  return kExitOk;
}

int emit_el(Context& ctx, const PairData& pd, const Multipliers& mult, const ELReport& el,
            std::ostringstream& summary, std::vector<std::string>& csvs) {
  summary << "EL residual max: early " << format_double(el.max_early) << ", late "
          << format_double(el.max_late) << ", transversality "
          << format_double(el.max_transversality) << "\n";
  if (ctx.grid.tau > 0.0)
    summary << "branch junction gap at b - tau: " << format_double(el.junction_gap) << "\n";
  prepare_out_dir(ctx.out_dir);
  write_trajectory_csv(ctx.out_dir + "/trajectory.csv", ctx.file.problem, ctx.grid, pd.jets,
                       pd.z);
  write_multipliers_csv(ctx.out_dir + "/multipliers.csv", ctx.file.problem, ctx.grid, mult);
  write_residuals_csv(ctx.out_dir + "/residuals.csv", ctx.grid, el);
  csvs = {"trajectory.csv", "multipliers.csv", "residuals.csv"};
  return kExitOk;
}

int cmd_el_check(Context& ctx, const std::string& x_from) {
  PairData pd = build_pair(ctx, samples_for(ctx, x_from));
  Multipliers mult = compute_multipliers(ctx.file.problem, ctx.grid, pd.jets, pd.z);
  ELReport el = el_residual(ctx.file.problem, ctx.grid, pd.jets, pd.z, mult.psi_z);
  const bool free_end = !ctx.file.solver.pin_b.has_value();
  ExtremalVerdict v = is_extremal(el, ctx.file.solver.tol_el, free_end);

  std::ostringstream summary;
  std::vector<std::string> csvs;
  emit_el(ctx, pd, mult, el, summary, csvs);
  summary << (v.extremal ? "PASS" : "FAIL") << ": extremal certificate at tol "
          << format_double(ctx.file.solver.tol_el) << " (worst " << format_double(v.worst_value)
          << " at " << (v.worst.empty() ? "-" : v.worst) << ")\n";
  write_gnuplot_script(ctx.out_dir + "/plot.gp", csvs, ctx.file.problem.m);
  write_text_file(ctx.out_dir + "/summary.txt", summary.str());
  std::cout << summary.str();
  return v.extremal ? kExitOk : kExitCheckFailed;
}

int cmd_solve(Context& ctx) {
  SolveOptions opts = ctx.file.solver;
  opts.threads = thread_count_from_env();
  SolveResult res = solve_extremal(ctx.file.problem, ctx.grid, opts);

  std::ostringstream summary;
  summary << (res.converged ? "converged" : (res.diverged ? "diverged" : "not converged"))
          << " after " << res.iterations << " iterations, |grad| = "
          << format_double(res.grad_norm) << "\n";
  summary << "objective z(b) = " << format_double(res.objective) << "\n";
  if (!res.message.empty()) summary << "note: " << res.message << "\n";

  if (res.diverged) {
    std::cout << summary.str();
    return kExitNumerical;
  }
  TrajectoryJets jets(ctx.file.problem, ctx.grid, res.pair.x,
                      gauge_jet_order(ctx.file.problem.n));
  Multipliers mult = compute_multipliers(ctx.file.problem, ctx.grid, jets, res.pair.z);
  PairData pd{res.pair.x, std::move(jets), res.pair.z};
  std::vector<std::string> csvs;
  emit_el(ctx, pd, mult, res.el, summary, csvs);
  ExtremalVerdict v =
      is_extremal(res.el, ctx.file.solver.tol_el, !ctx.file.solver.pin_b.has_value());
  summary << (res.converged && v.extremal ? "PASS" : "FAIL")
          << ": converged extremal at tol_el " << format_double(ctx.file.solver.tol_el) << "\n";
  write_gnuplot_script(ctx.out_dir + "/plot.gp", csvs, ctx.file.problem.m);
  write_text_file(ctx.out_dir + "/summary.txt", summary.str());
  std::cout << summary.str();
  return (res.converged && v.extremal) ? kExitOk : kExitCheckFailed;
}

int cmd_invariance(Context& ctx, const std::string& x_from) {
  if (!ctx.file.group) {
    std::cerr << "error: the problem file has no group section\n";
    return kExitValidation;
  }
  PairData pd = build_pair(ctx, samples_for(ctx, x_from));
  std::vector<GaugeTestFunction> family =
      make_test_family(ctx.file.group->d, ctx.file.p_test_degrees, ctx.file.problem.a,
                       ctx.file.problem.b, ctx.file.p_seed);
  SemiInvarianceReport rep = check_semi_invariance(ctx.file.problem, ctx.grid, pd.jets, pd.z,
                                                   *ctx.file.group, family);
  std::ostringstream summary;
  for (const Diagnostic& d : rep.identity)
    summary << "identity check: " << d.where << ": " << d.message << "\n";
  summary << "test family:\n";
  for (const std::string& f : rep.family) summary << "  " << f << "\n";
  bool pass = rep.pass(ctx.file.invariance_tol);
  summary << "EQ1 max " << format_double(rep.eq1_max) << ", EQ2 max "
          << format_double(rep.eq2_max) << ", " << (pass ? "PASS" : "FAIL") << " at tol "
          << format_double(ctx.file.invariance_tol) << "\n";
  prepare_out_dir(ctx.out_dir);
  write_text_file(ctx.out_dir + "/summary.txt", summary.str());
  std::cout << summary.str();
  return pass ? kExitOk : kExitCheckFailed;
}

int cmd_currents(Context& ctx, const std::string& x_from, bool have_x,
                 const std::string& path_name) {
  if (!ctx.file.group) {
    std::cerr << "error: the problem file has no group section\n";
    return kExitValidation;
  }
  CurrentsPath path = CurrentsPath::Auto;
  if (path_name == "general") path = CurrentsPath::General;
  if (path_name == "first-order") path = CurrentsPath::FirstOrder;
  if (path_name == "z-independent") path = CurrentsPath::ZIndependent;

  std::ostringstream summary;
  std::vector<double> x;
  if (have_x) {
    x = samples_for(ctx, x_from);
  } else {
    SolveOptions opts = ctx.file.solver;
    opts.threads = thread_count_from_env();
    SolveResult res = solve_extremal(ctx.file.problem, ctx.grid, opts);
    summary << "solver: " << (res.converged ? "converged" : "not converged") << " after "
            << res.iterations << " iterations\n";
    if (res.diverged) {
      summary << "solver diverged; supply --x-from to evaluate along a given pair\n";
      std::cout << summary.str();
      return kExitNumerical;
    }
    x = res.pair.x;
  }
  PairData pd = build_pair(ctx, x);
  Multipliers mult = compute_multipliers(ctx.file.problem, ctx.grid, pd.jets, pd.z);
  ELReport el = el_residual(ctx.file.problem, ctx.grid, pd.jets, pd.z, mult.psi_z);
  NoetherReport rep = noether_currents(ctx.file.problem, ctx.grid, pd.jets, pd.z, mult,
                                       *ctx.file.group, path);
  ConstancySummary cs = constancy_report(rep, el, ctx.file.constancy_tol,
                                         ctx.file.solver.tol_el,
                                         !ctx.file.solver.pin_b.has_value());

  summary << "currents: " << rep.currents.size() << " (q+1 = " << rep.q + 1
          << ", d = " << rep.d << ")\n";
  for (int I = 0; I <= rep.q; ++I)
    for (int J = 1; J <= rep.d; ++J) {
      size_t c = (size_t)I * rep.d + (J - 1);
      summary << "C_" << I << "_" << J << ": deviation "
              << format_double(cs.per_current[c].deviation) << " (normalized "
              << format_double(cs.per_current[c].normalized) << ") -> "
              << (cs.per_current[c].constant ? "constant" : "not certified constant") << "\n";
    }
  summary << "extremal certificate: " << (cs.extremal_certified ? "yes" : "no") << " (worst EL "
          << format_double(cs.el_worst) << ", tol " << format_double(ctx.file.solver.tol_el)
          << ")\n";
  summary << (cs.all_constant ? "PASS" : "FAIL") << ": constancy at tol "
          << format_double(ctx.file.constancy_tol) << "\n";

  prepare_out_dir(ctx.out_dir);
  write_trajectory_csv(ctx.out_dir + "/trajectory.csv", ctx.file.problem, ctx.grid, pd.jets,
                       pd.z);
  write_multipliers_csv(ctx.out_dir + "/multipliers.csv", ctx.file.problem, ctx.grid, mult);
  write_residuals_csv(ctx.out_dir + "/residuals.csv", ctx.grid, el);
  write_currents_csv(ctx.out_dir + "/currents.csv", ctx.grid, rep);
  write_gnuplot_script(ctx.out_dir + "/plot.gp",
                       {"trajectory.csv", "multipliers.csv", "residuals.csv", "currents.csv"},
                       ctx.file.problem.m);
  write_text_file(ctx.out_dir + "/summary.txt", summary.str());
  std::cout << summary.str();
  return cs.all_constant ? kExitOk : kExitCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"higher-order time-delayed generalized variational problems: "
               "integration, extremals, semi-invariance and Noether currents"};
  app.require_subcommand(1);

  std::string input, out_dir, x_from, path_name = "auto";
  bool check_reduction = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("file", input, "problem file (JSON)")->required();
    cmd->add_option("--out", out_dir, "output directory for artifacts");
  };

  CLI::App* validate_cmd = app.add_subcommand("validate", "schema and model validation");
  validate_cmd->add_option("file", input, "problem file (JSON)")->required();

  CLI::App* simulate_cmd = app.add_subcommand("simulate", "integrate z for a given x");
  add_common(simulate_cmd);
  simulate_cmd->add_option("--x-from", x_from, "trajectory source: expr:<e;..> or CSV path");
  simulate_cmd->add_flag("--check-reduction", check_reduction,
                         "also integrate the reduced form and report |dz|");

  CLI::App* solve_cmd = app.add_subcommand("solve", "search for an extremal");
  add_common(solve_cmd);

  CLI::App* el_cmd = app.add_subcommand("el-check", "Euler-Lagrange residuals for a given x");
  add_common(el_cmd);
  el_cmd->add_option("--x-from", x_from, "trajectory source")->required();

  CLI::App* inv_cmd = app.add_subcommand("invariance", "semi-invariance residuals");
  add_common(inv_cmd);
  inv_cmd->add_option("--x-from", x_from, "trajectory source");

  CLI::App* cur_cmd = app.add_subcommand("currents", "Noether currents and constancy");
  add_common(cur_cmd);
  cur_cmd->add_option("--x-from", x_from, "trajectory source (default: run the solver)");
  cur_cmd->add_option("--path", path_name, "assembly path: auto, general, first-order, z-independent")
      ->check(CLI::IsMember({"auto", "general", "first-order", "z-independent"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (app.got_subcommand(validate_cmd)) return cmd_validate(input);

    Context ctx;
    int rc = load_or_fail(input, ctx.file);
    if (rc != kExitOk) return rc;
    ctx.grid = make_grid(ctx.file.problem, ctx.file.target_h);
    ctx.out_dir = out_dir.empty() ? default_out_dir(input) : out_dir;

    if (app.got_subcommand(simulate_cmd)) return cmd_simulate(ctx, x_from, check_reduction);
    if (app.got_subcommand(solve_cmd)) return cmd_solve(ctx);
    if (app.got_subcommand(el_cmd)) return cmd_el_check(ctx, x_from);
    if (app.got_subcommand(inv_cmd)) return cmd_invariance(ctx, x_from);
    if (app.got_subcommand(cur_cmd))
      return cmd_currents(ctx, x_from, !x_from.empty(), path_name);
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const EvalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
