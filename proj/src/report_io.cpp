#include "herglotz/report_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace herglotz {

using nlohmann::json;

namespace {

struct Loader {
  const json& root;
  std::vector<Diagnostic>& errors;

  const json* at(const std::string& pointer) const {
    try {
      return &root.at(json::json_pointer(pointer));
    } catch (const json::exception&) {
      return nullptr;
    }
  }

  bool require(const std::string& pointer) {
    if (at(pointer) == nullptr) {
      errors.push_back({pointer, "missing required field"});
      return false;
    }
    return true;
  }

  double number(const std::string& pointer, double fallback, bool required = false) {
    const json* j = at(pointer);
    if (j == nullptr) {
      if (required) errors.push_back({pointer, "missing required number"});
      return fallback;
    }
    if (!j->is_number()) {
      errors.push_back({pointer, "expected a number"});
      return fallback;
    }
    return j->get<double>();
  }

  long long integer(const std::string& pointer, long long fallback, bool required = false) {
    const json* j = at(pointer);
    if (j == nullptr) {
      if (required) errors.push_back({pointer, "missing required integer"});
      return fallback;
    }
    if (!j->is_number_integer()) {
      errors.push_back({pointer, "expected an integer"});
      return fallback;
    }
    return j->get<long long>();
  }

  std::string text(const std::string& pointer, const std::string& fallback,
                   bool required = false) {
    const json* j = at(pointer);
    if (j == nullptr) {
      if (required) errors.push_back({pointer, "missing required string"});
      return fallback;
    }
    if (!j->is_string()) {
      errors.push_back({pointer, "expected a string"});
      return fallback;
    }
    return j->get<std::string>();
  }

  Expression expr(const std::string& pointer, const SlotVocabulary& vocab, bool required) {
    std::string src = text(pointer, "0", required);
    try {
      return parse_expression(src, vocab);
    } catch (const ParseError& e) {
      errors.push_back({pointer, e.what()});
      return Expression::constant(0.0);
    }
  }
};

}  // namespace

LoadResult parse_problem_json(const std::string& text) {
  LoadResult result;
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    result.json_malformed = true;
    result.errors.push_back({"", std::string("malformed JSON: ") + e.what()});
    return result;
  }

  ProblemFile pf;
  Loader L{root, result.errors};

  L.require("/problem");
  pf.problem.n = (int)L.integer("/problem/n", 1, true);
  pf.problem.m = (int)L.integer("/problem/m", 1, true);
  pf.problem.a = L.number("/problem/a", 0.0, true);
  pf.problem.b = L.number("/problem/b", 1.0, true);
  pf.problem.tau = L.number("/problem/tau", 0.0, true);
  pf.problem.gamma = L.number("/problem/gamma", 0.0, true);
  if (pf.problem.n < 1 || pf.problem.m < 1) {
    result.errors.push_back({"/problem", "n and m must be >= 1"});
    return result;
  }
  const SlotVocabulary lv = pf.problem.lagrangian_vocab();
  pf.problem.lagrangian = L.expr("/problem/lagrangian", lv, true);
  const json* hist = L.at("/problem/history");
  if (hist == nullptr || !hist->is_array() || (int)hist->size() != pf.problem.m) {
    result.errors.push_back(
        {"/problem/history", "expected an array of " + std::to_string(pf.problem.m) +
                                 " expressions in t"});
  } else {
    for (int j = 0; j < pf.problem.m; ++j)
      pf.problem.history.push_back(
          L.expr("/problem/history/" + std::to_string(j), SlotVocabulary::history(), true));
  }

  pf.target_h = L.number("/grid/target_h", 0.01, true);
  if (!(pf.target_h > 0)) result.errors.push_back({"/grid/target_h", "must be > 0"});

  if (L.at("/solver") != nullptr) {
    std::string mode = L.text("/solver/mode", "minimize");
    if (mode == "minimize")
      pf.solver.mode = SolveMode::Minimize;
    else if (mode == "maximize")
      pf.solver.mode = SolveMode::Maximize;
    else
      result.errors.push_back({"/solver/mode", "expected \"minimize\" or \"maximize\""});
    pf.solver.max_iters = (int)L.integer("/solver/max_iters", pf.solver.max_iters);
    pf.solver.grad_step = L.number("/solver/grad_step", pf.solver.grad_step);
    pf.solver.tol_grad = L.number("/solver/tol_grad", pf.solver.tol_grad);
    pf.solver.tol_el = L.number("/solver/tol_el", pf.solver.tol_el);
    pf.solver.seed = (std::uint64_t)L.integer("/solver/seed", (long long)pf.solver.seed);
    pf.solver.jitter = L.number("/solver/jitter", pf.solver.jitter);
    pf.solver.pin_weight = L.number("/solver/pin_weight", pf.solver.pin_weight);
    const json* pin = L.at("/solver/pin_b");
    if (pin != nullptr) {
      if (!pin->is_array() || (int)pin->size() != pf.problem.m)
        result.errors.push_back({"/solver/pin_b", "expected an array of m numbers"});
      else {
        std::vector<double> pv;
        for (int j = 0; j < pf.problem.m; ++j)
          pv.push_back(L.number("/solver/pin_b/" + std::to_string(j), 0.0, true));
        pf.solver.pin_b = std::move(pv);
      }
    }
    if (!(pf.solver.grad_step >= 1e-8 && pf.solver.grad_step <= 1e-3))
      result.errors.push_back({"/solver/grad_step", "must lie in [1e-8, 1e-3]"});
  }

  if (L.at("/group") != nullptr) {
    GaugeGroup group;
    group.q = (int)L.integer("/group/q", 0, true);
    group.d = (int)L.integer("/group/d", 1, true);
    if (group.q < 0 || group.d < 1) {
      result.errors.push_back({"/group", "q must be >= 0 and d >= 1"});
    } else {
      const SlotVocabulary gv = group.map_vocab(pf.problem.n, pf.problem.m);
      const SlotVocabulary fv =
          SlotVocabulary::gauge_payoff(pf.problem.n, pf.problem.m, group.q, group.d);
      group.T = L.expr("/group/T", gv, true);
      const json* xs = L.at("/group/X");
      if (xs == nullptr || !xs->is_array() || (int)xs->size() != pf.problem.m)
        result.errors.push_back({"/group/X", "expected an array of m expressions"});
      else
        for (int j = 0; j < pf.problem.m; ++j)
          group.X.push_back(L.expr("/group/X/" + std::to_string(j), gv, true));
      group.Z = L.expr("/group/Z", gv, true);
      group.F = L.expr("/group/F", fv, false);
      const json* th = L.at("/group/theta");
      group.theta.assign(group.q + 1, std::vector<double>(group.d, 0.0));
      if (th != nullptr) {
        if (!th->is_array() || (int)th->size() != group.q + 1)
          result.errors.push_back({"/group/theta", "expected q + 1 rows"});
        else
          for (int I = 0; I <= group.q; ++I) {
            const json& row = (*th)[I];
            if (!row.is_array() || (int)row.size() != group.d) {
              result.errors.push_back(
                  {"/group/theta/" + std::to_string(I), "expected d entries"});
              continue;
            }
            for (int J = 0; J < group.d; ++J)
              group.theta[I][J] =
                  L.number("/group/theta/" + std::to_string(I) + "/" + std::to_string(J), 0.0,
                           true);
          }
      }
      const json* degs = L.at("/group/p_test_degrees");
      if (degs != nullptr) {
        if (!degs->is_array())
          result.errors.push_back({"/group/p_test_degrees", "expected an array of integers"});
        else {
          pf.p_test_degrees.clear();
          for (size_t i = 0; i < degs->size(); ++i)
            pf.p_test_degrees.push_back(
                (int)L.integer("/group/p_test_degrees/" + std::to_string(i), 0, true));
        }
      }
      pf.p_seed = (std::uint64_t)L.integer("/group/p_seed", (long long)pf.p_seed);
      pf.group = std::move(group);
    }
  }

  pf.invariance_tol = L.number("/checks/invariance_tol", pf.invariance_tol);
  pf.constancy_tol = L.number("/checks/constancy_tol", pf.constancy_tol);

  if (result.errors.empty()) {
    for (Diagnostic& d : validate(pf.problem))
      result.errors.push_back({"/problem/" + d.where, d.message});
  }
  if (result.errors.empty()) result.file = std::move(pf);
  return result;
}

LoadResult load_problem_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    LoadResult r;
    r.json_malformed = true;
    r.errors.push_back({"", "cannot open file: " + path});
    return r;
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_problem_json(ss.str());
}

// ------------------------------------------------------------ x sources

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::vector<double> samples_from_expr_list(const HerglotzProblem& problem, const Grid& grid,
                                           const std::string& list) {
  std::vector<std::string> parts = split(list, ';');
  if ((int)parts.size() != problem.m)
    throw std::invalid_argument("x source: expected " + std::to_string(problem.m) +
                                " expressions separated by ';'");
  std::vector<Expression> exprs;
  for (const std::string& p : parts) exprs.push_back(parse_expression(p, SlotVocabulary::history()));
  return admissible_samples(problem, grid, exprs);
}

std::vector<double> samples_from_csv(const HerglotzProblem& problem, const Grid& grid,
                                     const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("x source: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("x source: empty CSV");
  std::vector<std::string> header = split(line, ',');
  int t_col = -1;
  std::vector<int> x_cols(problem.m, -1);
  for (size_t c = 0; c < header.size(); ++c) {
    if (header[c] == "t") t_col = (int)c;
    for (int j = 1; j <= problem.m; ++j)
      if (header[c] == "x0_" + std::to_string(j)) x_cols[j - 1] = (int)c;
  }
  if (t_col < 0) throw std::invalid_argument("x source: CSV has no t column");
  for (int j = 0; j < problem.m; ++j)
    if (x_cols[j] < 0)
      throw std::invalid_argument("x source: CSV has no x0_" + std::to_string(j + 1) +
                                  " column");

  std::vector<double> x((size_t)grid.node_count() * problem.m);
  int g = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (g >= grid.node_count())
      throw std::invalid_argument("x source: CSV has more rows than grid nodes");
    std::vector<std::string> cells = split(line, ',');
    double t = std::strtod(cells[t_col].c_str(), nullptr);
    if (std::fabs(t - grid.time_at(g)) > 1e-9 * std::max(1.0, std::fabs(t)))
      throw std::invalid_argument("x source: CSV node times do not match the grid (row " +
                                  std::to_string(g + 1) + ")");
    for (int j = 0; j < problem.m; ++j)
      x[(size_t)g * problem.m + j] = std::strtod(cells[x_cols[j]].c_str(), nullptr);
    ++g;
  }
  if (g != grid.node_count())
    throw std::invalid_argument("x source: CSV has fewer rows than grid nodes");
  // the history segment always comes from the problem data
  for (int gg = 0; gg <= grid.M; ++gg) {
    EvalEnv env;
    env.bind_time(grid.time_at(gg));
    for (int j = 0; j < problem.m; ++j)
      x[(size_t)gg * problem.m + j] = problem.history[j].evaluate(env);
  }
  return x;
}

}  // namespace

std::vector<double> samples_from_source(const HerglotzProblem& problem, const Grid& grid,
                                        const std::string& source) {
  if (source.rfind("expr:", 0) == 0)
    return samples_from_expr_list(problem, grid, source.substr(5));
  if (source.rfind("csv:", 0) == 0) return samples_from_csv(problem, grid, source.substr(4));
  return samples_from_csv(problem, grid, source);
}

// ------------------------------------------------------------ artifacts

namespace {

void open_out(std::ofstream& out, const std::string& path) {
  out.open(path);
  if (!out) throw std::runtime_error("cannot write " + path);
}

}  // namespace

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out;
  open_out(out, path);
  out << content;
}

void write_trajectory_csv(const std::string& path, const HerglotzProblem& problem,
                          const Grid& grid, const TrajectoryJets& jets,
                          std::span<const double> z) {
  std::ofstream out;
  open_out(out, path);
  out << "t";
  for (int k = 0; k <= problem.n; ++k)
    for (int j = 1; j <= problem.m; ++j) out << ",x" << k << "_" << j;
  out << ",z\n";
  for (int g = 0; g < grid.node_count(); ++g) {
    out << format_double(grid.time_at(g));
    for (int k = 0; k <= problem.n; ++k)
      for (int j = 1; j <= problem.m; ++j) out << "," << format_double(jets.at(k, g, j));
    out << ",";
    if (g >= grid.M && !z.empty()) out << format_double(z[g - grid.M]);
    out << "\n";
  }
}

void write_multipliers_csv(const std::string& path, const HerglotzProblem& problem,
                           const Grid& grid, const Multipliers& multipliers) {
  std::ofstream out;
  open_out(out, path);
  out << "t,psi_z";
  for (int k = 1; k <= problem.n; ++k)
    for (int j = 1; j <= problem.m; ++j) out << ",phi" << k << "_" << j;
  out << ",H\n";
  for (int g = 0; g < grid.node_count(); ++g) {
    out << format_double(grid.time_at(g)) << ",";
    if (g >= grid.M) out << format_double(multipliers.psi_z[g - grid.M]);
    for (int k = 1; k <= problem.n; ++k)
      for (int j = 1; j <= problem.m; ++j)
        out << ","
            << format_double(multipliers.phi[k - 1][(size_t)g * problem.m + (j - 1)]);
    out << ",";
    if (g >= grid.M) out << format_double(multipliers.hamiltonian[g - grid.M]);
    out << "\n";
  }
}

void write_residuals_csv(const std::string& path, const Grid& grid, const ELReport& el) {
  std::ofstream out;
  open_out(out, path);
  const int m = el.m;
  out << "t";
  for (int j = 1; j <= m; ++j) out << ",el_early_" << j;
  for (int j = 1; j <= m; ++j) out << ",el_late_" << j;
  out << "\n";
  for (int g = grid.M; g < grid.node_count(); ++g) {
    out << format_double(grid.time_at(g));
    const int ei = g - el.early_first_node;
    for (int j = 0; j < m; ++j) {
      out << ",";
      if (!el.early.empty() && ei >= 0 && (size_t)(ei * m + j) < el.early.size())
        out << format_double(el.early[(size_t)ei * m + j]);
    }
    const int li = g - el.late_first_node;
    for (int j = 0; j < m; ++j) {
      out << ",";
      if (li >= 0 && (size_t)(li * m + j) < el.late.size())
        out << format_double(el.late[(size_t)li * m + j]);
    }
    out << "\n";
  }
}

void write_currents_csv(const std::string& path, const Grid& grid, const NoetherReport& report) {
  std::ofstream out;
  open_out(out, path);
  out << "t";
  for (int I = 0; I <= report.q; ++I)
    for (int J = 1; J <= report.d; ++J) out << ",C_" << I << "_" << J;
  out << "\n";
  for (int i = 0; i <= grid.K; ++i) {
    out << format_double(grid.time_at(grid.M + i));
    for (const auto& series : report.currents) out << "," << format_double(series[i]);
    out << "\n";
  }
}

void write_gnuplot_script(const std::string& path, const std::vector<std::string>& csv_files,
                          int m) {
  std::ofstream out;
  open_out(out, path);
  out << "# run artifacts; render with: gnuplot plot.gp\n";
  out << "set datafile separator ','\n";
  out << "set key autotitle columnhead\n";
  out << "set grid\n";
  out << "set terminal pngcairo size 1100,700\n";
  for (const std::string& f : csv_files) {
    std::string stem = f.substr(0, f.find('.'));
    out << "set output '" << stem << ".png'\n";
    if (stem == "trajectory") {
      out << "plot for [c=2:" << 1 + m << "] '" << f << "' using 1:c with lines, '" << f
          << "' using 1:(column('z')) with lines\n";
    } else {
      out << "plot for [c=2:*] '" << f << "' using 1:c with lines\n";
    }
  }
}

}  // namespace herglotz
