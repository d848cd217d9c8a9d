#pragma once

// Problem/group file loading (JSON), CSV emission, gnuplot script and
// run summaries. Reals are serialized as shortest round-trip decimals so
// emitted tables re-ingest losslessly.

#include <optional>
#include <string>
#include <vector>

#include "herglotz/euler_lagrange.hpp"
#include "herglotz/problem.hpp"
#include "herglotz/solver.hpp"
#include "herglotz/symmetry.hpp"

namespace herglotz {

struct ProblemFile {
  HerglotzProblem problem;
  double target_h{0.01};
  SolveOptions solver;
  std::optional<GaugeGroup> group;
  std::vector<int> p_test_degrees{0, 1, 2, 3};
  std::uint64_t p_seed{2024};
  double invariance_tol{1e-6};
  double constancy_tol{1e-6};
};

struct LoadResult {
  std::optional<ProblemFile> file;
  std::vector<Diagnostic> errors;  // `where` holds a JSON pointer
  bool json_malformed{false};
};

LoadResult parse_problem_json(const std::string& text);
LoadResult load_problem_file(const std::string& path);

// ------------------------------------------------------------ x sources

// "expr:<e1>;<e2>;..." or "csv:<path>" or a bare CSV path. Expressions
// are functions of t; the history segment always comes from the problem.
std::vector<double> samples_from_source(const HerglotzProblem& problem, const Grid& grid,
                                        const std::string& source);

// ------------------------------------------------------------ artifacts

struct RunArtifacts {
  std::vector<std::string> files;  // paths written, relative to out_dir
  std::string summary;             // also written as summary.txt
};

void write_trajectory_csv(const std::string& path, const HerglotzProblem& problem,
                          const Grid& grid, const TrajectoryJets& jets,
                          std::span<const double> z);
void write_multipliers_csv(const std::string& path, const HerglotzProblem& problem,
                           const Grid& grid, const Multipliers& multipliers);
void write_residuals_csv(const std::string& path, const Grid& grid, const ELReport& el);
void write_currents_csv(const std::string& path, const Grid& grid, const NoetherReport& report);
void write_gnuplot_script(const std::string& path, const std::vector<std::string>& csv_files,
                          int m);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace herglotz
