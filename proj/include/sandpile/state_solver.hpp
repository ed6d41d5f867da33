#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sandpile/grid.hpp"
#include "sandpile/linear_solver.hpp"

namespace sandpile {

enum class Damping { off, armijo };

struct SolverParams {
  double eps = 0.05;
  double gamma = 1.0;
  GradientMode mode = GradientMode::weak();
  double tol_res = 1e-10;  ///< on the dual (H^-1) norm of the residual
  int max_iter = 25;
  double tol_lin = 1e-12;  ///< relative, inner linear solves
  int max_lin_iter = 200;
  Damping damping = Damping::armijo;
  double armijo_c1 = 1e-4;
  double armijo_backtrack = 0.5;
  int max_backtracks = 30;
  Preconditioner preconditioner = Preconditioner::cholesky;

  /// Throws std::invalid_argument on out-of-range values.
  void validate() const;
};

/// Iteration history of one state solve. Per-iterate arrays have one entry per
/// iterate u^0..u^N; per-step arrays have one entry per Newton step (N).
struct RunReport {
  Grid grid{1, 1};
  SolverParams params;

  std::vector<double> residual_l2;
  std::vector<double> residual_dual;
  std::vector<double> feasibility;  ///< max (|D u| - phi)^+ with the mode's D
  std::vector<double> merit;

  std::vector<double> step_h1;
  /// eps * ||v||_h1 / ||E(u)||_dual for the full Newton step; <= 1 in exact arithmetic.
  std::vector<double> step_bound_ratio;
  std::vector<double> step_length;
  std::vector<int> backtracks;
  std::vector<int> linear_iterations;
  std::vector<std::size_t> active_cells;

  /// ||u^{k+1} - u*||_h1 / ||u^k - u*||_h1 with u* the final iterate.
  std::vector<double> contraction_ratios;

  bool converged = false;
  int iterations = 0;
  double final_residual_dual = 0.0;
  double final_feasibility = 0.0;
  double final_feasibility_weak = 0.0;  ///< with D_h regardless of mode
  double wall_time_s = 0.0;
  std::string failure;
};

class SolverError : public std::runtime_error {
public:
  SolverError(const std::string& what, RunReport report)
      : std::runtime_error(what), report_(std::move(report)) {}
  const RunReport& report() const { return report_; }

private:
  RunReport report_;
};

class StageError : public SolverError {
public:
  StageError(const std::string& what, int stage, RunReport report, std::vector<RunReport> completed)
      : SolverError(what, std::move(report)), stage_(stage), completed_(std::move(completed)) {}
  int stage() const { return stage_; }
  const std::vector<RunReport>& completed() const { return completed_; }

private:
  int stage_;
  std::vector<RunReport> completed_;
};

/// E(u) = eps D_h^T W D_h u + gamma P(u) - h^d f, a load vector.
NodalField residual(const NodalField& u, const NodalField& f, const ObstacleField& phi,
                    const SolverParams& params);

/// Convex energy whose gradient is the residual:
/// eps/2 ||D_h u||^2_W + gamma J_P(u) - h^d <f, u>.
double merit(const NodalField& u, const NodalField& f, const ObstacleField& phi,
             const SolverParams& params);

struct NewtonStepInfo {
  NodalField step;
  CgReport linear;
  std::size_t active_cells = 0;
};

/// Solves (eps D_h^T W D_h + gamma G_P(u)) v = -E(u). Throws LinearSolveError.
NodalField newton_step(const NodalField& u, const NodalField& f, const ObstacleField& phi,
                       const SolverParams& params);
NewtonStepInfo newton_step_detailed(const NodalField& u, const NodalField& residual_u,
                                    const ObstacleField& phi, const SolverParams& params);

struct StateSolution {
  NodalField u;
  RunReport report;
};

/// Semismooth Newton with optional Armijo damping on the merit. Throws
/// SolverError (carrying the report) when max_iter is exhausted.
StateSolution solve_state(const NodalField& f, const ObstacleField& phi, const SolverParams& params,
                          const std::optional<NodalField>& u_init = std::nullopt);

struct Schedule {
  std::vector<double> gamma;     ///< ascending
  std::vector<int> mu_cells;     ///< empty, or one per stage, non-increasing

  static Schedule standard();    ///< gamma = 1, 10, 100, 1e3, 1e4
  void validate() const;
};

struct PathSolution {
  NodalField u;
  std::vector<RunReport> stages;
  std::vector<NodalField> stage_u;  ///< solution at the end of each stage
};

/// Runs solve_state along the schedule, warm-starting each stage from the last.
/// Throws StageError naming the failed stage.
PathSolution path_follow(const NodalField& f, const ObstacleField& phi, const SolverParams& base,
                         const Schedule& schedule, const std::optional<NodalField>& u_init = std::nullopt);

}  // namespace sandpile
