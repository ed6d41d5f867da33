#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sandpile/grid.hpp"
#include "sandpile/state_solver.hpp"

namespace sandpile {

enum class DescentRule { fixed, armijo };

/// Tracking objective j(f) = 1/2 ||u(f) - target||^2 + lambda ||f||^2, both
/// norms in L2, and the descent settings for minimizing it.
struct ControlParams {
  explicit ControlParams(NodalField target_field) : target(std::move(target_field)) {}

  double lambda = 0.0;
  NodalField target;
  DescentRule descent = DescentRule::armijo;
  double step_init = 1.0;
  double armijo_c1 = 1e-4;
  double armijo_backtrack = 0.5;
  int max_backtracks = 30;
  /// Barzilai-Borwein trial length for the next Armijo search.
  bool bb_step = true;
  int max_outer = 100;
  double tol_grad = 1e-8;

  void validate() const;
};

/// Evaluates j and its gradient, warm-starting state solves from the last
/// accepted state. Falls back to path-following from zero when a warm-started
/// Newton solve fails.
class ReducedObjective {
public:
  ReducedObjective(ObstacleField phi, ControlParams cparams, SolverParams sparams);

  struct Evaluation {
    double j = 0.0;
    NodalField u;
  };

  Evaluation evaluate(const NodalField& f, const NodalField* warm_start = nullptr);
  /// p + 2 lambda f with p the adjoint state for u = u(f).
  NodalField gradient(const NodalField& f, const NodalField& u) const;

  const ControlParams& control() const { return cparams_; }
  const SolverParams& solver() const { return sparams_; }
  const ObstacleField& obstacle() const { return phi_; }
  int state_solves() const { return state_solves_; }
  int fallbacks() const { return fallbacks_; }

private:
  ObstacleField phi_;
  ControlParams cparams_;
  SolverParams sparams_;
  int state_solves_ = 0;
  int fallbacks_ = 0;
};

double objective(const NodalField& f, const ObstacleField& phi, const ControlParams& cparams,
                 const SolverParams& sparams);

NodalField reduced_gradient(const NodalField& f, const ObstacleField& phi, const ControlParams& cparams,
                            const SolverParams& sparams);

enum class OptimizeStatus { converged, max_outer, line_search_failed };

std::string to_string(OptimizeStatus s);

struct OuterRecord {
  double j = 0.0;
  double grad_norm = 0.0;
  double step = 0.0;  ///< accepted step length leading to this iterate (0 for the start)
  int backtracks = 0;
};

struct OptimizeResult {
  NodalField f;
  NodalField u;
  std::vector<OuterRecord> trace;
  OptimizeStatus status = OptimizeStatus::max_outer;
  int state_solves = 0;
};

/// Armijo-damped steepest descent on j in the L2 geometry.
OptimizeResult optimize(const NodalField& f_init, const ObstacleField& phi, const ControlParams& cparams,
                        const SolverParams& sparams);

}  // namespace sandpile
