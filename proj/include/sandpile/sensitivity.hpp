#pragma once

#include "sandpile/grid.hpp"
#include "sandpile/state_solver.hpp"

namespace sandpile {

/// Derivative of the control-to-state map at state u in direction h_dir:
/// solves (eps D_h^T W D_h + gamma G_P(u)) w = h^d h_dir.
/// Throws LinearSolveError if the inner solve stalls.
NodalField solve_sensitivity(const NodalField& u, const NodalField& h_dir, const ObstacleField& phi,
                             const SolverParams& params);

/// Adjoint solve. The operator is self-adjoint (both parts of G_P are
/// symmetric per cell), so this is the sensitivity operator applied to rhs.
NodalField solve_adjoint(const NodalField& u, const NodalField& rhs, const ObstacleField& phi,
                         const SolverParams& params);

}  // namespace sandpile
