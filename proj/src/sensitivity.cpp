#include "sandpile/sensitivity.hpp"

#include "sandpile/linear_solver.hpp"

namespace sandpile {

NodalField solve_sensitivity(const NodalField& u, const NodalField& h_dir, const ObstacleField& phi,
                             const SolverParams& params) {
  params.validate();
  require_same_grid(u.grid(), h_dir.grid(), "solve_sensitivity");
  const NewtonSystem system(u, phi, params.eps, params.gamma, params.mode, params.preconditioner);
  return system.solve(mass_weighted(h_dir), params.tol_lin, params.max_lin_iter);
}

NodalField solve_adjoint(const NodalField& u, const NodalField& rhs, const ObstacleField& phi,
                         const SolverParams& params) {
  return solve_sensitivity(u, rhs, phi, params);
}

}  // namespace sandpile
