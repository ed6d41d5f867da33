#include "sandpile/norms.hpp"

#include <algorithm>
#include <cmath>

#include "sandpile/linalg.hpp"
#include "sandpile/linear_solver.hpp"

namespace sandpile {

double l2_norm(const NodalField& u) {
  return std::sqrt(u.grid().cell_volume() * sum_squares(u.values()));
}

double h1_seminorm(const NodalField& u) {
  const CellVectorField du = gradient(u);
  return std::sqrt(u.grid().cell_volume() * sum_squares(du.values()));
}

double dual_norm(const NodalField& u) {
  const auto factor = stiffness_factor(u.grid());
  const std::vector<double> y = factor->solve(u.values());
  return std::sqrt(std::max(0.0, dot(u.values(), y)));
}

double l2_inner(const NodalField& a, const NodalField& b) {
  require_same_grid(a.grid(), b.grid(), "l2_inner");
  return a.grid().cell_volume() * dot(a.values(), b.values());
}

Norms norms(const NodalField& u) { return {l2_norm(u), h1_seminorm(u), dual_norm(u)}; }

}  // namespace sandpile
