#pragma once

#include <span>

#include "sandpile/grid.hpp"

// Raw-span kernels behind the grid and penalty operators. `kernels` holds the
// OpenMP versions used by the library; `reference` holds plain serial loops
// written from the pointwise definitions (interpolant evaluation and cell
// scatter) and is kept for testing and benchmarking only.

namespace sandpile::kernels {

void gradient(const Grid& g, std::span<const double> u, std::span<double> out);
void gradient_adjoint(const Grid& g, std::span<const double> z, std::span<double> out);
void incremental_gradient(const Grid& g, int mu_cells, std::span<const double> u,
                          std::span<double> out);
void incremental_gradient_adjoint(const Grid& g, int mu_cells, std::span<const double> z,
                                  std::span<double> out);

/// out_c = T_c * z_c for per-cell d x d tensors (row-major).
void cell_tensor_apply(const Grid& g, std::span<const double> tensors,
                       std::span<const double> z, std::span<double> out);

/// Penalty flux P(v_c) per cell.
void penalty_flux(const Grid& g, std::span<const double> v, std::span<const double> phi,
                  std::span<double> out);

/// Newton derivative G_P(v_c) per cell, d*d entries each.
void penalty_tensors(const Grid& g, std::span<const double> v, std::span<const double> phi,
                     std::span<double> out);

}  // namespace sandpile::kernels

namespace sandpile::reference {

void gradient(const Grid& g, std::span<const double> u, std::span<double> out);
void gradient_adjoint(const Grid& g, std::span<const double> z, std::span<double> out);
void incremental_gradient(const Grid& g, int mu_cells, std::span<const double> u,
                          std::span<double> out);
void incremental_gradient_adjoint(const Grid& g, int mu_cells, std::span<const double> z,
                                  std::span<double> out);
void penalty_flux(const Grid& g, std::span<const double> v, std::span<const double> phi,
                  std::span<double> out);
void penalty_tensors(const Grid& g, std::span<const double> v, std::span<const double> phi,
                     std::span<double> out);

/// Piecewise (bi)linear interpolant of the interior values at an arbitrary
/// point, zero outside the closed unit domain.
double interpolant(const Grid& g, std::span<const double> u, double x, double y);

}  // namespace sandpile::reference
