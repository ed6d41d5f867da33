#pragma once

#include "sandpile/grid.hpp"

namespace sandpile {

struct Norms {
  double l2 = 0.0;      ///< (h^d sum u_i^2)^(1/2)
  double h1 = 0.0;      ///< (sum_c h^d |D_h u|_c^2)^(1/2)
  double dualH1 = 0.0;  ///< <u, (D_h^T W D_h)^{-1} u>^(1/2), u read as a load vector
};

Norms norms(const NodalField& u);

double l2_norm(const NodalField& u);
double h1_seminorm(const NodalField& u);
/// Treats u as a load vector (already mass-weighted), one stiffness solve.
double dual_norm(const NodalField& u);
/// L2 inner product h^d <a, b>.
double l2_inner(const NodalField& a, const NodalField& b);

}  // namespace sandpile
