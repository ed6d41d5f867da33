#pragma once

// Explicit sparse matrices for the discrete operators. Built from the cell
// stencils independently of the matrix-free kernels; used for factorizations
// and for cross-checking the kernels.

#include <Eigen/SparseCore>

#include "sandpile/grid.hpp"
#include "sandpile/penalty.hpp"

namespace sandpile::assembly {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// (d * cells) x nodes matrix of D in the given mode.
SparseMatrix gradient_matrix(const Grid& g, GradientMode mode);

/// Block-diagonal per-cell tensor matrix, (d * cells) square.
SparseMatrix cell_tensor_matrix(const Grid& g, std::span<const double> tensors);

/// D_h^T W D_h
SparseMatrix stiffness_matrix(const Grid& g);

/// eps D_h^T W D_h + gamma D^T W G D; lin may be null (gamma term dropped).
SparseMatrix newton_matrix(const Grid& g, double eps, double gamma, const PenaltyLinearization* lin);

/// eps D_h^T W D_h + rho D^T W D for the ADMM primal update.
SparseMatrix admm_matrix(const Grid& g, double eps, double rho, GradientMode mode);

}  // namespace sandpile::assembly
