#include "assembly.hpp"

#include <vector>

namespace sandpile::assembly {

namespace {

using Triplet = Eigen::Triplet<double>;

// Interior index of full node (I, J), or -1 on the boundary ring.
int node_index(const Grid& g, int I, int J) {
  const int n = g.n();
  if (I < 1 || I > n) return -1;
  if (g.dim() == 1) return I - 1;
  if (J < 1 || J > n) return -1;
  return (J - 1) * n + (I - 1);
}

void push(std::vector<Triplet>& t, int row, int col, double v) {
  if (col >= 0) t.emplace_back(row, col, v);
}

// Row `row` += w * (interpolant value at the center of cell (k, l)).
void push_average(const Grid& g, std::vector<Triplet>& t, int row, int k, int l, double w) {
  const int m = g.n() + 1;
  if (k >= m || l >= m) return;
  if (g.dim() == 1) {
    push(t, row, node_index(g, k, 0), 0.5 * w);
    push(t, row, node_index(g, k + 1, 0), 0.5 * w);
    return;
  }
  push(t, row, node_index(g, k, l), 0.25 * w);
  push(t, row, node_index(g, k + 1, l), 0.25 * w);
  push(t, row, node_index(g, k, l + 1), 0.25 * w);
  push(t, row, node_index(g, k + 1, l + 1), 0.25 * w);
}

}  // namespace

SparseMatrix gradient_matrix(const Grid& g, GradientMode mode) {
  const int m = g.n() + 1;
  const int d = g.dim();
  const double h = g.h();
  std::vector<Triplet> t;
  if (mode.kind == GradientMode::Kind::weak) {
    if (d == 1) {
      for (int k = 0; k < m; ++k) {
        push(t, k, node_index(g, k + 1, 0), 1.0 / h);
        push(t, k, node_index(g, k, 0), -1.0 / h);
      }
    } else {
      const double w = 0.5 / h;
      for (int l = 0; l < m; ++l) {
        for (int k = 0; k < m; ++k) {
          const int rx = 2 * (l * m + k);
          const int ry = rx + 1;
          push(t, rx, node_index(g, k, l), -w);
          push(t, rx, node_index(g, k + 1, l), w);
          push(t, rx, node_index(g, k, l + 1), -w);
          push(t, rx, node_index(g, k + 1, l + 1), w);
          push(t, ry, node_index(g, k, l), -w);
          push(t, ry, node_index(g, k + 1, l), -w);
          push(t, ry, node_index(g, k, l + 1), w);
          push(t, ry, node_index(g, k + 1, l + 1), w);
        }
      }
    }
  } else {
    const int s = mode.mu_cells;
    const double w = 1.0 / (s * h);
    if (d == 1) {
      for (int k = 0; k < m; ++k) {
        push_average(g, t, k, k + s, 0, w);
        push_average(g, t, k, k, 0, -w);
      }
    } else {
      for (int l = 0; l < m; ++l) {
        for (int k = 0; k < m; ++k) {
          const int rx = 2 * (l * m + k);
          push_average(g, t, rx, k + s, l, w);
          push_average(g, t, rx, k, l, -w);
          push_average(g, t, rx + 1, k, l + s, w);
          push_average(g, t, rx + 1, k, l, -w);
        }
      }
    }
  }
  SparseMatrix D(static_cast<Eigen::Index>(g.cell_count()) * d,
                 static_cast<Eigen::Index>(g.node_count()));
  D.setFromTriplets(t.begin(), t.end());
  return D;
}

SparseMatrix cell_tensor_matrix(const Grid& g, std::span<const double> tensors) {
  const auto d = static_cast<std::size_t>(g.dim());
  std::vector<Triplet> t;
  for (std::size_t c = 0; c < g.cell_count(); ++c) {
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        const double v = tensors[c * d * d + i * d + j];
        if (v != 0.0) t.emplace_back(static_cast<int>(c * d + i), static_cast<int>(c * d + j), v);
      }
    }
  }
  const auto rows = static_cast<Eigen::Index>(g.cell_count() * d);
  SparseMatrix G(rows, rows);
  G.setFromTriplets(t.begin(), t.end());
  return G;
}

SparseMatrix stiffness_matrix(const Grid& g) {
  const SparseMatrix D = gradient_matrix(g, GradientMode::weak());
  SparseMatrix L = g.cell_volume() * SparseMatrix(D.transpose() * D);
  L.makeCompressed();
  return L;
}

SparseMatrix newton_matrix(const Grid& g, double eps, double gamma, const PenaltyLinearization* lin) {
  SparseMatrix K = eps * stiffness_matrix(g);
  if (lin != nullptr && gamma != 0.0 && lin->active_cells() > 0) {
    const SparseMatrix D = gradient_matrix(g, lin->mode());
    const SparseMatrix G = cell_tensor_matrix(g, lin->tensors());
    const SparseMatrix DtGD = SparseMatrix(D.transpose()) * G * D;
    K += (gamma * g.cell_volume()) * DtGD;
  }
  K.makeCompressed();
  return K;
}

SparseMatrix admm_matrix(const Grid& g, double eps, double rho, GradientMode mode) {
  const SparseMatrix D = gradient_matrix(g, mode);
  SparseMatrix K = eps * stiffness_matrix(g);
  K += (rho * g.cell_volume()) * SparseMatrix(SparseMatrix(D.transpose()) * D);
  K.makeCompressed();
  return K;
}

}  // namespace sandpile::assembly
