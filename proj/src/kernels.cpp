#include "sandpile/kernels.hpp"

#include <cstddef>
#include <vector>

#include "sandpile/penalty.hpp"

namespace sandpile::kernels {

namespace {

using Index = std::ptrdiff_t;

// Full node index I, J in [0, n+1]; the boundary ring is identically zero.
inline double nodal(std::span<const double> u, Index n, Index I, Index J) {
  if (I < 1 || I > n || J < 1 || J > n) return 0.0;
  return u[static_cast<std::size_t>((J - 1) * n + (I - 1))];
}

inline double nodal(std::span<const double> u, Index n, Index I) {
  if (I < 1 || I > n) return 0.0;
  return u[static_cast<std::size_t>(I - 1)];
}

// Interpolant value at each cell center.
std::vector<double> cell_averages(const Grid& g, std::span<const double> u) {
  const Index n = g.n();
  const Index m = n + 1;
  std::vector<double> a(g.cell_count());
  if (g.dim() == 1) {
#pragma omp parallel for schedule(static)
    for (Index k = 0; k < m; ++k) a[static_cast<std::size_t>(k)] = 0.5 * (nodal(u, n, k) + nodal(u, n, k + 1));
  } else {
#pragma omp parallel for schedule(static)
    for (Index l = 0; l < m; ++l) {
      for (Index k = 0; k < m; ++k) {
        a[static_cast<std::size_t>(l * m + k)] =
            0.25 * (nodal(u, n, k, l) + nodal(u, n, k + 1, l) + nodal(u, n, k, l + 1) +
                    nodal(u, n, k + 1, l + 1));
      }
    }
  }
  return a;
}

}  // namespace

void gradient(const Grid& g, std::span<const double> u, std::span<double> out) {
  const Index n = g.n();
  const Index m = n + 1;
  const double inv_h = 1.0 / g.h();
  if (g.dim() == 1) {
#pragma omp parallel for schedule(static)
    for (Index k = 0; k < m; ++k) {
      out[static_cast<std::size_t>(k)] = (nodal(u, n, k + 1) - nodal(u, n, k)) * inv_h;
    }
    return;
  }
  const double half_inv_h = 0.5 * inv_h;
#pragma omp parallel for schedule(static)
  for (Index l = 0; l < m; ++l) {
    for (Index k = 0; k < m; ++k) {
      const double u00 = nodal(u, n, k, l);
      const double u10 = nodal(u, n, k + 1, l);
      const double u01 = nodal(u, n, k, l + 1);
      const double u11 = nodal(u, n, k + 1, l + 1);
      const auto c = static_cast<std::size_t>(2 * (l * m + k));
      out[c] = ((u10 - u00) + (u11 - u01)) * half_inv_h;
      out[c + 1] = ((u01 - u00) + (u11 - u10)) * half_inv_h;
    }
  }
}

void gradient_adjoint(const Grid& g, std::span<const double> z, std::span<double> out) {
  const Index n = g.n();
  const Index m = n + 1;
  if (g.dim() == 1) {
    // h * (z_{I-1}/h - z_I/h)
#pragma omp parallel for schedule(static)
    for (Index I = 1; I <= n; ++I) {
      out[static_cast<std::size_t>(I - 1)] =
          z[static_cast<std::size_t>(I - 1)] - z[static_cast<std::size_t>(I)];
    }
    return;
  }
  const double w = 0.5 * g.h();  // h^2 / (2h)
#pragma omp parallel for schedule(static)
  for (Index J = 1; J <= n; ++J) {
    for (Index I = 1; I <= n; ++I) {
      // Node is corner 11 of cell (I-1,J-1), 01 of (I,J-1), 10 of (I-1,J), 00 of (I,J).
      const auto c11 = static_cast<std::size_t>(2 * ((J - 1) * m + (I - 1)));
      const auto c01 = static_cast<std::size_t>(2 * ((J - 1) * m + I));
      const auto c10 = static_cast<std::size_t>(2 * (J * m + (I - 1)));
      const auto c00 = static_cast<std::size_t>(2 * (J * m + I));
      const double sx = z[c11] - z[c01] + z[c10] - z[c00];
      const double sy = z[c11 + 1] + z[c01 + 1] - z[c10 + 1] - z[c00 + 1];
      out[static_cast<std::size_t>((J - 1) * n + (I - 1))] = w * (sx + sy);
    }
  }
}

void incremental_gradient(const Grid& g, int mu_cells, std::span<const double> u,
                          std::span<double> out) {
  const Index m = g.n() + 1;
  const Index s = mu_cells;
  const double inv_mu = 1.0 / (mu_cells * g.h());
  const std::vector<double> a = cell_averages(g, u);
  if (g.dim() == 1) {
#pragma omp parallel for schedule(static)
    for (Index k = 0; k < m; ++k) {
      const double ahead = k + s < m ? a[static_cast<std::size_t>(k + s)] : 0.0;
      out[static_cast<std::size_t>(k)] = (ahead - a[static_cast<std::size_t>(k)]) * inv_mu;
    }
    return;
  }
#pragma omp parallel for schedule(static)
  for (Index l = 0; l < m; ++l) {
    for (Index k = 0; k < m; ++k) {
      const double here = a[static_cast<std::size_t>(l * m + k)];
      const double ax = k + s < m ? a[static_cast<std::size_t>(l * m + k + s)] : 0.0;
      const double ay = l + s < m ? a[static_cast<std::size_t>((l + s) * m + k)] : 0.0;
      const auto c = static_cast<std::size_t>(2 * (l * m + k));
      out[c] = (ax - here) * inv_mu;
      out[c + 1] = (ay - here) * inv_mu;
    }
  }
}

void incremental_gradient_adjoint(const Grid& g, int mu_cells, std::span<const double> z,
                                  std::span<double> out) {
  const Index n = g.n();
  const Index m = n + 1;
  const Index s = mu_cells;
  const double w = g.cell_volume() / (mu_cells * g.h());
  // t = shift^T z - z in cell space, then the transpose of the averaging.
  std::vector<double> t(g.cell_count());
  if (g.dim() == 1) {
#pragma omp parallel for schedule(static)
    for (Index k = 0; k < m; ++k) {
      const double behind = k - s >= 0 ? z[static_cast<std::size_t>(k - s)] : 0.0;
      t[static_cast<std::size_t>(k)] = w * (behind - z[static_cast<std::size_t>(k)]);
    }
#pragma omp parallel for schedule(static)
    for (Index I = 1; I <= n; ++I) {
      out[static_cast<std::size_t>(I - 1)] =
          0.5 * (t[static_cast<std::size_t>(I - 1)] + t[static_cast<std::size_t>(I)]);
    }
    return;
  }
#pragma omp parallel for schedule(static)
  for (Index l = 0; l < m; ++l) {
    for (Index k = 0; k < m; ++k) {
      const auto c = static_cast<std::size_t>(2 * (l * m + k));
      const double bx = k - s >= 0 ? z[static_cast<std::size_t>(2 * (l * m + k - s))] : 0.0;
      const double by = l - s >= 0 ? z[static_cast<std::size_t>(2 * ((l - s) * m + k)) + 1] : 0.0;
      t[static_cast<std::size_t>(l * m + k)] = w * ((bx - z[c]) + (by - z[c + 1]));
    }
  }
#pragma omp parallel for schedule(static)
  for (Index J = 1; J <= n; ++J) {
    for (Index I = 1; I <= n; ++I) {
      const double acc = t[static_cast<std::size_t>((J - 1) * m + (I - 1))] +
                         t[static_cast<std::size_t>((J - 1) * m + I)] +
                         t[static_cast<std::size_t>(J * m + (I - 1))] +
                         t[static_cast<std::size_t>(J * m + I)];
      out[static_cast<std::size_t>((J - 1) * n + (I - 1))] = 0.25 * acc;
    }
  }
}

void cell_tensor_apply(const Grid& g, std::span<const double> tensors, std::span<const double> z,
                       std::span<double> out) {
  const auto cells = static_cast<Index>(g.cell_count());
  if (g.dim() == 1) {
#pragma omp parallel for schedule(static)
    for (Index c = 0; c < cells; ++c) out[static_cast<std::size_t>(c)] = tensors[static_cast<std::size_t>(c)] * z[static_cast<std::size_t>(c)];
    return;
  }
#pragma omp parallel for schedule(static)
  for (Index c = 0; c < cells; ++c) {
    const auto t = static_cast<std::size_t>(4 * c);
    const auto v = static_cast<std::size_t>(2 * c);
    out[v] = tensors[t] * z[v] + tensors[t + 1] * z[v + 1];
    out[v + 1] = tensors[t + 2] * z[v] + tensors[t + 3] * z[v + 1];
  }
}

void penalty_flux(const Grid& g, std::span<const double> v, std::span<const double> phi,
                  std::span<double> out) {
  const auto d = static_cast<std::size_t>(g.dim());
  const auto cells = static_cast<Index>(g.cell_count());
#pragma omp parallel for schedule(static)
  for (Index c = 0; c < cells; ++c) {
    const auto cc = static_cast<std::size_t>(c);
    const PenaltyPointJet jet = point_jet(v.subspan(cc * d, d), phi[cc]);
    for (std::size_t i = 0; i < d; ++i) out[cc * d + i] = jet.value[i];
  }
}

void penalty_tensors(const Grid& g, std::span<const double> v, std::span<const double> phi,
                     std::span<double> out) {
  const auto d = static_cast<std::size_t>(g.dim());
  const auto cells = static_cast<Index>(g.cell_count());
#pragma omp parallel for schedule(static)
  for (Index c = 0; c < cells; ++c) {
    const auto cc = static_cast<std::size_t>(c);
    const PenaltyPointJet jet = point_jet(v.subspan(cc * d, d), phi[cc]);
    for (std::size_t i = 0; i < d * d; ++i) out[cc * d * d + i] = jet.deriv[i];
  }
}

}  // namespace sandpile::kernels
