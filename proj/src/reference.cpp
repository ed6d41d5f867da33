#include <algorithm>
#include <cmath>

#include "sandpile/kernels.hpp"
#include "sandpile/penalty.hpp"

namespace sandpile::reference {

namespace {

double node_value(const Grid& g, std::span<const double> u, int I, int J) {
  const int n = g.n();
  if (I < 1 || I > n) return 0.0;
  if (g.dim() == 1) return u[static_cast<std::size_t>(I - 1)];
  if (J < 1 || J > n) return 0.0;
  return u[static_cast<std::size_t>((J - 1) * n + (I - 1))];
}

void scatter(const Grid& g, std::span<double> out, int I, int J, double w) {
  const int n = g.n();
  if (I < 1 || I > n) return;
  if (g.dim() == 1) {
    out[static_cast<std::size_t>(I - 1)] += w;
    return;
  }
  if (J < 1 || J > n) return;
  out[static_cast<std::size_t>((J - 1) * n + (I - 1))] += w;
}

}  // namespace

double interpolant(const Grid& g, std::span<const double> u, double x, double y) {
  const double h = g.h();
  const int n = g.n();
  if (x < 0.0 || x > 1.0) return 0.0;
  const int k = std::clamp(static_cast<int>(std::floor(x / h)), 0, n);
  const double s = x / h - k;
  if (g.dim() == 1) return (1.0 - s) * node_value(g, u, k, 0) + s * node_value(g, u, k + 1, 0);
  if (y < 0.0 || y > 1.0) return 0.0;
  const int l = std::clamp(static_cast<int>(std::floor(y / h)), 0, n);
  const double t = y / h - l;
  return (1.0 - s) * (1.0 - t) * node_value(g, u, k, l) + s * (1.0 - t) * node_value(g, u, k + 1, l) +
         (1.0 - s) * t * node_value(g, u, k, l + 1) + s * t * node_value(g, u, k + 1, l + 1);
}

void gradient(const Grid& g, std::span<const double> u, std::span<double> out) {
  // The interpolant is affine along each axis through the cell center, so the
  // centered difference across the cell is its exact partial derivative there.
  const double h = g.h();
  const auto d = static_cast<std::size_t>(g.dim());
  for (std::size_t c = 0; c < g.cell_count(); ++c) {
    const auto x = cell_center(g, c);
    out[c * d] = (interpolant(g, u, x[0] + 0.5 * h, x[1]) - interpolant(g, u, x[0] - 0.5 * h, x[1])) / h;
    if (d == 2) {
      out[c * d + 1] =
          (interpolant(g, u, x[0], x[1] + 0.5 * h) - interpolant(g, u, x[0], x[1] - 0.5 * h)) / h;
    }
  }
}

void gradient_adjoint(const Grid& g, std::span<const double> z, std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  const int m = g.n() + 1;
  const double h = g.h();
  if (g.dim() == 1) {
    for (int k = 0; k < m; ++k) {
      const double w = h * z[static_cast<std::size_t>(k)] / h;
      scatter(g, out, k + 1, 0, w);
      scatter(g, out, k, 0, -w);
    }
    return;
  }
  for (int l = 0; l < m; ++l) {
    for (int k = 0; k < m; ++k) {
      const auto c = static_cast<std::size_t>(l * m + k);
      const double wx = h * h * z[2 * c] / (2.0 * h);
      const double wy = h * h * z[2 * c + 1] / (2.0 * h);
      scatter(g, out, k, l, -wx - wy);
      scatter(g, out, k + 1, l, wx - wy);
      scatter(g, out, k, l + 1, -wx + wy);
      scatter(g, out, k + 1, l + 1, wx + wy);
    }
  }
}

void incremental_gradient(const Grid& g, int mu_cells, std::span<const double> u,
                          std::span<double> out) {
  const double mu = mu_cells * g.h();
  const auto d = static_cast<std::size_t>(g.dim());
  for (std::size_t c = 0; c < g.cell_count(); ++c) {
    const auto x = cell_center(g, c);
    const double here = interpolant(g, u, x[0], x[1]);
    out[c * d] = (interpolant(g, u, x[0] + mu, x[1]) - here) / mu;
    if (d == 2) out[c * d + 1] = (interpolant(g, u, x[0], x[1] + mu) - here) / mu;
  }
}

void incremental_gradient_adjoint(const Grid& g, int mu_cells, std::span<const double> z,
                                  std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  const int m = g.n() + 1;
  const double mu = mu_cells * g.h();
  const double vol = g.cell_volume();
  // Each quotient is (average over cell c+mu*e_i - average over cell c)/mu.
  auto scatter_average = [&](int k, int l, double w) {
    if (k >= m || l >= m) return;
    if (g.dim() == 1) {
      scatter(g, out, k, 0, 0.5 * w);
      scatter(g, out, k + 1, 0, 0.5 * w);
      return;
    }
    scatter(g, out, k, l, 0.25 * w);
    scatter(g, out, k + 1, l, 0.25 * w);
    scatter(g, out, k, l + 1, 0.25 * w);
    scatter(g, out, k + 1, l + 1, 0.25 * w);
  };
  if (g.dim() == 1) {
    for (int k = 0; k < m; ++k) {
      const double w = vol * z[static_cast<std::size_t>(k)] / mu;
      scatter_average(k + mu_cells, 0, w);
      scatter_average(k, 0, -w);
    }
    return;
  }
  for (int l = 0; l < m; ++l) {
    for (int k = 0; k < m; ++k) {
      const auto c = static_cast<std::size_t>(l * m + k);
      const double wx = vol * z[2 * c] / mu;
      const double wy = vol * z[2 * c + 1] / mu;
      scatter_average(k + mu_cells, l, wx);
      scatter_average(k, l, -wx);
      scatter_average(k, l + mu_cells, wy);
      scatter_average(k, l, -wy);
    }
  }
}

void penalty_flux(const Grid& g, std::span<const double> v, std::span<const double> phi,
                  std::span<double> out) {
  const auto d = static_cast<std::size_t>(g.dim());
  for (std::size_t c = 0; c < g.cell_count(); ++c) {
    const auto cell = v.subspan(c * d, d);
    const double norm = d == 1 ? std::abs(cell[0]) : std::sqrt(cell[0] * cell[0] + cell[1] * cell[1]);
    const double b = std::min(1.0, std::max(0.0, norm - phi[c]));
    for (std::size_t i = 0; i < d; ++i) out[c * d + i] = b > 0.0 ? b * cell[i] / norm : 0.0;
  }
}

void penalty_tensors(const Grid& g, std::span<const double> v, std::span<const double> phi,
                     std::span<double> out) {
  const auto d = static_cast<std::size_t>(g.dim());
  for (std::size_t c = 0; c < g.cell_count(); ++c) {
    const auto cell = v.subspan(c * d, d);
    double sq = 0.0;
    for (double x : cell) sq += x * x;
    const double norm = std::sqrt(sq);
    const double t = norm - phi[c];
    const double b = std::min(1.0, std::max(0.0, t));
    const double chi = (t > 0.0 && t < 1.0) ? 1.0 : 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        double entry = 0.0;
        if (b > 0.0) {
          const double outer = cell[i] * cell[j] / sq;
          entry = chi * outer + (b / norm) * ((i == j ? 1.0 : 0.0) - outer);
        }
        out[c * d * d + i * d + j] = entry;
      }
    }
  }
}

}  // namespace sandpile::reference
