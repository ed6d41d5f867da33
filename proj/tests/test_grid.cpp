#include <gtest/gtest.h>

#include <cmath>

#include "assembly.hpp"
#include "sandpile/kernels.hpp"
#include "sandpile/linalg.hpp"
#include "sandpile/norms.hpp"
#include "test_util.hpp"

using namespace sandpile;
using sandpile::test::max_abs_diff;
using sandpile::test::random_cells;
using sandpile::test::random_field;

TEST(Grid, Counts) {
  const Grid g1(1, 7);
  EXPECT_EQ(g1.node_count(), 7u);
  EXPECT_EQ(g1.cell_count(), 8u);
  EXPECT_DOUBLE_EQ(g1.h(), 0.125);
  const Grid g2(2, 3);
  EXPECT_EQ(g2.node_count(), 9u);
  EXPECT_EQ(g2.cell_count(), 16u);
  EXPECT_DOUBLE_EQ(g2.cell_volume(), 1.0 / 16.0);
}

TEST(Grid, RejectsBadInput) {
  EXPECT_THROW(Grid(3, 4), std::invalid_argument);
  EXPECT_THROW(Grid(1, 0), std::invalid_argument);
  EXPECT_THROW(Grid(1, 48), std::invalid_argument);  // h*(n+1) rounds away from 1
  EXPECT_NO_THROW(Grid(2, 31));
}

TEST(Grid, ObstacleNeedsPositiveLowerBound) {
  const Grid g(1, 3);
  EXPECT_THROW(ObstacleField(g, {1.0, 0.0, 1.0, 1.0}), std::invalid_argument);
  EXPECT_THROW(ObstacleField(g, {1.0, 1.0}), std::invalid_argument);
  EXPECT_DOUBLE_EQ(ObstacleField(g, {1.0, 0.5, 2.0, 1.0}).nu(), 0.5);
}

TEST(Grid, MuMustBeGridMultiple) {
  const Grid g(1, 3);
  EXPECT_EQ(GradientMode::incremental(g, 0.5).mu_cells, 2);
  EXPECT_THROW(GradientMode::incremental(g, 0.3), std::invalid_argument);
  EXPECT_THROW(GradientMode::incremental(g, 0.0), std::invalid_argument);
}

TEST(Gradient, OneDimensionalHandCase) {
  const Grid g(1, 3);
  const NodalField u(g, {1.0, 2.0, 3.0});
  const CellVectorField z = gradient(u);
  const std::vector<double> expect{4.0, 4.0, 4.0, -12.0};
  EXPECT_LT(max_abs_diff(z.values(), expect), 1e-14);
}

TEST(Gradient, TwoDimensionalBilinearCenter) {
  // u = x*y is bilinear, so the center gradient is exact: (y_c, x_c). The
  // boundary cells see the zero extension, so only interior cells qualify.
  const Grid g(2, 5);
  NodalField u(g);
  for (std::size_t i = 0; i < u.size(); ++i) {
    const auto x = node_coordinates(g, i);
    u[i] = x[0] * x[1];
  }
  const CellVectorField z = gradient(u);
  double err = 0.0;
  const std::size_t m = g.cells_per_axis();
  for (std::size_t l = 1; l + 1 < m; ++l) {
    for (std::size_t k = 1; k + 1 < m; ++k) {
      const std::size_t c = l * m + k;
      const auto xc = cell_center(g, c);
      err = std::max({err, std::abs(z.at(c)[0] - xc[1]), std::abs(z.at(c)[1] - xc[0])});
    }
  }
  EXPECT_LT(err, 1e-13);
}

TEST(Gradient, IncrementalHandCase) {
  const Grid g(1, 3);
  const NodalField u(g, {0.0, 1.0, 0.0});
  const CellVectorField z = incremental_gradient(u, 0.25);
  const std::vector<double> expect{2.0, 0.0, -2.0, 0.0};
  EXPECT_LT(max_abs_diff(z.values(), expect), 1e-14);
}

TEST(Gradient, IncrementalBound) {
  std::mt19937_64 rng(1);
  for (int dim : {1, 2}) {
    const Grid g(dim, 15);
    for (int mu : {1, 3}) {
      const NodalField u = random_field(g, rng);
      const CellVectorField z = incremental_gradient(u, mu * g.h());
      double zmax = 0.0;
      for (std::size_t c = 0; c < z.cell_count(); ++c) {
        for (double v : z.at(c)) zmax = std::max(zmax, std::abs(v));
      }
      EXPECT_LE(zmax, 2.0 / (mu * g.h()) * norm_inf(u.values()) * (1 + 1e-14));
    }
  }
}

TEST(Gradient, AdjointIdentity) {
  std::mt19937_64 rng(2);
  for (int dim : {1, 2}) {
    const Grid g(dim, 11);
    for (GradientMode mode : {GradientMode::weak(), GradientMode::incremental_cells(1),
                              GradientMode::incremental_cells(3)}) {
      const NodalField u = random_field(g, rng);
      const CellVectorField z = random_cells(g, rng);
      const double lhs = g.cell_volume() * dot(apply_gradient(u, mode).values(), z.values());
      const double rhs = dot(u.values(), apply_gradient_adjoint(z, mode).values());
      EXPECT_NEAR(lhs, rhs, 1e-12 * std::max(1.0, std::abs(lhs)));
    }
  }
}

TEST(Gradient, AdjointOfZeroIsZero) {
  const Grid g(2, 7);
  const NodalField a = incremental_gradient_adjoint(CellVectorField(g), 2 * g.h());
  for (double v : a.values()) EXPECT_EQ(v, 0.0);
}

TEST(Kernels, MatchSerialReference) {
  std::mt19937_64 rng(3);
  for (int dim : {1, 2}) {
    const Grid g(dim, dim == 1 ? 63 : 31);
    const NodalField u = random_field(g, rng);
    const CellVectorField z = random_cells(g, rng);
    std::vector<double> a(z.values().size()), b(a.size());
    kernels::gradient(g, u.values(), a);
    reference::gradient(g, u.values(), b);
    EXPECT_LT(max_abs_diff(a, b), 1e-12);
    for (int mu : {1, 2}) {
      kernels::incremental_gradient(g, mu, u.values(), a);
      reference::incremental_gradient(g, mu, u.values(), b);
      EXPECT_LT(max_abs_diff(a, b), 1e-12);
    }
    std::vector<double> na(u.size()), nb(u.size());
    kernels::gradient_adjoint(g, z.values(), na);
    reference::gradient_adjoint(g, z.values(), nb);
    EXPECT_LT(max_abs_diff(na, nb), 1e-12);
    kernels::incremental_gradient_adjoint(g, 2, z.values(), na);
    reference::incremental_gradient_adjoint(g, 2, z.values(), nb);
    EXPECT_LT(max_abs_diff(na, nb), 1e-12);

    std::vector<double> phi(g.cell_count(), 1.0);
    std::vector<double> v(z.values().begin(), z.values().end());
    for (double& x : v) x *= 2.0;
    kernels::penalty_flux(g, v, phi, a);
    reference::penalty_flux(g, v, phi, b);
    EXPECT_LT(max_abs_diff(a, b), 1e-14);
    std::vector<double> ta(g.cell_count() * dim * dim), tb(ta.size());
    kernels::penalty_tensors(g, v, phi, ta);
    reference::penalty_tensors(g, v, phi, tb);
    EXPECT_LT(max_abs_diff(ta, tb), 1e-14);
  }
}

TEST(Kernels, MatchAssembledMatrices) {
  std::mt19937_64 rng(4);
  for (int dim : {1, 2}) {
    const Grid g(dim, 9);
    const NodalField u = random_field(g, rng);
    const Eigen::Map<const Eigen::VectorXd> uv(u.values().data(), static_cast<Eigen::Index>(u.size()));
    for (GradientMode mode : {GradientMode::weak(), GradientMode::incremental_cells(2)}) {
      const Eigen::VectorXd zm = assembly::gradient_matrix(g, mode) * uv;
      const CellVectorField z = apply_gradient(u, mode);
      EXPECT_LT(max_abs_diff(z.values(), std::span<const double>(zm.data(), zm.size())), 1e-12);
    }
    const Eigen::VectorXd lm = assembly::stiffness_matrix(g) * uv;
    const NodalField l = stiffness_apply(1.0, u);
    EXPECT_LT(max_abs_diff(l.values(), std::span<const double>(lm.data(), lm.size())), 1e-10);
  }
}

TEST(Stiffness, OneDimensionalStencil) {
  const Grid g(1, 4);
  NodalField e(g);
  e[1] = 1.0;
  const NodalField col = stiffness_apply(0.5, e);
  const std::vector<double> expect{-0.5 / g.h(), 1.0 / g.h(), -0.5 / g.h(), 0.0};
  EXPECT_LT(max_abs_diff(col.values(), expect), 1e-12);
}

TEST(Norms, SineModeValues) {
  const Grid g(1, 63);
  const double pi = std::acos(-1.0);
  NodalField u(g);
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = std::sin(pi * node_coordinates(g, i)[0]);
  const Norms n = norms(u);
  // Discrete sine sums: h sum sin^2 = 1/2, and the discrete eigenvalue of L.
  EXPECT_NEAR(n.l2, std::sqrt(0.5), 1e-12);
  const double lam = 4.0 / (g.h() * g.h()) * std::pow(std::sin(pi * g.h() / 2.0), 2);
  EXPECT_NEAR(n.h1, std::sqrt(lam * 0.5), 1e-10);
  EXPECT_NEAR(dual_norm(mass_weighted(u)), std::sqrt(0.5 / lam), 1e-12);
}

TEST(Linalg, ReductionsIndependentOfThreads) {
  std::mt19937_64 rng(5);
  const Grid g(2, 127);
  const NodalField a = random_field(g, rng);
  const NodalField b = random_field(g, rng);
  const int threads = num_threads();
  set_num_threads(1);
  const double d1 = dot(a.values(), b.values());
  set_num_threads(4);
  const double d4 = dot(a.values(), b.values());
  set_num_threads(threads);
  EXPECT_EQ(d1, d4);
}
