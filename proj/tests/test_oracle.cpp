#include <gtest/gtest.h>

#include <cmath>

#include "sandpile/linalg.hpp"
#include "sandpile/norms.hpp"
#include "sandpile/oracle.hpp"
#include "sandpile/penalty.hpp"
#include "test_util.hpp"

using namespace sandpile;

TEST(Dense, SampleAndSolve) {
  // A = [[4, 1], [2, 3]], x = (1, -2).
  const LinearMap op = [](std::span<const double> x, std::span<double> y) {
    y[0] = 4 * x[0] + x[1];
    y[1] = 2 * x[0] + 3 * x[1];
  };
  const auto A = sample_operator(op, 2);
  EXPECT_EQ(A, (std::vector<double>{4, 1, 2, 3}));
  const std::vector<double> b{2.0, -4.0};
  const auto x = dense_solve(op, 2, b);
  EXPECT_NEAR(x[0], 1.0, 1e-15);
  EXPECT_NEAR(x[1], -2.0, 1e-15);
  EXPECT_THROW(dense_solve_matrix(std::vector<double>{1, 2, 2, 4}, 2, b), OracleError);
}

TEST(Admm, OneNodeClosedForm) {
  // n = 1, h = 1/2: the constraint |u|/h <= 1 binds at u = 1/2 for f = 1.
  const Grid g(1, 1);
  const AdmmResult r = vi_solve_admm(NodalField(g, 1.0), ObstacleField::constant(g, 1.0), 0.1, AdmmParams{});
  EXPECT_NEAR(r.u[0], 0.5, 1e-8);
  EXPECT_LE(r.feasibility, 1e-8);
}

TEST(Admm, InactiveConstraintGivesPoisson) {
  const Grid g(2, 9);
  const NodalField f(g, 0.1);
  const ObstacleField phi = ObstacleField::constant(g, 1.0);
  const AdmmResult r = vi_solve_admm(f, phi, 0.05, AdmmParams{});
  const NodalField load = mass_weighted(f);
  const auto w = dense_solve(
      [&](std::span<const double> x, std::span<double> y) {
        const NodalField s = stiffness_apply(0.05, NodalField(g, std::vector<double>(x.begin(), x.end())));
        std::copy(s.values().begin(), s.values().end(), y.begin());
      },
      g.node_count(), load.values());
  EXPECT_LT(l2_norm(r.u - NodalField(g, w)), 1e-6 * l2_norm(r.u));
}

TEST(Admm, FixedRhoStillConverges) {
  const Grid g(1, 31);
  AdmmParams p;
  p.adaptive = false;
  p.tol_primal = p.tol_dual = 1e-8;
  const AdmmResult r = vi_solve_admm(NodalField(g, 5.0), ObstacleField::constant(g, 1.0), 0.05, p);
  EXPECT_LE(r.feasibility, 1e-6);
  EXPECT_DOUBLE_EQ(r.rho, 0.05 / g.h());
  EXPECT_FALSE(r.history.empty());
}

TEST(Admm, IterationCapThrows) {
  const Grid g(1, 31);
  AdmmParams p;
  p.max_iter = 20;
  EXPECT_THROW(vi_solve_admm(NodalField(g, 5.0), ObstacleField::constant(g, 1.0), 0.05, p), OracleError);
}

TEST(Probes, RatioOfAffineMapVanishes) {
  const VectorMap F = [](std::span<const double> v) { return std::vector<double>{3 * v[0] + 1.0}; };
  const DerivativeMap G = [](std::span<const double>, std::span<const double> h) {
    return std::vector<double>{3 * h[0]};
  };
  const NormFn n = [](std::span<const double> v) { return std::abs(v[0]); };
  const std::vector<double> base{0.2}, dir{1.0}, scales{1e-1, 1e-2};
  for (const RatioSample& r : newton_ratio_probe(F, G, base, dir, scales, n, n)) EXPECT_LT(r.ratio, 1e-13);
}

TEST(Probes, RatioOfSquareIsLinearInScale) {
  const VectorMap F = [](std::span<const double> v) { return std::vector<double>{v[0] * v[0]}; };
  const DerivativeMap G = [](std::span<const double> v, std::span<const double> h) {
    return std::vector<double>{2 * v[0] * h[0]};
  };
  const NormFn n = [](std::span<const double> v) { return std::abs(v[0]); };
  const std::vector<double> base{1.0}, dir{1.0}, scales{1e-1, 1e-2};
  const auto r = newton_ratio_probe(F, G, base, dir, scales, n, n);
  // G at the perturbed point: remainder is -(s h)^2.
  EXPECT_NEAR(r[0].ratio, 1e-1, 1e-12);
  EXPECT_NEAR(r[1].ratio, 1e-2, 1e-12);
}

TEST(Probes, CentralDifferenceOfCubic) {
  const Functional j = [](std::span<const double> f) { return f[0] * f[0] * f[0]; };
  const std::vector<double> f{2.0}, e{1.0};
  EXPECT_NEAR(fd_directional(j, f, e, 1e-3), 12.0 + 1e-6, 1e-9);
}
