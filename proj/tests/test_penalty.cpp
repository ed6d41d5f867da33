#include <gtest/gtest.h>

#include <cmath>

#include "sandpile/linalg.hpp"
#include "sandpile/penalty.hpp"
#include "test_util.hpp"

using namespace sandpile;
using sandpile::test::random_field;

TEST(Clamp, ValuesAndKinks) {
  EXPECT_EQ(clamp_pm(-0.3), 0.0);
  EXPECT_EQ(clamp_pm(0.4), 0.4);
  EXPECT_EQ(clamp_pm(7.0), 1.0);
  EXPECT_EQ(clamp_pm_deriv(0.0), 0.0);
  EXPECT_EQ(clamp_pm_deriv(1.0), 0.0);
  EXPECT_EQ(clamp_pm_deriv(0.5), 1.0);
  EXPECT_EQ(clamp_pm_deriv(1.5), 0.0);
}

TEST(Clamp, PotentialIsPrimitive) {
  EXPECT_EQ(penalty_potential(-1.0), 0.0);
  EXPECT_DOUBLE_EQ(penalty_potential(0.5), 0.125);
  EXPECT_DOUBLE_EQ(penalty_potential(3.0), 2.5);
  for (double t : {-0.5, 0.2, 0.7, 1.3, 4.0}) {
    const double s = 1e-6;
    const double fd = (penalty_potential(t + s) - penalty_potential(t - s)) / (2 * s);
    EXPECT_NEAR(fd, clamp_pm(t), 1e-9);
  }
}

TEST(PointJet, InactiveIsExactZero) {
  const std::vector<double> v{0.3, -0.4};
  const PenaltyPointJet j = point_jet(v, 1.0);
  EXPECT_EQ(j.regime, JetRegime::inactive);
  for (double x : j.value) EXPECT_EQ(x, 0.0);
  for (double x : j.deriv) EXPECT_EQ(x, 0.0);
}

TEST(PointJet, RampAndSaturatedClosedForms) {
  // |v| = 1.5: b = 0.5, ramp. Along v: chi = 1; across: b/|v| = 1/3.
  const std::vector<double> v{0.9, 1.2};
  const PenaltyPointJet j = point_jet(v, 1.0);
  EXPECT_EQ(j.regime, JetRegime::ramp);
  EXPECT_NEAR(j.value[0], 0.5 * 0.6, 1e-15);
  EXPECT_NEAR(j.value[1], 0.5 * 0.8, 1e-15);
  const double nn[4] = {0.36, 0.48, 0.48, 0.64};
  for (int i = 0; i < 4; ++i) {
    const double id = (i == 0 || i == 3) ? 1.0 : 0.0;
    EXPECT_NEAR(j.deriv[i], nn[i] + (id - nn[i]) / 3.0, 1e-15);
  }
  const std::vector<double> w{3.0, 0.0};
  const PenaltyPointJet s = point_jet(w, 1.0);
  EXPECT_EQ(s.regime, JetRegime::saturated);
  EXPECT_DOUBLE_EQ(s.value[0], 1.0);
  EXPECT_DOUBLE_EQ(s.deriv[0], 0.0);
  EXPECT_DOUBLE_EQ(s.deriv[3], 1.0 / 3.0);
}

TEST(PointJet, OneDimensionalSign) {
  const std::vector<double> v{-1.25};
  const PenaltyPointJet j = point_jet(v, 1.0);
  EXPECT_DOUBLE_EQ(j.value[0], -0.25);
  EXPECT_DOUBLE_EQ(j.deriv[0], 1.0);
}

TEST(PointJet, DerivativeMatchesDifferencesAwayFromKinks) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(-3.0, 3.0);
  int tested = 0;
  while (tested < 50) {
    const std::vector<double> v{U(rng), U(rng)};
    const double t = std::hypot(v[0], v[1]) - 1.0;
    if (std::abs(t) < 1e-3 || std::abs(t - 1.0) < 1e-3) continue;
    const PenaltyPointJet j = point_jet(v, 1.0);
    const double s = 1e-7;
    for (int k = 0; k < 2; ++k) {
      std::vector<double> vp = v, vm = v;
      vp[k] += s;
      vm[k] -= s;
      const PenaltyPointJet jp = point_jet(vp, 1.0), jm = point_jet(vm, 1.0);
      for (int i = 0; i < 2; ++i) {
        EXPECT_NEAR((jp.value[i] - jm.value[i]) / (2 * s), j.deriv[i * 2 + k], 1e-6);
      }
    }
    ++tested;
  }
}

TEST(PenaltyApply, ZeroOnFeasibleAndSupportedOnActive) {
  const Grid g(1, 7);
  const ObstacleField phi = ObstacleField::constant(g, 1.0);
  NodalField u(g);
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = 0.02 * std::sin(3.0 * static_cast<double>(i));
  const NodalField zero = penalty_apply(u, phi, GradientMode::weak());
  for (double v : zero.values()) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(penalty_energy(u, phi, GradientMode::weak()), 0.0);
  EXPECT_EQ(feasibility_violation(u, phi, GradientMode::weak()), 0.0);

  // A single steep cell: u = (0, .., 0, 1, 0, ..) with h = 1/8 has slope 8.
  NodalField spike(g);
  spike[3] = 1.0;
  const NodalField p = penalty_apply(spike, phi, GradientMode::weak());
  // Cells 3 and 4 are saturated with flux +1 and -1, so D^T W P is (.., -1, 2, -1, ..).
  EXPECT_DOUBLE_EQ(p[3], 2.0);
  EXPECT_DOUBLE_EQ(p[2], -1.0);
  EXPECT_DOUBLE_EQ(p[4], -1.0);
  EXPECT_DOUBLE_EQ(p[1], 0.0);
  EXPECT_DOUBLE_EQ(feasibility_violation(spike, phi, GradientMode::weak()), 7.0);
}

TEST(PenaltyLinearization, MatchesDerivativeApply) {
  std::mt19937_64 rng(12);
  for (int dim : {1, 2}) {
    const Grid g(dim, 13);
    const ObstacleField phi = ObstacleField::constant(g, 1.0);
    NodalField u = random_field(g, rng, 0.2);
    const NodalField v = random_field(g, rng);
    for (GradientMode mode : {GradientMode::weak(), GradientMode::incremental_cells(2)}) {
      const PenaltyLinearization lin(u, phi, mode);
      EXPECT_GT(lin.active_cells(), 0u);
      const NodalField a = lin.apply(v);
      const NodalField b = penalty_deriv_apply(u, phi, mode, v);
      for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], b[i]);
    }
  }
}

TEST(PenaltyLinearization, SymmetricOperator) {
  std::mt19937_64 rng(13);
  const Grid g(2, 11);
  const ObstacleField phi = ObstacleField::constant(g, 0.8);
  const NodalField u = random_field(g, rng, 0.3);
  const PenaltyLinearization lin(u, phi, GradientMode::incremental_cells(1));
  const NodalField a = random_field(g, rng), b = random_field(g, rng);
  const double ab = dot(lin.apply(a).values(), b.values());
  const double ba = dot(lin.apply(b).values(), a.values());
  EXPECT_NEAR(ab, ba, 1e-12 * std::abs(ab));
}
