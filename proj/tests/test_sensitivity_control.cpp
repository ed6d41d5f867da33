#include <gtest/gtest.h>

#include <cmath>

#include "sandpile/benchmarks.hpp"
#include "sandpile/control.hpp"
#include "sandpile/linalg.hpp"
#include "sandpile/norms.hpp"
#include "sandpile/oracle.hpp"
#include "sandpile/sensitivity.hpp"
#include "test_util.hpp"

using namespace sandpile;

namespace {

struct Fixture1D {
  Benchmark b = standard_benchmark(1);
  SolverParams sp = [this] {
    SolverParams p = b.config.solver;
    p.gamma = 10.0;
    return p;
  }();
  NodalField u = path_follow(b.f, b.phi, sp, Schedule{{1.0, 10.0}, {}}).u;
};

}  // namespace

TEST(Sensitivity, LinearInDirection) {
  Fixture1D fx;
  std::mt19937_64 rng(31);
  const NodalField a = test::random_field(fx.u.grid(), rng);
  const NodalField w1 = solve_sensitivity(fx.u, a, fx.b.phi, fx.sp);
  const NodalField w3 = solve_sensitivity(fx.u, 3.0 * a, fx.b.phi, fx.sp);
  EXPECT_LT(h1_seminorm(w3 - 3.0 * w1), 1e-10 * h1_seminorm(w3));
}

TEST(Sensitivity, ZeroDirectionGivesZero) {
  Fixture1D fx;
  const NodalField w = solve_sensitivity(fx.u, NodalField(fx.u.grid()), fx.b.phi, fx.sp);
  for (double v : w.values()) EXPECT_EQ(v, 0.0);
}

TEST(Sensitivity, AdjointIsSameOperator) {
  Fixture1D fx;
  std::mt19937_64 rng(32);
  const NodalField a = test::random_field(fx.u.grid(), rng);
  const NodalField s = solve_sensitivity(fx.u, a, fx.b.phi, fx.sp);
  const NodalField p = solve_adjoint(fx.u, a, fx.b.phi, fx.sp);
  EXPECT_LT(l2_norm(s - p), 1e-12 * l2_norm(s));
}

TEST(Sensitivity, MatchesStateDifferenceQuotient) {
  // In 1D the map is affine between active-set changes, so a small step
  // reproduces the sensitivity to solver accuracy.
  Fixture1D fx;
  std::mt19937_64 rng(33);
  NodalField dir = test::random_field(fx.u.grid(), rng);
  dir *= 1e-6 / l2_norm(dir);
  const NodalField up = solve_state(fx.b.f + dir, fx.b.phi, fx.sp, fx.u).u;
  const NodalField w = solve_sensitivity(fx.u, dir, fx.b.phi, fx.sp);
  EXPECT_LT(h1_seminorm(up - fx.u - w), 1e-3 * h1_seminorm(w));
}

TEST(Control, ParamsValidation) {
  const Grid g(1, 7);
  ControlParams cp{NodalField(g)};
  EXPECT_NO_THROW(cp.validate());
  cp.lambda = -1.0;
  EXPECT_THROW(cp.validate(), std::invalid_argument);
  cp = ControlParams{NodalField(g)};
  cp.tol_grad = 0.0;
  EXPECT_THROW(cp.validate(), std::invalid_argument);
  EXPECT_THROW(ReducedObjective(ObstacleField::constant(Grid(1, 9), 1.0), ControlParams{NodalField(g)},
                                SolverParams{}),
               std::invalid_argument);
}

TEST(Control, ObjectiveClosedFormAtZero) {
  const Grid g(1, 15);
  const NodalField target(g, 0.5);
  ControlParams cp(target);
  cp.lambda = 0.3;
  const double j0 = objective(NodalField(g), ObstacleField::constant(g, 1.0), cp, SolverParams{});
  EXPECT_NEAR(j0, 0.5 * l2_norm(target) * l2_norm(target), 1e-15);
}

TEST(Control, GradientMatchesCentralDifference) {
  const Grid g(2, 11);
  const ObstacleField phi = ObstacleField::constant(g, 1.0);
  SolverParams sp;
  sp.gamma = 0.0;
  std::mt19937_64 rng(34);
  ControlParams cp(test::random_field(g, rng, 0.1));
  cp.lambda = 1e-3;
  const NodalField f = test::random_field(g, rng);
  const NodalField grad = reduced_gradient(f, phi, cp, sp);
  NodalField e = test::random_field(g, rng);
  e *= 1.0 / l2_norm(e);
  const Functional j = [&](std::span<const double> x) {
    return objective(NodalField(g, std::vector<double>(x.begin(), x.end())), phi, cp, sp);
  };
  const double fd = fd_directional(j, f.values(), e.values(), 1e-4);
  EXPECT_NEAR(fd, l2_inner(grad, e), 1e-7 * std::abs(fd));
}

TEST(Control, FixedStepDescends) {
  const Grid g(1, 15);
  const ObstacleField phi = ObstacleField::constant(g, 1.0);
  SolverParams sp;
  sp.gamma = 0.0;
  ControlParams cp(NodalField(g, 0.1));
  cp.descent = DescentRule::fixed;
  cp.step_init = 0.1;
  cp.max_outer = 20;
  const OptimizeResult r = optimize(NodalField(g), phi, cp, sp);
  EXPECT_EQ(r.trace.size(), 21u);
  EXPECT_EQ(r.status, OptimizeStatus::max_outer);
  for (std::size_t k = 1; k < r.trace.size(); ++k) EXPECT_LT(r.trace[k].j, r.trace[k - 1].j);
}

TEST(Control, StationaryStartStopsImmediately) {
  const Grid g(1, 15);
  ControlParams cp{NodalField(g)};
  const OptimizeResult r = optimize(NodalField(g), ObstacleField::constant(g, 1.0), cp, SolverParams{});
  EXPECT_EQ(r.status, OptimizeStatus::converged);
  EXPECT_EQ(r.trace.size(), 1u);
  EXPECT_EQ(r.state_solves, 1);
}

TEST(Control, StatusNames) {
  EXPECT_EQ(to_string(OptimizeStatus::converged), "converged");
  EXPECT_EQ(to_string(OptimizeStatus::max_outer), "max_outer");
  EXPECT_EQ(to_string(OptimizeStatus::line_search_failed), "line_search_failed");
}
