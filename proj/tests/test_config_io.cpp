#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "sandpile/config.hpp"
#include "sandpile/field_io.hpp"
#include "test_util.hpp"

using namespace sandpile;

TEST(FieldIo, RoundTripIsBitExact) {
  std::mt19937_64 rng(41);
  const auto dir = test::scratch_dir("field_io");
  for (int dim : {1, 2}) {
    const Grid g(dim, 9);
    const NodalField u = test::random_field(g, rng, 1e3);
    write_field(dir / "u.field", u);
    EXPECT_EQ(read_nodal_field(dir / "u.field", g), u);
  }
}

TEST(FieldIo, HeaderAndCountErrorsNameTheLine) {
  std::istringstream bad_header("3 4\n1\n");
  EXPECT_THROW(read_raw_field(bad_header, "x.field"), FieldFormatError);
  std::istringstream short_body("1 3\n1\n2\n");
  try {
    read_raw_field(short_body, "y.field");
    FAIL();
  } catch (const FieldFormatError& e) {
    EXPECT_NE(std::string(e.what()).find("y.field:"), std::string::npos);
  }
  std::istringstream junk("1 2\n1\nabc\n");
  try {
    read_raw_field(junk, "z.field");
    FAIL();
  } catch (const FieldFormatError& e) {
    EXPECT_NE(std::string(e.what()).find("z.field:3"), std::string::npos);
  }
}

TEST(FieldIo, RejectsWrongGrid) {
  const auto dir = test::scratch_dir("field_grid");
  write_field(dir / "u.field", NodalField(Grid(1, 7), 1.0));
  EXPECT_THROW(read_nodal_field(dir / "u.field", Grid(1, 9)), FieldFormatError);
  EXPECT_THROW(read_nodal_field(dir / "missing.field"), FieldFormatError);
}

TEST(FieldIo, ObstacleUsesCellLayout) {
  const auto dir = test::scratch_dir("field_obstacle");
  const Grid g(1, 3);
  const std::vector<double> phi{1.0, 2.0, 3.0, 4.0};
  write_cell_field(dir / "phi.field", g, phi);
  const ObstacleField o = read_obstacle_field(dir / "phi.field", g);
  EXPECT_EQ(o[3], 4.0);
}

TEST(Config, DefaultsAndOverrides) {
  const Config c = parse_config(
      "# comment\n"
      "[problem]\n"
      "dim = 2\n"
      "n = 15\n"
      "source = 3.5\n"
      "[solver]\n"
      "eps = 0.1\n"
      "mode = incremental\n"
      "mu_cells = 2\n"
      "[schedule]\n"
      "gamma = 1, 10, 100\n"
      "[verify]\n"
      "seed = 7\n");
  EXPECT_EQ(c.problem.dim, 2);
  EXPECT_EQ(c.grid().node_count(), 225u);
  EXPECT_DOUBLE_EQ(c.problem.source.value, 3.5);
  EXPECT_DOUBLE_EQ(c.solver.eps, 0.1);
  EXPECT_EQ(c.solver.mode, GradientMode::incremental_cells(2));
  ASSERT_TRUE(c.schedule.has_value());
  EXPECT_EQ(c.schedule->gamma, (std::vector<double>{1, 10, 100}));
  EXPECT_EQ(c.verify.seed, 7u);
  EXPECT_DOUBLE_EQ(c.solver.tol_res, SolverParams{}.tol_res);
}

TEST(Config, ErrorsAreLineAnchored) {
  const auto line_of = [](const std::string& text) {
    try {
      parse_config(text, "cfg.ini");
    } catch (const ConfigError& e) {
      EXPECT_EQ(std::string(e.what()).rfind("cfg.ini:" + std::to_string(e.line()) + ":", 0), 0u) << e.what();
      return e.line();
    }
    return -1;
  };
  EXPECT_EQ(line_of("[solver]\ntol_ress = 1e-8\n"), 2);
  EXPECT_EQ(line_of("[nonsense]\n"), 1);
  EXPECT_EQ(line_of("eps = 1\n"), 1);
  EXPECT_EQ(line_of("[solver]\neps = 0.1\neps = 0.2\n"), 3);
  EXPECT_EQ(line_of("[solver]\n\neps = abc\n"), 3);
  EXPECT_EQ(line_of("[solver]\neps\n"), 2);
  EXPECT_EQ(line_of("[solver]\neps = -1\n"), 2);
  EXPECT_EQ(line_of("[problem]\nn = 48\n"), 2);
  EXPECT_EQ(line_of("[problem]\nsource = bump 1\n"), 2);
  EXPECT_GT(line_of("[schedule]\ngamma = 1, 10\nmu_cells = 2, 1\n"), 0);
}

TEST(Config, FormatRoundTrips) {
  const Config c = parse_config(
      "[problem]\ndim = 1\nn = 31\nsource = bump 2 0.3 0.4\nsupport = 0.5\nobstacle = 1.5\n"
      "[solver]\ngamma = 100\ndamping = off\npreconditioner = jacobi\n"
      "[control]\nlambda = 1e-3\ntarget = 0.25\nbb_step = false\n"
      "[output]\nplot =\n");
  const Config d = parse_config(format_config(c));
  EXPECT_EQ(format_config(d), format_config(c));
  EXPECT_EQ(d.solver.damping, Damping::off);
  EXPECT_EQ(d.solver.preconditioner, Preconditioner::jacobi);
  EXPECT_FALSE(d.control.bb_step);
  EXPECT_TRUE(d.output.plot.empty());
  ASSERT_TRUE(d.problem.source.center.has_value());
  EXPECT_DOUBLE_EQ((*d.problem.source.center)[0], 0.4);
}

TEST(Config, BumpFieldValues) {
  const Grid g(1, 3);
  const NodalField b = make_nodal_field(FieldSpec::parse("bump 2 0.5", "."), g);
  // Nodes at 0.25, 0.5, 0.75: 2 * (1 - 0.25^2 / 0.25) = 1.5 at the sides.
  EXPECT_DOUBLE_EQ(b[1], 2.0);
  EXPECT_DOUBLE_EQ(b[0], 1.5);
  EXPECT_DOUBLE_EQ(b[2], 1.5);
}

TEST(Config, FileFieldsResolveRelativeToConfig) {
  const auto dir = test::scratch_dir("config_files");
  write_field(dir / "t.field", NodalField(Grid(1, 7), 0.3));
  {
    std::ofstream os(dir / "c.ini");
    os << "[problem]\nn = 7\n[control]\ntarget = @t.field\n";
  }
  const Config c = load_config(dir / "c.ini");
  const ControlParams cp = make_control_params(c);
  EXPECT_DOUBLE_EQ(cp.target[4], 0.3);
  EXPECT_THROW(make_control_params(parse_config("[problem]\nn = 7\n")), ConfigError);
}

TEST(Config, SupportedSourceLoad) {
  // The load of g - (eps/h^d) L u0 is h^d g - eps L u0.
  const Grid g(1, 7);
  const NodalField u0 = make_nodal_field(FieldSpec::parse("bump 0.2 0.4", "."), g);
  const NodalField f = supported_source(NodalField(g, 1.0), u0, 0.1);
  const NodalField lhs = mass_weighted(f);
  NodalField rhs = mass_weighted(NodalField(g, 1.0));
  rhs -= stiffness_apply(0.1, u0);
  EXPECT_LT(test::max_abs_diff(lhs.values(), rhs.values()), 1e-15);
}

TEST(Config, ResolvedEchoListsEverySection) {
  const auto sections = resolved_config(Config{});
  std::vector<std::string> names;
  for (const auto& s : sections) names.push_back(s.first);
  EXPECT_EQ(names, (std::vector<std::string>{"problem", "solver", "schedule", "control", "output", "verify"}));
}
