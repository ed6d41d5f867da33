#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sandpile/control.hpp"
#include "sandpile/grid.hpp"
#include "sandpile/state_solver.hpp"

// Run configuration: a flat "key = value" text with [section] headers and '#'
// comments. Unknown sections and keys are rejected so that a misspelled
// tolerance never falls back to its default silently.
//
// Field-valued keys accept a number (constant), "@path" (field file, relative
// to the config file), or "bump A R [cx [cy]]": the cap A*max(0, 1 - |x-c|^2/R^2)
// centered at c (default the domain center).

namespace sandpile {

class ConfigError : public std::runtime_error {
public:
  ConfigError(const std::string& source, int line, const std::string& what);
  int line() const { return line_; }

private:
  int line_;
};

struct FieldSpec {
  enum class Kind { constant, file, bump };
  Kind kind = Kind::constant;
  double value = 0.0;  ///< constant value, or bump amplitude
  std::filesystem::path path;
  double radius = 0.0;
  std::optional<std::array<double, 2>> center;
  std::string text = "0";  ///< as written, for the config echo

  static FieldSpec parse(const std::string& text, const std::filesystem::path& base_dir);
  static FieldSpec constant(double v);
};

struct ProblemConfig {
  int dim = 1;
  int n = 63;
  FieldSpec source = FieldSpec::constant(0.0);
  /// Supporting structure u0; the effective source is g + eps*Laplace(u0).
  std::optional<FieldSpec> support;
  FieldSpec obstacle = FieldSpec::constant(1.0);
};

struct ControlConfig {
  double lambda = 1e-6;
  std::optional<FieldSpec> target;
  FieldSpec f_init = FieldSpec::constant(0.0);
  DescentRule descent = DescentRule::armijo;
  double step_init = 1.0;
  double armijo_c1 = 1e-4;
  double armijo_backtrack = 0.5;
  int max_backtracks = 30;
  bool bb_step = true;
  int max_outer = 100;
  double tol_grad = 1e-8;
};

struct OutputConfig {
  std::string u_field = "u.field";
  std::string report = "report.json";
  std::string plot = "plot.csv";  ///< empty disables the CSV
  std::string f_field = "f_opt.field";
  std::string trace = "trace.json";
};

struct VerifyConfig {
  std::uint64_t seed = 0;
};

struct Config {
  std::string source_name = "<defaults>";
  ProblemConfig problem;
  SolverParams solver;
  /// Present when [schedule] sets gamma; otherwise a single solve at solver.gamma.
  std::optional<Schedule> schedule;
  ControlConfig control;
  OutputConfig output;
  VerifyConfig verify;

  Grid grid() const { return Grid(problem.dim, problem.n); }
};

Config parse_config(const std::string& text, const std::string& source_name = "<string>",
                    const std::filesystem::path& base_dir = ".");
Config load_config(const std::filesystem::path& path);

/// Every key with its effective value, in section order.
std::vector<std::pair<std::string, std::vector<std::pair<std::string, std::string>>>>
resolved_config(const Config& cfg);
/// Serialization that parse_config reads back to the same Config.
std::string format_config(const Config& cfg);

NodalField make_nodal_field(const FieldSpec& spec, const Grid& g);
/// Samples at cell centers; files use the cell layout.
ObstacleField make_obstacle(const FieldSpec& spec, const Grid& g);
/// Nodal source g - (eps / h^d) L u0, whose load vector is h^d g - eps L u0.
NodalField supported_source(const NodalField& g, const NodalField& u0, double eps);
/// Source of the configured problem with the support term folded in.
NodalField problem_source(const Config& cfg);
ControlParams make_control_params(const Config& cfg);
/// Same settings with an already sampled target.
ControlParams make_control_params(const Config& cfg, NodalField target);

}  // namespace sandpile
