#pragma once

#include <string>
#include <vector>

#include "sandpile/config.hpp"
#include "sandpile/grid.hpp"

// Frozen problem instances shared by the verification suites, the CLI
// (make-problem) and the tests.

namespace sandpile {

struct Benchmark {
  std::string name;
  Config config;
  NodalField f;
  ObstacleField phi;
};

/// 1D: n = 63, f = 5. 2D: n = 31, f = 8. Both eps = 0.05, phi = 1, gamma
/// continuation 1, 10, ..., 1e4.
Benchmark standard_benchmark(int dim, GradientMode mode = GradientMode::weak());

/// Same grid with a paraboloid support u0 under a bump source g, so that the
/// effective source is g + eps*Laplace(u0).
Benchmark supported_benchmark(int dim);

/// Source-control instance: target is the gamma = 1e4 pile of a centered
/// bump source on the 1D grid, lambda = 1e-6.
struct TrackingBenchmark {
  Config config;
  NodalField source;  ///< the source that generated the target
  NodalField target;
  ObstacleField phi;
};
TrackingBenchmark tracking_benchmark();

/// Names accepted by make_problem.
const std::vector<std::string>& problem_names();
/// Writes config.ini (and any fields it references) into dir.
void make_problem(const std::string& name, const std::filesystem::path& dir);

}  // namespace sandpile
