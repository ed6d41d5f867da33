#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "sandpile/grid.hpp"

namespace sandpile::test {

inline NodalField random_field(const Grid& g, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> N(0.0, scale);
  NodalField u(g);
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = N(rng);
  return u;
}

inline CellVectorField random_cells(const Grid& g, std::mt19937_64& rng) {
  std::normal_distribution<double> N(0.0, 1.0);
  CellVectorField z(g);
  for (double& v : z.values()) v = N(rng);
  return z;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

/// Fresh empty directory under the system temp path.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("sandpile_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace sandpile::test
