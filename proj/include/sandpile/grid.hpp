#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace sandpile {

/// Uniform discretization of the unit square (or interval) with implicit zero
/// Dirichlet data. Only the n^d interior nodes carry unknowns; the (n+1)^d
/// cells between them carry gradient samples at their centers.
class Grid {
public:
  Grid(int dim, int n);

  int dim() const { return dim_; }
  int n() const { return n_; }
  double h() const { return h_; }

  std::size_t node_count() const;
  std::size_t cells_per_axis() const { return static_cast<std::size_t>(n_) + 1; }
  std::size_t cell_count() const;
  /// h^d, the quadrature weight of one cell.
  double cell_volume() const;

  bool operator==(const Grid& other) const { return dim_ == other.dim_ && n_ == other.n_; }

private:
  int dim_;
  int n_;
  double h_;
};

/// Values at interior nodes, row-major (x fastest).
class NodalField {
public:
  explicit NodalField(const Grid& grid);
  NodalField(const Grid& grid, std::vector<double> values);
  NodalField(const Grid& grid, double constant);

  const Grid& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  NodalField& operator+=(const NodalField& other);
  NodalField& operator-=(const NodalField& other);
  NodalField& operator*=(double s);

  bool operator==(const NodalField& other) const = default;

private:
  Grid grid_;
  std::vector<double> values_;
};

NodalField operator+(NodalField a, const NodalField& b);
NodalField operator-(NodalField a, const NodalField& b);
NodalField operator*(double s, NodalField a);

/// One d-vector per cell, interleaved: entry c*d + i is component i of cell c.
class CellVectorField {
public:
  explicit CellVectorField(const Grid& grid);
  CellVectorField(const Grid& grid, std::vector<double> values);

  const Grid& grid() const { return grid_; }
  std::size_t cell_count() const { return grid_.cell_count(); }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  std::span<double> at(std::size_t cell);
  std::span<const double> at(std::size_t cell) const;
  double magnitude(std::size_t cell) const;

private:
  Grid grid_;
  std::vector<double> values_;
};

/// Gradient bound per cell. Construction enforces phi >= nu > 0 everywhere.
class ObstacleField {
public:
  ObstacleField(const Grid& grid, std::vector<double> phi);
  static ObstacleField constant(const Grid& grid, double phi);

  const Grid& grid() const { return grid_; }
  std::span<const double> values() const { return phi_; }
  double operator[](std::size_t cell) const { return phi_[cell]; }
  /// Smallest cell value; the uniform lower bound.
  double nu() const { return nu_; }

private:
  Grid grid_;
  std::vector<double> phi_;
  double nu_;
};

/// Which discrete gradient enters the penalty: the weak gradient of the
/// interpolant, or forward incremental quotients with step mu = mu_cells*h.
struct GradientMode {
  enum class Kind { weak, incremental };

  Kind kind = Kind::weak;
  int mu_cells = 1;

  static GradientMode weak() { return {}; }
  /// Throws std::invalid_argument unless mu is a positive integer multiple of h.
  static GradientMode incremental(const Grid& grid, double mu);
  static GradientMode incremental_cells(int mu_cells);

  double mu(const Grid& grid) const { return mu_cells * grid.h(); }
  bool operator==(const GradientMode&) const = default;
};

/// Converts mu to a cell count, throwing if it is not a positive multiple of h.
int mu_to_cells(const Grid& grid, double mu);

void require_same_grid(const Grid& a, const Grid& b, const char* where);

// Discrete operators. Parallel over cells/nodes with fixed per-entry
// accumulation order, so results do not depend on the thread count.

CellVectorField gradient(const NodalField& u);
NodalField gradient_adjoint(const CellVectorField& z);
CellVectorField incremental_gradient(const NodalField& u, double mu);
NodalField incremental_gradient_adjoint(const CellVectorField& z, double mu);

CellVectorField apply_gradient(const NodalField& u, GradientMode mode);
NodalField apply_gradient_adjoint(const CellVectorField& z, GradientMode mode);

/// eps * D_h^T W D_h u, the load-form action of -eps*Laplace.
NodalField stiffness_apply(double eps, const NodalField& u);

/// h^d * f: nodal samples turned into a load vector.
NodalField mass_weighted(const NodalField& f);

/// Nodal interpolant value at each cell center.
std::vector<double> cell_center_values(const NodalField& u);

/// Cell-center coordinates (x for 1D, (x, y) for 2D) of cell c.
std::array<double, 2> cell_center(const Grid& grid, std::size_t cell);
/// Coordinates of interior node i.
std::array<double, 2> node_coordinates(const Grid& grid, std::size_t node);

}  // namespace sandpile
