#include "sandpile/grid.hpp"

#include <cmath>
#include <string>

#include "sandpile/kernels.hpp"

namespace sandpile {

Grid::Grid(int dim, int n) : dim_(dim), n_(n), h_(0.0) {
  if (dim != 1 && dim != 2) throw std::invalid_argument("grid dimension must be 1 or 2");
  if (n < 1) throw std::invalid_argument("grid needs at least one interior node per axis");
  h_ = 1.0 / static_cast<double>(n + 1);
  if (h_ * static_cast<double>(n + 1) != 1.0) {
    throw std::invalid_argument("grid with n = " + std::to_string(n) +
                                " has h*(n+1) != 1 in floating point; pick another n");
  }
}

std::size_t Grid::node_count() const {
  const auto m = static_cast<std::size_t>(n_);
  return dim_ == 1 ? m : m * m;
}

std::size_t Grid::cell_count() const {
  const std::size_t m = cells_per_axis();
  return dim_ == 1 ? m : m * m;
}

double Grid::cell_volume() const { return dim_ == 1 ? h_ : h_ * h_; }

void require_same_grid(const Grid& a, const Grid& b, const char* where) {
  if (!(a == b)) throw std::invalid_argument(std::string(where) + ": fields live on different grids");
}

// --- NodalField ---------------------------------------------------------

NodalField::NodalField(const Grid& grid) : grid_(grid), values_(grid.node_count(), 0.0) {}

NodalField::NodalField(const Grid& grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.node_count()) {
    throw std::invalid_argument("nodal field length does not match grid");
  }
}

NodalField::NodalField(const Grid& grid, double constant)
    : grid_(grid), values_(grid.node_count(), constant) {}

NodalField& NodalField::operator+=(const NodalField& other) {
  require_same_grid(grid_, other.grid_, "NodalField +=");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  return *this;
}

NodalField& NodalField::operator-=(const NodalField& other) {
  require_same_grid(grid_, other.grid_, "NodalField -=");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
  return *this;
}

NodalField& NodalField::operator*=(double s) {
  for (double& v : values_) v *= s;
  return *this;
}

NodalField operator+(NodalField a, const NodalField& b) { return a += b; }
NodalField operator-(NodalField a, const NodalField& b) { return a -= b; }
NodalField operator*(double s, NodalField a) { return a *= s; }

// --- CellVectorField ----------------------------------------------------

CellVectorField::CellVectorField(const Grid& grid)
    : grid_(grid), values_(grid.cell_count() * static_cast<std::size_t>(grid.dim()), 0.0) {}

CellVectorField::CellVectorField(const Grid& grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.cell_count() * static_cast<std::size_t>(grid_.dim())) {
    throw std::invalid_argument("cell vector field length does not match grid");
  }
}

std::span<double> CellVectorField::at(std::size_t cell) {
  const auto d = static_cast<std::size_t>(grid_.dim());
  return std::span<double>(values_).subspan(cell * d, d);
}

std::span<const double> CellVectorField::at(std::size_t cell) const {
  const auto d = static_cast<std::size_t>(grid_.dim());
  return std::span<const double>(values_).subspan(cell * d, d);
}

double CellVectorField::magnitude(std::size_t cell) const {
  const auto v = at(cell);
  return v.size() == 1 ? std::abs(v[0]) : std::hypot(v[0], v[1]);
}

// --- ObstacleField ------------------------------------------------------

ObstacleField::ObstacleField(const Grid& grid, std::vector<double> phi)
    : grid_(grid), phi_(std::move(phi)), nu_(0.0) {
  if (phi_.size() != grid_.cell_count()) {
    throw std::invalid_argument("obstacle field needs one value per cell");
  }
  nu_ = phi_.empty() ? 0.0 : phi_.front();
  for (double v : phi_) {
    if (!std::isfinite(v)) throw std::invalid_argument("obstacle field has a non-finite value");
    nu_ = std::min(nu_, v);
  }
  if (!(nu_ > 0.0)) throw std::invalid_argument("obstacle field must be strictly positive");
}

ObstacleField ObstacleField::constant(const Grid& grid, double phi) {
  return ObstacleField(grid, std::vector<double>(grid.cell_count(), phi));
}

// --- GradientMode -------------------------------------------------------

int mu_to_cells(const Grid& grid, double mu) {
  if (!(mu > 0.0) || !std::isfinite(mu)) {
    throw std::invalid_argument("incremental quotient step mu must be positive");
  }
  const double ratio = mu / grid.h();
  const double rounded = std::round(ratio);
  if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * std::max(1.0, rounded)) {
    throw std::invalid_argument("incremental quotient step mu = " + std::to_string(mu) +
                                " is not a positive integer multiple of h = " +
                                std::to_string(grid.h()));
  }
  return static_cast<int>(rounded);
}

GradientMode GradientMode::incremental(const Grid& grid, double mu) {
  return incremental_cells(mu_to_cells(grid, mu));
}

GradientMode GradientMode::incremental_cells(int mu_cells) {
  if (mu_cells < 1) throw std::invalid_argument("mu must be at least one cell");
  return {Kind::incremental, mu_cells};
}

// --- operators ----------------------------------------------------------

CellVectorField gradient(const NodalField& u) {
  CellVectorField out(u.grid());
  kernels::gradient(u.grid(), u.values(), out.values());
  return out;
}

NodalField gradient_adjoint(const CellVectorField& z) {
  NodalField out(z.grid());
  kernels::gradient_adjoint(z.grid(), z.values(), out.values());
  return out;
}

CellVectorField incremental_gradient(const NodalField& u, double mu) {
  const int m = mu_to_cells(u.grid(), mu);
  CellVectorField out(u.grid());
  kernels::incremental_gradient(u.grid(), m, u.values(), out.values());
  return out;
}

NodalField incremental_gradient_adjoint(const CellVectorField& z, double mu) {
  const int m = mu_to_cells(z.grid(), mu);
  NodalField out(z.grid());
  kernels::incremental_gradient_adjoint(z.grid(), m, z.values(), out.values());
  return out;
}

CellVectorField apply_gradient(const NodalField& u, GradientMode mode) {
  CellVectorField out(u.grid());
  if (mode.kind == GradientMode::Kind::weak) {
    kernels::gradient(u.grid(), u.values(), out.values());
  } else {
    kernels::incremental_gradient(u.grid(), mode.mu_cells, u.values(), out.values());
  }
  return out;
}

NodalField apply_gradient_adjoint(const CellVectorField& z, GradientMode mode) {
  NodalField out(z.grid());
  if (mode.kind == GradientMode::Kind::weak) {
    kernels::gradient_adjoint(z.grid(), z.values(), out.values());
  } else {
    kernels::incremental_gradient_adjoint(z.grid(), mode.mu_cells, z.values(), out.values());
  }
  return out;
}

NodalField stiffness_apply(double eps, const NodalField& u) {
  NodalField out = gradient_adjoint(gradient(u));
  out *= eps;
  return out;
}

NodalField mass_weighted(const NodalField& f) {
  NodalField out = f;
  out *= f.grid().cell_volume();
  return out;
}

std::vector<double> cell_center_values(const NodalField& u) {
  const Grid& g = u.grid();
  std::vector<double> out(g.cell_count());
  for (std::size_t c = 0; c < out.size(); ++c) {
    const auto x = cell_center(g, c);
    out[c] = reference::interpolant(g, u.values(), x[0], x[1]);
  }
  return out;
}

std::array<double, 2> cell_center(const Grid& grid, std::size_t cell) {
  const std::size_t m = grid.cells_per_axis();
  const double denom = 2.0 * static_cast<double>(m);
  if (grid.dim() == 1) return {static_cast<double>(2 * cell + 1) / denom, 0.0};
  const std::size_t k = cell % m;
  const std::size_t l = cell / m;
  return {static_cast<double>(2 * k + 1) / denom, static_cast<double>(2 * l + 1) / denom};
}

std::array<double, 2> node_coordinates(const Grid& grid, std::size_t node) {
  const auto n = static_cast<std::size_t>(grid.n());
  const auto m = static_cast<double>(n + 1);
  if (grid.dim() == 1) return {static_cast<double>(node + 1) / m, 0.0};
  return {static_cast<double>(node % n + 1) / m, static_cast<double>(node / n + 1) / m};
}

}  // namespace sandpile
