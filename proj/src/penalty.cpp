#include "sandpile/penalty.hpp"

#include <algorithm>
#include <cmath>

#include "sandpile/kernels.hpp"

namespace sandpile {

double clamp_pm(double t) { return std::min(1.0, std::max(0.0, t)); }

double clamp_pm_deriv(double t) { return (t > 0.0 && t < 1.0) ? 1.0 : 0.0; }

double penalty_potential(double t) {
  if (t < 0.0) return 0.0;
  if (t <= 1.0) return 0.5 * t * t;
  return t - 0.5;
}

PenaltyPointJet point_jet(std::span<const double> v, double phi) {
  PenaltyPointJet jet;
  const bool planar = v.size() == 2;
  const double norm = planar ? std::hypot(v[0], v[1]) : std::abs(v[0]);
  const double t = norm - phi;
  const double b = clamp_pm(t);
  if (b == 0.0) return jet;

  const double chi = clamp_pm_deriv(t);
  jet.regime = chi == 1.0 ? JetRegime::ramp : JetRegime::saturated;
  if (!planar) {
    jet.value[0] = b * v[0] / norm;
    // The tangential part vanishes on the line.
    jet.deriv[0] = chi;
    return jet;
  }
  const double q0 = v[0] / norm;
  const double q1 = v[1] / norm;
  jet.value = {b * q0, b * q1};
  const double s = b / norm;
  jet.deriv = {chi * q0 * q0 + s * (1.0 - q0 * q0), chi * q0 * q1 - s * q0 * q1,
               chi * q1 * q0 - s * q1 * q0, chi * q1 * q1 + s * (1.0 - q1 * q1)};
  return jet;
}

NodalField penalty_apply(const NodalField& u, const ObstacleField& phi, GradientMode mode) {
  require_same_grid(u.grid(), phi.grid(), "penalty_apply");
  const CellVectorField du = apply_gradient(u, mode);
  CellVectorField flux(u.grid());
  kernels::penalty_flux(u.grid(), du.values(), phi.values(), flux.values());
  return apply_gradient_adjoint(flux, mode);
}

NodalField penalty_deriv_apply(const NodalField& u, const ObstacleField& phi, GradientMode mode,
                               const NodalField& v) {
  require_same_grid(u.grid(), v.grid(), "penalty_deriv_apply");
  return PenaltyLinearization(u, phi, mode).apply(v);
}

double penalty_energy(const NodalField& u, const ObstacleField& phi, GradientMode mode) {
  require_same_grid(u.grid(), phi.grid(), "penalty_energy");
  const CellVectorField du = apply_gradient(u, mode);
  double s = 0.0;
  for (std::size_t c = 0; c < du.cell_count(); ++c) {
    s += penalty_potential(du.magnitude(c) - phi[c]);
  }
  return u.grid().cell_volume() * s;
}

double feasibility_violation(const NodalField& u, const ObstacleField& phi, GradientMode mode) {
  require_same_grid(u.grid(), phi.grid(), "feasibility_violation");
  const CellVectorField du = apply_gradient(u, mode);
  double worst = 0.0;
  for (std::size_t c = 0; c < du.cell_count(); ++c) {
    worst = std::max(worst, du.magnitude(c) - phi[c]);
  }
  return worst;
}

PenaltyLinearization::PenaltyLinearization(const NodalField& u, const ObstacleField& phi,
                                           GradientMode mode)
    : grid_(u.grid()), mode_(mode) {
  require_same_grid(u.grid(), phi.grid(), "PenaltyLinearization");
  const auto d = static_cast<std::size_t>(grid_.dim());
  const CellVectorField du = apply_gradient(u, mode);
  tensors_.assign(grid_.cell_count() * d * d, 0.0);
  kernels::penalty_tensors(grid_, du.values(), phi.values(), tensors_);
  for (std::size_t c = 0; c < grid_.cell_count(); ++c) {
    if (du.magnitude(c) - phi[c] > 0.0) ++active_cells_;
  }
}

void PenaltyLinearization::apply(std::span<const double> v, std::span<double> out) const {
  const NodalField vf(grid_, std::vector<double>(v.begin(), v.end()));
  const CellVectorField dv = apply_gradient(vf, mode_);
  CellVectorField gdv(grid_);
  kernels::cell_tensor_apply(grid_, tensors_, dv.values(), gdv.values());
  const NodalField r = apply_gradient_adjoint(gdv, mode_);
  std::copy(r.values().begin(), r.values().end(), out.begin());
}

NodalField PenaltyLinearization::apply(const NodalField& v) const {
  require_same_grid(grid_, v.grid(), "PenaltyLinearization::apply");
  NodalField out(grid_);
  apply(v.values(), out.values());
  return out;
}

}  // namespace sandpile
