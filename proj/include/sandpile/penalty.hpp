#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "sandpile/grid.hpp"

namespace sandpile {

/// min(1, max(0, t))
double clamp_pm(double t);

/// Indicator of the open interval (0, 1); zero at both kinks.
double clamp_pm_deriv(double t);

/// Primitive of clamp_pm: 0 for t < 0, t^2/2 on [0, 1], t - 1/2 beyond.
double penalty_potential(double t);

enum class JetRegime { inactive, ramp, saturated };

/// Penalty flux P(v) = b(v) v/|v| with b = clamp_pm(|v| - phi), and its Newton
/// derivative chi(|v| - phi) vv^T/|v|^2 + (b/|v|)(I - vv^T/|v|^2), at one cell.
/// For d = 1 only value[0] and deriv[0] are meaningful.
struct PenaltyPointJet {
  std::array<double, 2> value{};
  std::array<double, 4> deriv{};  // row-major d x d
  JetRegime regime = JetRegime::inactive;
};

/// v has length 1 or 2. When |v| <= phi the jet is exactly zero and no
/// division by |v| takes place; phi >= nu > 0 keeps |v| away from zero otherwise.
PenaltyPointJet point_jet(std::span<const double> v, double phi);

/// D^T W P(D u), zero whenever |D u| <= phi in every cell.
NodalField penalty_apply(const NodalField& u, const ObstacleField& phi, GradientMode mode);

/// D^T W G_P(D u) D v.
NodalField penalty_deriv_apply(const NodalField& u, const ObstacleField& phi, GradientMode mode,
                               const NodalField& v);

/// sum_c h^d K(|D u|_c - phi_c); its gradient is penalty_apply.
double penalty_energy(const NodalField& u, const ObstacleField& phi, GradientMode mode);

/// max_c (|D u|_c - phi_c)^+
double feasibility_violation(const NodalField& u, const ObstacleField& phi, GradientMode mode);

/// G_P(D u) frozen per cell so that repeated applications inside a linear
/// solve do not re-evaluate the jets.
class PenaltyLinearization {
public:
  PenaltyLinearization(const NodalField& u, const ObstacleField& phi, GradientMode mode);

  const Grid& grid() const { return grid_; }
  GradientMode mode() const { return mode_; }
  /// d*d entries per cell, row-major.
  std::span<const double> tensors() const { return tensors_; }
  std::size_t active_cells() const { return active_cells_; }

  /// D^T W G D v
  NodalField apply(const NodalField& v) const;
  void apply(std::span<const double> v, std::span<double> out) const;

private:
  Grid grid_;
  GradientMode mode_;
  std::vector<double> tensors_;
  std::size_t active_cells_ = 0;
};

}  // namespace sandpile
