#pragma once

#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sandpile/grid.hpp"
#include "sandpile/penalty.hpp"

namespace sandpile {

using LinearMap = std::function<void(std::span<const double>, std::span<double>)>;

struct CgReport {
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
  /// A restart from the true residual failed to halve it: roundoff floor.
  bool stagnated = false;
};

class LinearSolveError : public std::runtime_error {
public:
  LinearSolveError(const std::string& what, CgReport report)
      : std::runtime_error(what), report_(report) {}
  const CgReport& report() const { return report_; }

private:
  CgReport report_;
};

/// Preconditioned conjugate gradients for symmetric positive definite `op`.
/// `x` holds the initial guess on entry. Stops when ||b - Ax|| <= rel_tol ||b||.
/// Does not throw; check `converged`.
CgReport pcg(const LinearMap& op, const LinearMap& precond, std::span<const double> b,
             std::span<double> x, double rel_tol, int max_iter);

/// Sparse LDL^T factorization of an assembled SPD operator.
class SparseFactor {
public:
  SparseFactor(SparseFactor&&) noexcept;
  SparseFactor& operator=(SparseFactor&&) noexcept;
  ~SparseFactor();

  std::size_t size() const;
  void solve(std::span<const double> rhs, std::span<double> out) const;
  std::vector<double> solve(std::span<const double> rhs) const;

  /// eps D_h^T W D_h + gamma D^T W G D (G from `lin`, may be null).
  static SparseFactor newton_system(const Grid& g, double eps, double gamma,
                                    const PenaltyLinearization* lin);
  /// D_h^T W D_h
  static SparseFactor stiffness(const Grid& g);
  /// eps D_h^T W D_h + rho D^T W D
  static SparseFactor admm_system(const Grid& g, double eps, double rho, GradientMode mode);

  struct Impl;

private:
  explicit SparseFactor(std::unique_ptr<Impl> impl);
  std::unique_ptr<Impl> impl_;
};

/// Shared per-grid factorization of D_h^T W D_h; safe to call concurrently.
std::shared_ptr<const SparseFactor> stiffness_factor(const Grid& g);

enum class Preconditioner { jacobi, cholesky };

/// Semismooth Newton operator eps D_h^T W D_h + gamma D^T W G_P(D u) D at a fixed
/// base point, applied matrix-free through the kernels. Also serves the
/// sensitivity and adjoint solves, which use the same operator.
class NewtonSystem {
public:
  NewtonSystem(const NodalField& u, const ObstacleField& phi, double eps, double gamma,
               GradientMode mode, Preconditioner pc = Preconditioner::cholesky);
  ~NewtonSystem();

  const Grid& grid() const { return grid_; }
  const PenaltyLinearization& linearization() const { return lin_; }

  void apply(std::span<const double> v, std::span<double> out) const;
  NodalField apply(const NodalField& v) const;

  /// Solves to relative tolerance `tol`; throws LinearSolveError otherwise.
  NodalField solve(const NodalField& rhs, double tol, int max_iter, CgReport* report = nullptr) const;

private:
  Grid grid_;
  double eps_;
  double gamma_;
  PenaltyLinearization lin_;
  Preconditioner pc_;
  std::vector<double> diagonal_;
  std::unique_ptr<SparseFactor> factor_;
};

}  // namespace sandpile
