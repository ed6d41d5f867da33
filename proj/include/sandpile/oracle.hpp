#pragma once

#include <array>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "sandpile/grid.hpp"
#include "sandpile/linear_solver.hpp"

// Independent references used by the verification suites: an ADMM solver for
// the gradient-constrained variational inequality itself (no penalty), dense
// factorizations of sampled operators, and derivative probes.

namespace sandpile {

struct AdmmHistoryEntry {
  int iteration = 0;
  double primal = 0.0;
  double dual = 0.0;
  double rho = 0.0;
};

class OracleError : public std::runtime_error {
public:
  OracleError(const std::string& what, std::vector<AdmmHistoryEntry> history = {})
      : std::runtime_error(what), history_(std::move(history)) {}
  const std::vector<AdmmHistoryEntry>& history() const { return history_; }

private:
  std::vector<AdmmHistoryEntry> history_;
};

struct AdmmParams {
  double rho = 0.0;  ///< 0 selects eps / h
  int max_iter = 200000;
  double tol_primal = 1e-9;  ///< max_c |D u - z|_c
  double tol_dual = 1e-9;    ///< rho * max_c |z - z_prev|_c
  bool adaptive = true;      ///< 2x residual balancing when the residuals differ by 10x
  int check_every = 10;
};

struct AdmmResult {
  NodalField u;
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double feasibility = 0.0;  ///< max (|D u| - phi)^+
  double rho = 0.0;
  std::vector<AdmmHistoryEntry> history;
};

/// min eps/2 ||D_h u||^2_W - h^d <f, u>  subject to |D u|_c <= phi_c, by the
/// splitting z = D u with radial projection of z. D is D_h unless `mode`
/// selects incremental quotients. Throws OracleError on nonconvergence.
AdmmResult vi_solve_admm(const NodalField& f, const ObstacleField& phi, double eps,
                         const AdmmParams& params, GradientMode mode = GradientMode::weak());

/// Columns A e_j of a matrix-free operator, row-major n x n.
std::vector<double> sample_operator(const LinearMap& op, std::size_t n);

/// Dense LU solve of the sampled operator; n <= 4096. Throws OracleError if singular.
std::vector<double> dense_solve(const LinearMap& op, std::size_t n, std::span<const double> rhs);
std::vector<double> dense_solve_matrix(std::span<const double> matrix, std::size_t n,
                                       std::span<const double> rhs);

struct RatioSample {
  double s = 0.0;
  double ratio = 0.0;
};

using VectorMap = std::function<std::vector<double>(std::span<const double>)>;
/// (base, direction) -> G_F(base) direction
using DerivativeMap = std::function<std::vector<double>(std::span<const double>, std::span<const double>)>;
using NormFn = std::function<double(std::span<const double>)>;

/// ||F(u + s h) - F(u) - G_F(u + s h)(s h)|| / (s ||h||) for each s.
std::vector<RatioSample> newton_ratio_probe(const VectorMap& F, const DerivativeMap& G,
                                            std::span<const double> base,
                                            std::span<const double> direction,
                                            std::span<const double> scales, const NormFn& numerator_norm,
                                            const NormFn& denominator_norm);

using Functional = std::function<double(std::span<const double>)>;

/// (j(f + s e) - j(f - s e)) / 2s
double fd_directional(const Functional& j, std::span<const double> f, std::span<const double> direction,
                      double s);

}  // namespace sandpile
