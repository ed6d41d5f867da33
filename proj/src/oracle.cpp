#include "sandpile/oracle.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <string>

#include "assembly.hpp"

namespace sandpile {

namespace {

// Cellwise maximum magnitude of a (d * cells) vector.
double cell_max_norm(const Eigen::VectorXd& v, int d) {
  double m = 0.0;
  const Eigen::Index cells = v.size() / d;
  for (Eigen::Index c = 0; c < cells; ++c) {
    const double s = d == 1 ? std::abs(v[c]) : std::hypot(v[2 * c], v[2 * c + 1]);
    m = std::max(m, s);
  }
  return m;
}

}  // namespace

AdmmResult vi_solve_admm(const NodalField& f, const ObstacleField& phi, double eps,
                         const AdmmParams& params, GradientMode mode) {
  const Grid& g = f.grid();
  require_same_grid(g, phi.grid(), "vi_solve_admm");
  if (!(eps > 0.0)) throw std::invalid_argument("vi_solve_admm: eps must be positive");
  const int d = g.dim();
  const double vol = g.cell_volume();
  const auto nodes = static_cast<Eigen::Index>(g.node_count());
  const auto rows = static_cast<Eigen::Index>(g.cell_count()) * d;

  const assembly::SparseMatrix D = assembly::gradient_matrix(g, mode);
  const assembly::SparseMatrix Dt = D.transpose();
  const assembly::SparseMatrix L = assembly::stiffness_matrix(g);
  const Eigen::Map<const Eigen::VectorXd> fv(f.values().data(), nodes);
  const Eigen::VectorXd load = vol * fv;

  double rho = params.rho > 0.0 ? params.rho : eps / g.h();
  Eigen::SimplicialLDLT<assembly::SparseMatrix> solver;
  auto refactor = [&] {
    assembly::SparseMatrix K = eps * L;
    K += (rho * vol) * assembly::SparseMatrix(Dt * D);
    solver.compute(K);
    if (solver.info() != Eigen::Success) throw OracleError("vi_solve_admm: factorization failed");
  };
  refactor();

  auto project = [&](Eigen::VectorXd& z) {
    for (Eigen::Index c = 0; c < rows / d; ++c) {
      const double bound = phi[static_cast<std::size_t>(c)];
      const double mag = d == 1 ? std::abs(z[c]) : std::hypot(z[2 * c], z[2 * c + 1]);
      if (mag > bound) {
        const double s = bound / mag;
        for (int i = 0; i < d; ++i) z[c * d + i] *= s;
      }
    }
  };

  Eigen::VectorXd u = Eigen::VectorXd::Zero(nodes);
  Eigen::VectorXd z = Eigen::VectorXd::Zero(rows);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(rows);  // scaled multiplier
  Eigen::VectorXd z_prev = z;
  Eigen::VectorXd Du = Eigen::VectorXd::Zero(rows);

  AdmmResult res{NodalField(g), 0, 0.0, 0.0, 0.0, rho, {}};
  const int check = std::max(1, params.check_every);
  for (int it = 1; it <= params.max_iter; ++it) {
    u = solver.solve(load + (rho * vol) * (Dt * (z - y)));
    Du = D * u;
    z_prev = z;
    z = Du + y;
    project(z);
    y += Du - z;

    if (it % check != 0 && it != params.max_iter) continue;
    const double primal = cell_max_norm(Du - z, d);
    const double dual = rho * cell_max_norm(z - z_prev, d);
    if (res.history.size() < 4000) res.history.push_back({it, primal, dual, rho});
    res.iterations = it;
    res.primal_residual = primal;
    res.dual_residual = dual;
    if (primal <= params.tol_primal && dual <= params.tol_dual) break;
    if (params.adaptive && it % (10 * check) == 0) {
      if (primal > 10.0 * dual) {
        rho *= 2.0;
        y *= 0.5;
        refactor();
      } else if (dual > 10.0 * primal) {
        rho *= 0.5;
        y *= 2.0;
        refactor();
      }
    }
  }
  res.rho = rho;
  if (!(res.primal_residual <= params.tol_primal && res.dual_residual <= params.tol_dual)) {
    throw OracleError("vi_solve_admm: no convergence in " + std::to_string(params.max_iter) +
                          " iterations (primal " + std::to_string(res.primal_residual) + ", dual " +
                          std::to_string(res.dual_residual) + ")",
                      res.history);
  }
  std::copy(u.data(), u.data() + nodes, res.u.values().begin());
  double worst = 0.0;
  for (Eigen::Index c = 0; c < rows / d; ++c) {
    const double mag = d == 1 ? std::abs(Du[c]) : std::hypot(Du[2 * c], Du[2 * c + 1]);
    worst = std::max(worst, mag - phi[static_cast<std::size_t>(c)]);
  }
  res.feasibility = std::max(0.0, worst);
  return res;
}

std::vector<double> sample_operator(const LinearMap& op, std::size_t n) {
  std::vector<double> A(n * n);
  std::vector<double> e(n, 0.0), col(n);
  for (std::size_t j = 0; j < n; ++j) {
    e[j] = 1.0;
    op(e, col);
    e[j] = 0.0;
    for (std::size_t i = 0; i < n; ++i) A[i * n + j] = col[i];
  }
  return A;
}

std::vector<double> dense_solve_matrix(std::span<const double> matrix, std::size_t n,
                                       std::span<const double> rhs) {
  if (n > 4096) throw OracleError("dense_solve: operator too large for a dense oracle");
  const auto N = static_cast<Eigen::Index>(n);
  const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> A(
      matrix.data(), N, N);
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
  if (!lu.isInvertible()) throw OracleError("dense_solve: sampled operator is singular");
  const Eigen::Map<const Eigen::VectorXd> b(rhs.data(), N);
  const Eigen::VectorXd x = lu.solve(b);
  return {x.data(), x.data() + N};
}

std::vector<double> dense_solve(const LinearMap& op, std::size_t n, std::span<const double> rhs) {
  if (n > 4096) throw OracleError("dense_solve: operator too large for a dense oracle");
  const std::vector<double> A = sample_operator(op, n);
  return dense_solve_matrix(A, n, rhs);
}

std::vector<RatioSample> newton_ratio_probe(const VectorMap& F, const DerivativeMap& G,
                                            std::span<const double> base,
                                            std::span<const double> direction,
                                            std::span<const double> scales, const NormFn& numerator_norm,
                                            const NormFn& denominator_norm) {
  const std::vector<double> f0 = F(base);
  const double hnorm = denominator_norm(direction);
  std::vector<RatioSample> out;
  std::vector<double> shifted(base.size()), step(base.size());
  for (double s : scales) {
    for (std::size_t i = 0; i < base.size(); ++i) {
      step[i] = s * direction[i];
      shifted[i] = base[i] + step[i];
    }
    const std::vector<double> f1 = F(shifted);
    const std::vector<double> gs = G(shifted, step);
    std::vector<double> rem(f1.size());
    for (std::size_t i = 0; i < rem.size(); ++i) rem[i] = f1[i] - f0[i] - gs[i];
    out.push_back({s, hnorm > 0.0 ? numerator_norm(rem) / (s * hnorm) : 0.0});
  }
  return out;
}

double fd_directional(const Functional& j, std::span<const double> f, std::span<const double> direction,
                      double s) {
  std::vector<double> plus(f.begin(), f.end()), minus(f.begin(), f.end());
  for (std::size_t i = 0; i < f.size(); ++i) {
    plus[i] += s * direction[i];
    minus[i] -= s * direction[i];
  }
  return (j(plus) - j(minus)) / (2.0 * s);
}

}  // namespace sandpile
