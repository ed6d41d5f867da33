#include "sandpile/linear_solver.hpp"

#include <Eigen/SparseCholesky>
#include <cmath>
#include <cstdio>
#include <map>
#include <mutex>
#include <utility>

#include "assembly.hpp"
#include "sandpile/linalg.hpp"

namespace sandpile {

namespace {

constexpr double kStagnationSlack = 1e4;

std::string format_sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

}  // namespace

CgReport pcg(const LinearMap& op, const LinearMap& precond, std::span<const double> b,
             std::span<double> x, double rel_tol, int max_iter) {
  const std::size_t n = b.size();
  CgReport rep;
  const double bnorm = std::sqrt(sum_squares(b));
  if (bnorm == 0.0) {
    std::fill(x.begin(), x.end(), 0.0);
    rep.converged = true;
    return rep;
  }
  std::vector<double> r(n), z(n), p(n), q(n);
  const double target = rel_tol * bnorm;
  double round_start = bnorm;

  // Outer loop restarts from the true residual whenever the recursively
  // updated one has drifted below the target while the true one has not.
  while (true) {
    op(x, q);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - q[i];
    double rnorm = std::sqrt(sum_squares(r));
    rep.relative_residual = rnorm / bnorm;
    if (rnorm <= target) {
      rep.converged = true;
      return rep;
    }
    if (rep.iterations >= max_iter) return rep;
    if (rep.iterations > 0 && rnorm > 0.5 * round_start) {
      rep.stagnated = true;
      return rep;
    }
    round_start = rnorm;

    const int started = rep.iterations;
    precond(r, z);
    std::copy(z.begin(), z.end(), p.begin());
    double rz = dot(r, z);
    while (rep.iterations < max_iter) {
      op(p, q);
      const double pq = dot(p, q);
      if (!(pq > 0.0)) break;  // loss of positive definiteness under roundoff
      const double alpha = rz / pq;
      axpy(alpha, p, x);
      axpy(-alpha, q, r);
      ++rep.iterations;
      rnorm = std::sqrt(sum_squares(r));
      if (rnorm <= target) break;
      precond(r, z);
      const double rz_next = dot(r, z);
      xpby(z, rz_next / rz, p);
      rz = rz_next;
    }
    if (rep.iterations == started) return rep;
  }
}

// --- SparseFactor -------------------------------------------------------

struct SparseFactor::Impl {
  Eigen::SimplicialLDLT<assembly::SparseMatrix> ldlt;
  std::size_t n = 0;
};

SparseFactor::SparseFactor(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}
SparseFactor::SparseFactor(SparseFactor&&) noexcept = default;
SparseFactor& SparseFactor::operator=(SparseFactor&&) noexcept = default;
SparseFactor::~SparseFactor() = default;

namespace {

std::unique_ptr<SparseFactor::Impl> factorize(const assembly::SparseMatrix& A) {
  auto impl = std::make_unique<SparseFactor::Impl>();
  impl->n = static_cast<std::size_t>(A.rows());
  impl->ldlt.compute(A);
  if (impl->ldlt.info() != Eigen::Success) {
    throw std::runtime_error("sparse LDL^T factorization failed (operator not positive definite?)");
  }
  return impl;
}

}  // namespace

std::size_t SparseFactor::size() const { return impl_->n; }

void SparseFactor::solve(std::span<const double> rhs, std::span<double> out) const {
  const Eigen::Map<const Eigen::VectorXd> b(rhs.data(), static_cast<Eigen::Index>(rhs.size()));
  Eigen::Map<Eigen::VectorXd> x(out.data(), static_cast<Eigen::Index>(out.size()));
  x = impl_->ldlt.solve(b);
}

std::vector<double> SparseFactor::solve(std::span<const double> rhs) const {
  std::vector<double> out(rhs.size());
  solve(rhs, out);
  return out;
}

SparseFactor SparseFactor::newton_system(const Grid& g, double eps, double gamma,
                                         const PenaltyLinearization* lin) {
  return SparseFactor(factorize(assembly::newton_matrix(g, eps, gamma, lin)));
}

SparseFactor SparseFactor::stiffness(const Grid& g) {
  return SparseFactor(factorize(assembly::stiffness_matrix(g)));
}

SparseFactor SparseFactor::admm_system(const Grid& g, double eps, double rho, GradientMode mode) {
  return SparseFactor(factorize(assembly::admm_matrix(g, eps, rho, mode)));
}

std::shared_ptr<const SparseFactor> stiffness_factor(const Grid& g) {
  static std::mutex mutex;
  static std::map<std::pair<int, int>, std::shared_ptr<const SparseFactor>> cache;
  const std::lock_guard<std::mutex> lock(mutex);
  auto& slot = cache[{g.dim(), g.n()}];
  if (!slot) slot = std::make_shared<const SparseFactor>(SparseFactor::stiffness(g));
  return slot;
}

// --- NewtonSystem -------------------------------------------------------

NewtonSystem::NewtonSystem(const NodalField& u, const ObstacleField& phi, double eps, double gamma,
                           GradientMode mode, Preconditioner pc)
    : grid_(u.grid()), eps_(eps), gamma_(gamma), lin_(u, phi, mode), pc_(pc) {
  if (pc_ == Preconditioner::cholesky) {
    factor_ = std::make_unique<SparseFactor>(SparseFactor::newton_system(grid_, eps_, gamma_, &lin_));
  } else {
    const assembly::SparseMatrix K = assembly::newton_matrix(grid_, eps_, gamma_, &lin_);
    diagonal_.resize(grid_.node_count());
    for (std::size_t i = 0; i < diagonal_.size(); ++i) {
      diagonal_[i] = K.coeff(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i));
    }
  }
}

NewtonSystem::~NewtonSystem() = default;

void NewtonSystem::apply(std::span<const double> v, std::span<double> out) const {
  const NodalField vf(grid_, std::vector<double>(v.begin(), v.end()));
  NodalField r = stiffness_apply(eps_, vf);
  if (gamma_ != 0.0 && lin_.active_cells() > 0) {
    NodalField pen = lin_.apply(vf);
    axpy(gamma_, pen.values(), r.values());
  }
  std::copy(r.values().begin(), r.values().end(), out.begin());
}

NodalField NewtonSystem::apply(const NodalField& v) const {
  require_same_grid(grid_, v.grid(), "NewtonSystem::apply");
  NodalField out(grid_);
  apply(v.values(), out.values());
  return out;
}

NodalField NewtonSystem::solve(const NodalField& rhs, double tol, int max_iter, CgReport* report) const {
  require_same_grid(grid_, rhs.grid(), "NewtonSystem::solve");
  NodalField x(grid_);
  const LinearMap op = [this](std::span<const double> in, std::span<double> out) { apply(in, out); };
  LinearMap precond;
  if (factor_) {
    precond = [this](std::span<const double> in, std::span<double> out) { factor_->solve(in, out); };
  } else {
    precond = [this](std::span<const double> in, std::span<double> out) {
      for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] / diagonal_[i];
    };
  }
  const CgReport rep = pcg(op, precond, rhs.values(), x.values(), tol, max_iter);
  if (report != nullptr) *report = rep;
  if (!rep.converged && !(rep.stagnated && rep.relative_residual <= kStagnationSlack * tol)) {
    throw LinearSolveError("inner linear solve stalled at relative residual " +
                               format_sci(rep.relative_residual) + " after " +
                               std::to_string(rep.iterations) + " iterations",
                           rep);
  }
  return x;
}

}  // namespace sandpile
