#include "sandpile/state_solver.hpp"

#include <chrono>
#include <cmath>

#include "sandpile/linalg.hpp"
#include "sandpile/norms.hpp"
#include "sandpile/penalty.hpp"

namespace sandpile {

void SolverParams::validate() const {
  auto bad = [](const std::string& msg) { throw std::invalid_argument("solver: " + msg); };
  if (!(eps > 0.0)) bad("eps must be positive");
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) bad("gamma must be finite and non-negative");
  if (!(tol_res > 0.0)) bad("tol_res must be positive");
  if (max_iter < 1) bad("max_iter must be at least 1");
  if (!(tol_lin > 0.0)) bad("tol_lin must be positive");
  if (max_lin_iter < 1) bad("max_lin_iter must be at least 1");
  if (!(armijo_c1 > 0.0 && armijo_c1 < 1.0)) bad("armijo_c1 must lie in (0, 1)");
  if (!(armijo_backtrack > 0.0 && armijo_backtrack < 1.0)) bad("armijo_backtrack must lie in (0, 1)");
  if (max_backtracks < 0) bad("max_backtracks must be non-negative");
  if (mode.mu_cells < 1) bad("mu must be at least one cell");
}

NodalField residual(const NodalField& u, const NodalField& f, const ObstacleField& phi,
                    const SolverParams& params) {
  require_same_grid(u.grid(), f.grid(), "residual");
  NodalField r = stiffness_apply(params.eps, u);
  if (params.gamma != 0.0) {
    const NodalField p = penalty_apply(u, phi, params.mode);
    axpy(params.gamma, p.values(), r.values());
  }
  axpy(-u.grid().cell_volume(), f.values(), r.values());
  return r;
}

double merit(const NodalField& u, const NodalField& f, const ObstacleField& phi,
             const SolverParams& params) {
  const double h1 = h1_seminorm(u);
  double m = 0.5 * params.eps * h1 * h1 - u.grid().cell_volume() * dot(f.values(), u.values());
  if (params.gamma != 0.0) m += params.gamma * penalty_energy(u, phi, params.mode);
  return m;
}

NewtonStepInfo newton_step_detailed(const NodalField& u, const NodalField& residual_u,
                                    const ObstacleField& phi, const SolverParams& params) {
  const NewtonSystem system(u, phi, params.eps, params.gamma, params.mode, params.preconditioner);
  NodalField rhs = residual_u;
  rhs *= -1.0;
  NewtonStepInfo info{NodalField(u.grid()), {}, system.linearization().active_cells()};
  info.step = system.solve(rhs, params.tol_lin, params.max_lin_iter, &info.linear);
  return info;
}

NodalField newton_step(const NodalField& u, const NodalField& f, const ObstacleField& phi,
                       const SolverParams& params) {
  params.validate();
  return newton_step_detailed(u, residual(u, f, phi, params), phi, params).step;
}

namespace {

void finalize(RunReport& rep, const std::vector<NodalField>& iterates, const NodalField& u,
              const ObstacleField& phi, std::chrono::steady_clock::time_point start) {
  rep.iterations = static_cast<int>(rep.step_h1.size());
  rep.final_residual_dual = rep.residual_dual.empty() ? 0.0 : rep.residual_dual.back();
  rep.final_feasibility = rep.feasibility.empty() ? 0.0 : rep.feasibility.back();
  rep.final_feasibility_weak = feasibility_violation(u, phi, GradientMode::weak());
  rep.contraction_ratios.clear();
  std::vector<double> err;
  err.reserve(iterates.size());
  for (const NodalField& it : iterates) err.push_back(h1_seminorm(it - u));
  for (std::size_t k = 0; k + 1 < err.size(); ++k) {
    rep.contraction_ratios.push_back(err[k] > 0.0 ? err[k + 1] / err[k] : 0.0);
  }
  rep.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

StateSolution solve_state(const NodalField& f, const ObstacleField& phi, const SolverParams& params,
                          const std::optional<NodalField>& u_init) {
  const auto start = std::chrono::steady_clock::now();
  params.validate();
  require_same_grid(f.grid(), phi.grid(), "solve_state");
  NodalField u = u_init.value_or(NodalField(f.grid()));
  require_same_grid(u.grid(), f.grid(), "solve_state (initial guess)");

  RunReport rep;
  rep.grid = f.grid();
  rep.params = params;
  std::vector<NodalField> iterates;

  for (int k = 0;; ++k) {
    const NodalField E = residual(u, f, phi, params);
    const double rdual = dual_norm(E);
    const double m0 = merit(u, f, phi, params);
    rep.residual_l2.push_back(l2_norm(E));
    rep.residual_dual.push_back(rdual);
    rep.feasibility.push_back(feasibility_violation(u, phi, params.mode));
    rep.merit.push_back(m0);
    iterates.push_back(u);

    if (rdual <= params.tol_res) {
      rep.converged = true;
      break;
    }
    if (k == params.max_iter) {
      rep.failure = "no convergence within " + std::to_string(params.max_iter) + " Newton steps";
      finalize(rep, iterates, u, phi, start);
      throw SolverError("solve_state: " + rep.failure + " (residual " + std::to_string(rdual) + ")",
                        rep);
    }

    NewtonStepInfo step{NodalField(u.grid()), {}, 0};
    try {
      step = newton_step_detailed(u, E, phi, params);
    } catch (const LinearSolveError& e) {
      rep.failure = e.what();
      finalize(rep, iterates, u, phi, start);
      throw SolverError(std::string("solve_state: ") + e.what(), rep);
    }
    const NodalField& v = step.step;
    const double vh1 = h1_seminorm(v);
    rep.step_h1.push_back(vh1);
    rep.step_bound_ratio.push_back(params.eps * vh1 / rdual);
    rep.linear_iterations.push_back(step.linear.iterations);
    rep.active_cells.push_back(step.active_cells);

    double t = 1.0;
    int backtracks = 0;
    if (params.damping == Damping::armijo) {
      const double slope = dot(E.values(), v.values());
      // Below this the merit change is not resolvable in double precision.
      const bool roundoff = std::abs(slope) <= 1e-13 * (1.0 + std::abs(m0));
      bool accepted = roundoff;
      while (!accepted) {
        NodalField trial = u;
        axpy(t, v.values(), trial.values());
        if (merit(trial, f, phi, params) <= m0 + params.armijo_c1 * t * slope) {
          accepted = true;
          break;
        }
        if (backtracks == params.max_backtracks) break;
        t *= params.armijo_backtrack;
        ++backtracks;
      }
      if (!accepted) {
        rep.step_length.push_back(0.0);
        rep.backtracks.push_back(backtracks);
        rep.failure = "Armijo line search failed after " + std::to_string(backtracks) + " backtracks";
        finalize(rep, iterates, u, phi, start);
        throw SolverError("solve_state: " + rep.failure, rep);
      }
    }
    rep.step_length.push_back(t);
    rep.backtracks.push_back(backtracks);
    axpy(t, v.values(), u.values());
  }

  finalize(rep, iterates, u, phi, start);
  return {std::move(u), std::move(rep)};
}

Schedule Schedule::standard() { return {{1.0, 10.0, 100.0, 1e3, 1e4}, {}}; }

void Schedule::validate() const {
  if (gamma.empty()) throw std::invalid_argument("schedule: gamma list is empty");
  for (std::size_t i = 0; i < gamma.size(); ++i) {
    if (!(gamma[i] >= 0.0)) throw std::invalid_argument("schedule: gamma must be non-negative");
    if (i > 0 && gamma[i] < gamma[i - 1]) throw std::invalid_argument("schedule: gamma must be ascending");
  }
  if (!mu_cells.empty()) {
    if (mu_cells.size() != gamma.size()) {
      throw std::invalid_argument("schedule: mu list must have one entry per gamma");
    }
    for (std::size_t i = 0; i < mu_cells.size(); ++i) {
      if (mu_cells[i] < 1) throw std::invalid_argument("schedule: mu must be at least one cell");
      if (i > 0 && mu_cells[i] > mu_cells[i - 1]) {
        throw std::invalid_argument("schedule: mu must be non-increasing");
      }
    }
  }
}

PathSolution path_follow(const NodalField& f, const ObstacleField& phi, const SolverParams& base,
                         const Schedule& schedule, const std::optional<NodalField>& u_init) {
  schedule.validate();
  if (!schedule.mu_cells.empty() && base.mode.kind != GradientMode::Kind::incremental) {
    throw std::invalid_argument("schedule: a mu list requires the incremental gradient mode");
  }
  PathSolution out{u_init.value_or(NodalField(f.grid())), {}, {}};
  for (std::size_t s = 0; s < schedule.gamma.size(); ++s) {
    SolverParams p = base;
    p.gamma = schedule.gamma[s];
    if (!schedule.mu_cells.empty()) p.mode = GradientMode::incremental_cells(schedule.mu_cells[s]);
    try {
      StateSolution stage = solve_state(f, phi, p, out.u);
      out.u = std::move(stage.u);
      out.stage_u.push_back(out.u);
      out.stages.push_back(std::move(stage.report));
    } catch (const SolverError& e) {
      throw StageError("path_follow stage " + std::to_string(s) + " (gamma = " +
                           std::to_string(p.gamma) + "): " + e.what(),
                       static_cast<int>(s), e.report(), out.stages);
    }
  }
  return out;
}

}  // namespace sandpile
