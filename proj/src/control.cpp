#include "sandpile/control.hpp"

#include <cmath>
#include <optional>
#include <stdexcept>

#include "sandpile/linalg.hpp"
#include "sandpile/norms.hpp"
#include "sandpile/sensitivity.hpp"

namespace sandpile {

void ControlParams::validate() const {
  auto bad = [](const std::string& msg) { throw std::invalid_argument("control: " + msg); };
  if (!(lambda >= 0.0)) bad("lambda must be non-negative");
  if (!(step_init > 0.0)) bad("step_init must be positive");
  if (!(armijo_c1 > 0.0 && armijo_c1 < 1.0)) bad("armijo_c1 must lie in (0, 1)");
  if (!(armijo_backtrack > 0.0 && armijo_backtrack < 1.0)) bad("armijo_backtrack must lie in (0, 1)");
  if (max_backtracks < 0) bad("max_backtracks must be non-negative");
  if (max_outer < 0) bad("max_outer must be non-negative");
  if (!(tol_grad > 0.0)) bad("tol_grad must be positive");
}

ReducedObjective::ReducedObjective(ObstacleField phi, ControlParams cparams, SolverParams sparams)
    : phi_(std::move(phi)), cparams_(std::move(cparams)), sparams_(sparams) {
  cparams_.validate();
  sparams_.validate();
  require_same_grid(phi_.grid(), cparams_.target.grid(), "ReducedObjective");
}

ReducedObjective::Evaluation ReducedObjective::evaluate(const NodalField& f, const NodalField* warm_start) {
  require_same_grid(f.grid(), phi_.grid(), "ReducedObjective::evaluate");
  ++state_solves_;
  NodalField u(f.grid());
  try {
    std::optional<NodalField> init;
    if (warm_start != nullptr) init = *warm_start;
    StateSolution s = solve_state(f, phi_, sparams_, init);
    u = std::move(s.u);
    // A warm start already inside tol_res would leave u untouched and hide
    // changes of j below that level from the line search.
    if (warm_start != nullptr && s.report.iterations == 0) u += newton_step(u, f, phi_, sparams_);
  } catch (const SolverError&) {
    if (warm_start == nullptr && sparams_.gamma <= 1.0) throw;
    // Continuation from zero up to the working gamma.
    ++fallbacks_;
    Schedule schedule;
    for (double g : Schedule::standard().gamma) {
      if (g < sparams_.gamma) schedule.gamma.push_back(g);
    }
    schedule.gamma.push_back(sparams_.gamma);
    u = path_follow(f, phi_, sparams_, schedule).u;
  }
  const double mis = l2_norm(u - cparams_.target);
  const double fn = l2_norm(f);
  return {0.5 * mis * mis + cparams_.lambda * fn * fn, std::move(u)};
}

NodalField ReducedObjective::gradient(const NodalField& f, const NodalField& u) const {
  NodalField g = solve_adjoint(u, u - cparams_.target, phi_, sparams_);
  axpy(2.0 * cparams_.lambda, f.values(), g.values());
  return g;
}

double objective(const NodalField& f, const ObstacleField& phi, const ControlParams& cparams,
                 const SolverParams& sparams) {
  ReducedObjective j(phi, cparams, sparams);
  return j.evaluate(f).j;
}

NodalField reduced_gradient(const NodalField& f, const ObstacleField& phi, const ControlParams& cparams,
                            const SolverParams& sparams) {
  ReducedObjective j(phi, cparams, sparams);
  const auto e = j.evaluate(f);
  return j.gradient(f, e.u);
}

std::string to_string(OptimizeStatus s) {
  switch (s) {
    case OptimizeStatus::converged: return "converged";
    case OptimizeStatus::max_outer: return "max_outer";
    case OptimizeStatus::line_search_failed: return "line_search_failed";
  }
  return "unknown";
}

OptimizeResult optimize(const NodalField& f_init, const ObstacleField& phi, const ControlParams& cparams,
                        const SolverParams& sparams) {
  ReducedObjective red(phi, cparams, sparams);
  NodalField f = f_init;
  auto cur = red.evaluate(f);
  NodalField g = red.gradient(f, cur.u);
  double gnorm = l2_norm(g);

  OptimizeResult res{f, cur.u, {}, OptimizeStatus::max_outer, 0};
  res.trace.push_back({cur.j, gnorm, 0.0, 0});
  double trial = cparams.step_init;

  for (int k = 0; k < cparams.max_outer; ++k) {
    if (gnorm <= cparams.tol_grad) {
      res.status = OptimizeStatus::converged;
      break;
    }
    double t = trial;
    int backtracks = 0;
    bool accepted = false;
    NodalField f_new = f;
    ReducedObjective::Evaluation next{0.0, NodalField(f.grid())};
    if (cparams.descent == DescentRule::fixed) {
      t = cparams.step_init;
      f_new = f;
      axpy(-t, g.values(), f_new.values());
      next = red.evaluate(f_new, &cur.u);
      accepted = true;
    } else {
      const double slope = gnorm * gnorm;
      while (true) {
        f_new = f;
        axpy(-t, g.values(), f_new.values());
        next = red.evaluate(f_new, &cur.u);
        if (next.j < cur.j && next.j <= cur.j - cparams.armijo_c1 * t * slope) {
          accepted = true;
          break;
        }
        if (backtracks == cparams.max_backtracks) break;
        t *= cparams.armijo_backtrack;
        ++backtracks;
      }
    }
    if (!accepted) {
      res.status = OptimizeStatus::line_search_failed;
      break;
    }

    NodalField g_new = red.gradient(f_new, next.u);
    if (cparams.bb_step && cparams.descent == DescentRule::armijo) {
      const NodalField s = f_new - f;
      const NodalField y = g_new - g;
      const double sy = l2_inner(s, y);
      trial = sy > 0.0 ? l2_inner(s, s) / sy : cparams.step_init;
    }
    f = std::move(f_new);
    g = std::move(g_new);
    cur = std::move(next);
    gnorm = l2_norm(g);
    res.trace.push_back({cur.j, gnorm, t, backtracks});
    if (k + 1 == cparams.max_outer && gnorm <= cparams.tol_grad) res.status = OptimizeStatus::converged;
  }
  res.f = std::move(f);
  res.u = std::move(cur.u);
  res.state_solves = red.state_solves();
  return res;
}

}  // namespace sandpile
