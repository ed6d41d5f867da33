#include "cli.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>

#include "sandpile/benchmarks.hpp"
#include "sandpile/config.hpp"
#include "sandpile/control.hpp"
#include "sandpile/field_io.hpp"
#include "sandpile/linalg.hpp"
#include "sandpile/oracle.hpp"
#include "sandpile/penalty.hpp"
#include "sandpile/report_json.hpp"
#include "sandpile/state_solver.hpp"
#include "sandpile/verify.hpp"

namespace fs = std::filesystem;

namespace sandpile::cli {

namespace {

struct Options {
  std::string config;
  std::string out = ".";
  int threads = 0;
  std::optional<std::uint64_t> seed;
  std::string selector = "all";
  std::string problem;
};

/// Relative output names land in --out; absolute ones are kept.
fs::path output_path(const Options& o, const std::string& name) {
  const fs::path p(name);
  return p.is_absolute() ? p : fs::path(o.out) / p;
}

void write_plot(const fs::path& path, const NodalField& u, const ObstacleField& phi, GradientMode mode) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  const Grid& g = u.grid();
  const std::vector<double> uc = cell_center_values(u);
  const CellVectorField du = apply_gradient(u, mode);
  os << (g.dim() == 1 ? "x" : "x,y") << ",u,grad_norm,phi\n";
  char buf[160];
  for (std::size_t c = 0; c < g.cell_count(); ++c) {
    const auto x = cell_center(g, c);
    if (g.dim() == 1) {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", x[0], uc[c], du.magnitude(c), phi[c]);
    } else {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n", x[0], x[1], uc[c], du.magnitude(c), phi[c]);
    }
    os << buf;
  }
}

int cmd_solve(const Options& o, std::ostream& out, std::ostream& err) {
  const Config cfg = load_config(o.config);
  const Grid g = cfg.grid();
  const NodalField f = problem_source(cfg);
  const ObstacleField phi = make_obstacle(cfg.problem.obstacle, g);
  fs::create_directories(o.out);
  const fs::path report = output_path(o, cfg.output.report);

  std::vector<RunReport> stages;
  NodalField u(g);
  try {
    if (cfg.schedule) {
      PathSolution p = path_follow(f, phi, cfg.solver, *cfg.schedule);
      u = std::move(p.u);
      stages = std::move(p.stages);
    } else {
      StateSolution s = solve_state(f, phi, cfg.solver);
      u = std::move(s.u);
      stages.push_back(std::move(s.report));
    }
  } catch (const StageError& e) {
    stages = e.completed();
    stages.push_back(e.report());
    write_json(report, solve_document(cfg, stages, "failed", e.what()));
    err << "sandpile: " << e.what() << "\n";
    return kSolverFailure;
  } catch (const SolverError& e) {
    stages.push_back(e.report());
    write_json(report, solve_document(cfg, stages, "failed", e.what()));
    err << "sandpile: " << e.what() << "\n";
    return kSolverFailure;
  }

  write_field(output_path(o, cfg.output.u_field), u);
  write_json(report, solve_document(cfg, stages, "converged"));
  if (!cfg.output.plot.empty()) write_plot(output_path(o, cfg.output.plot), u, phi, cfg.solver.mode);

  const RunReport& last = stages.back();
  char buf[200];
  std::snprintf(buf, sizeof buf, "converged: %zu stage(s), %d Newton steps in the last, residual %.3e, feasibility %.3e\n",
                stages.size(), last.iterations, last.final_residual_dual, last.final_feasibility);
  out << buf;
  return kOk;
}

int cmd_optimize(const Options& o, std::ostream& out, std::ostream& err) {
  const Config cfg = load_config(o.config);
  const Grid g = cfg.grid();
  const ControlParams cp = make_control_params(cfg);
  const ObstacleField phi = make_obstacle(cfg.problem.obstacle, g);
  const NodalField f_init = make_nodal_field(cfg.control.f_init, g);
  fs::create_directories(o.out);

  std::optional<OptimizeResult> opt;
  try {
    opt = optimize(f_init, phi, cp, cfg.solver);
  } catch (const SolverError& e) {
    err << "sandpile: " << e.what() << "\n";
    return kSolverFailure;
  }
  const OptimizeResult& res = *opt;
  write_field(output_path(o, cfg.output.f_field), res.f);
  write_field(output_path(o, cfg.output.u_field), res.u);
  write_json(output_path(o, cfg.output.trace), trace_document(cfg, res));

  char buf[200];
  std::snprintf(buf, sizeof buf, "%s: %zu outer steps, %d state solves, j %.6e -> %.6e\n",
                to_string(res.status).c_str(), res.trace.size() - 1, res.state_solves, res.trace.front().j,
                res.trace.back().j);
  out << buf;
  return kOk;
}

int cmd_verify(const Options& o, std::ostream& out) {
  std::optional<Config> cfg;
  if (!o.config.empty()) cfg = load_config(o.config);
  VerifyOptions vo;
  vo.seed = o.seed ? *o.seed : (cfg ? cfg->verify.seed : 0);
  // Reject the selector before any work runs.
  if (o.selector != "all") {
    const auto& names = suite_names();
    if (std::find(names.begin(), names.end(), o.selector) == names.end()) {
      throw std::invalid_argument("unknown suite '" + o.selector + "'");
    }
  }
  const std::vector<Check> checks = run_suite(o.selector, vo);
  for (const Check& c : checks) {
    const char* tag = !c.passed ? (c.asserted ? "FAIL" : "note") : (c.asserted ? "ok  " : "rec ");
    char buf[256];
    std::snprintf(buf, sizeof buf, "%s %-12s %-44s %.6e %s %.3e\n", tag, c.suite.c_str(), c.name.c_str(), c.measured,
                  c.relation.c_str(), c.threshold);
    out << buf;
  }
  fs::create_directories(o.out);
  write_json(fs::path(o.out) / "verdict.json", verdict_document(checks, o.selector, vo.seed, cfg ? &*cfg : nullptr));
  const bool ok = all_asserted_pass(checks);
  out << (ok ? "all asserted checks passed\n" : "some asserted checks failed\n");
  return ok ? kOk : kCheckFailure;
}

int cmd_make_problem(const Options& o, std::ostream& out) {
  make_problem(o.problem, o.out);
  out << "wrote " << (fs::path(o.out) / "config.ini").string() << "\n";
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Regularized sandpile solver and source control", "sandpile"};
  app.require_subcommand(1);
  Options o;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--threads", o.threads, "OpenMP threads (0 = runtime default)")->check(CLI::NonNegativeNumber);
  };
  CLI::App* solve = app.add_subcommand("solve", "solve the state equation for a config");
  solve->add_option("--config", o.config, "config file")->required();
  add_common(solve);
  CLI::App* opt = app.add_subcommand("optimize", "minimize the tracking objective for a config");
  opt->add_option("--config", o.config, "config file")->required();
  add_common(opt);
  CLI::App* verify = app.add_subcommand("verify", "run the property suites");
  verify->add_option("suite", o.selector, "all|penalty|state|sensitivity|control|oracle");
  verify->add_option("--config", o.config, "config file supplying [verify] seed");
  verify->add_option("--seed", o.seed, "random seed, overrides the config");
  add_common(verify);
  CLI::App* make = app.add_subcommand("make-problem", "write a benchmark config");
  make->add_option("name", o.problem, "problem name")->required();
  add_common(make);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "sandpile: " << e.what() << "\n";
    return kUsage;
  }

  if (o.threads > 0) set_num_threads(o.threads);
  try {
    if (*solve) return cmd_solve(o, out, err);
    if (*opt) return cmd_optimize(o, out, err);
    if (*verify) return cmd_verify(o, out);
    if (*make) return cmd_make_problem(o, out);
  } catch (const ConfigError& e) {
    err << "sandpile: " << e.what() << "\n";
    return kUsage;
  } catch (const FieldFormatError& e) {
    err << "sandpile: " << e.what() << "\n";
    return kUsage;
  } catch (const std::invalid_argument& e) {
    err << "sandpile: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "sandpile: " << e.what() << "\n";
    return kSolverFailure;
  }
  return kUsage;
}

}  // namespace sandpile::cli
