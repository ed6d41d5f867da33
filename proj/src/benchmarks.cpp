#include "sandpile/benchmarks.hpp"

#include <fstream>
#include <stdexcept>

#include "sandpile/field_io.hpp"

namespace sandpile {

namespace {

Config base_config(int dim) {
  if (dim != 1 && dim != 2) throw std::invalid_argument("benchmarks exist for d = 1 and d = 2");
  Config cfg;
  cfg.source_name = "<benchmark>";
  cfg.problem.dim = dim;
  cfg.problem.n = dim == 1 ? 63 : 31;
  cfg.problem.source = FieldSpec::constant(dim == 1 ? 5.0 : 8.0);
  cfg.problem.obstacle = FieldSpec::constant(1.0);
  cfg.solver.eps = 0.05;
  cfg.schedule = Schedule::standard();
  return cfg;
}

Benchmark finish(std::string name, Config cfg) {
  NodalField f = problem_source(cfg);
  ObstacleField phi = make_obstacle(cfg.problem.obstacle, cfg.grid());
  return {std::move(name), std::move(cfg), std::move(f), std::move(phi)};
}

}  // namespace

Benchmark standard_benchmark(int dim, GradientMode mode) {
  Config cfg = base_config(dim);
  cfg.solver.mode = mode;
  std::string name = dim == 1 ? "bench1d" : "bench2d";
  if (mode.kind == GradientMode::Kind::incremental) name += "-incremental";
  return finish(std::move(name), std::move(cfg));
}

Benchmark supported_benchmark(int dim) {
  Config cfg = base_config(dim);
  cfg.problem.support = FieldSpec::parse("bump 0.1 0.45", ".");
  return finish(dim == 1 ? "supported1d" : "supported2d", std::move(cfg));
}

TrackingBenchmark tracking_benchmark() {
  Config cfg = base_config(1);
  cfg.problem.source = FieldSpec::constant(0.0);
  cfg.solver.gamma = 1e4;
  cfg.schedule.reset();
  cfg.control.lambda = 1e-6;
  cfg.control.target = FieldSpec::parse("@target.field", ".");
  cfg.control.max_outer = 200;
  cfg.control.tol_grad = 1e-9;
  const Grid g = cfg.grid();
  NodalField source = make_nodal_field(FieldSpec::parse("bump 20 0.25", "."), g);
  ObstacleField phi = make_obstacle(cfg.problem.obstacle, g);
  SolverParams sp = cfg.solver;
  NodalField target = path_follow(source, phi, sp, Schedule::standard()).u;
  return {std::move(cfg), std::move(source), std::move(target), std::move(phi)};
}

const std::vector<std::string>& problem_names() {
  static const std::vector<std::string> names{"bench1d", "bench2d", "bench1d-incremental",
                                              "bench2d-incremental", "supported1d", "supported2d",
                                              "tracking"};
  return names;
}

void make_problem(const std::string& name, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  Config cfg;
  if (name == "tracking") {
    TrackingBenchmark t = tracking_benchmark();
    write_field(dir / "target.field", t.target);
    cfg = t.config;
    cfg.control.target = FieldSpec::parse("@target.field", ".");
    cfg.control.target->path = "target.field";
  } else if (name == "bench1d" || name == "bench2d") {
    cfg = standard_benchmark(name == "bench1d" ? 1 : 2).config;
  } else if (name == "bench1d-incremental" || name == "bench2d-incremental") {
    cfg = standard_benchmark(name == "bench1d-incremental" ? 1 : 2, GradientMode::incremental_cells(1)).config;
  } else if (name == "supported1d" || name == "supported2d") {
    cfg = supported_benchmark(name == "supported1d" ? 1 : 2).config;
  } else {
    throw std::invalid_argument("unknown problem '" + name + "'");
  }
  std::ofstream os(dir / "config.ini");
  if (!os) throw std::runtime_error("cannot write " + (dir / "config.ini").string());
  os << "# " << name << "\n" << format_config(cfg);
}

}  // namespace sandpile
