#include "sandpile/report_json.hpp"

#include <fstream>

namespace sandpile {

using nlohmann::json;

json grid_json(const Grid& g) {
  return {{"dim", g.dim()}, {"n", g.n()}, {"h", g.h()}, {"nodes", g.node_count()}, {"cells", g.cell_count()}};
}

json params_json(const SolverParams& p) {
  return {{"eps", p.eps},
          {"gamma", p.gamma},
          {"mode", p.mode.kind == GradientMode::Kind::weak ? "weak" : "incremental"},
          {"mu_cells", p.mode.mu_cells},
          {"tol_res", p.tol_res},
          {"max_iter", p.max_iter},
          {"tol_lin", p.tol_lin},
          {"max_lin_iter", p.max_lin_iter},
          {"damping", p.damping == Damping::armijo ? "armijo" : "off"},
          {"armijo_c1", p.armijo_c1},
          {"armijo_backtrack", p.armijo_backtrack},
          {"max_backtracks", p.max_backtracks},
          {"preconditioner", p.preconditioner == Preconditioner::cholesky ? "cholesky" : "jacobi"}};
}

json config_json(const Config& cfg) {
  json out = json::object();
  for (const auto& [section, entries] : resolved_config(cfg)) {
    json s = json::object();
    for (const auto& [k, v] : entries) s[k] = v;
    out[section] = s;
  }
  return out;
}

json run_report_json(const RunReport& r) {
  return {{"grid", grid_json(r.grid)},
          {"params", params_json(r.params)},
          {"converged", r.converged},
          {"iterations", r.iterations},
          {"final_residual_dual", r.final_residual_dual},
          {"final_feasibility", r.final_feasibility},
          {"final_feasibility_weak", r.final_feasibility_weak},
          {"failure", r.failure},
          {"residual_l2", r.residual_l2},
          {"residual_dual", r.residual_dual},
          {"feasibility", r.feasibility},
          {"merit", r.merit},
          {"step_h1", r.step_h1},
          {"step_bound_ratio", r.step_bound_ratio},
          {"step_length", r.step_length},
          {"backtracks", r.backtracks},
          {"linear_iterations", r.linear_iterations},
          {"active_cells", r.active_cells},
          {"contraction_ratios", r.contraction_ratios},
          {"timing", {{"wall_time_s", r.wall_time_s}}}};
}

json solve_document(const Config& cfg, const std::vector<RunReport>& stages, const std::string& status,
                    const std::string& failure) {
  json st = json::array();
  double total = 0.0;
  for (const RunReport& r : stages) {
    st.push_back(run_report_json(r));
    total += r.wall_time_s;
  }
  return {{"format_version", kFormatVersion},
          {"kind", "solve"},
          {"config", config_json(cfg)},
          {"grid", grid_json(cfg.grid())},
          {"params", params_json(cfg.solver)},
          {"status", status},
          {"failure", failure},
          {"stages", st},
          {"timing", {{"wall_time_s", total}}}};
}

json trace_document(const Config& cfg, const OptimizeResult& res) {
  json outer = json::array();
  for (const OuterRecord& o : res.trace) {
    outer.push_back({{"j", o.j}, {"grad_norm", o.grad_norm}, {"step", o.step}, {"backtracks", o.backtracks}});
  }
  return {{"format_version", kFormatVersion},
          {"kind", "optimize"},
          {"config", config_json(cfg)},
          {"grid", grid_json(cfg.grid())},
          {"params", params_json(cfg.solver)},
          {"status", to_string(res.status)},
          {"state_solves", res.state_solves},
          {"outer", outer}};
}

json verdict_document(const std::vector<Check>& checks, const std::string& selector, std::uint64_t seed,
                      const Config* cfg) {
  json arr = json::array();
  double total = 0.0;
  int failed = 0;
  for (const Check& c : checks) {
    arr.push_back({{"suite", c.suite},
                   {"name", c.name},
                   {"asserted", c.asserted},
                   {"passed", c.passed},
                   {"measured", c.measured},
                   {"threshold", c.threshold},
                   {"relation", c.relation},
                   {"detail", c.detail},
                   {"criterion", c.criterion},
                   {"timing", {{"seconds", c.seconds}}}});
    total += c.seconds;
    if (c.asserted && !c.passed) ++failed;
  }
  json doc = {{"format_version", kFormatVersion},
              {"kind", "verify"},
              {"selector", selector},
              {"seed", seed},
              {"passed", failed == 0},
              {"failed_assertions", failed},
              {"checks", arr},
              {"timing", {{"seconds", total}}}};
  if (cfg != nullptr) doc["config"] = config_json(*cfg);
  return doc;
}

json without_timing(json doc) {
  if (doc.is_object()) {
    doc.erase("timing");
    for (auto& [k, v] : doc.items()) v = without_timing(v);
  } else if (doc.is_array()) {
    for (auto& v : doc) v = without_timing(v);
  }
  return doc;
}

void write_json(const std::filesystem::path& path, const json& doc) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << doc.dump(2) << "\n";
}

}  // namespace sandpile
