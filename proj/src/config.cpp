#include "sandpile/config.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "sandpile/field_io.hpp"
#include "sandpile/linalg.hpp"

namespace sandpile {

ConfigError::ConfigError(const std::string& source, int line, const std::string& what)
    : std::runtime_error(line > 0 ? source + ":" + std::to_string(line) + ": " + what : source + ": " + what),
      line_(line) {}

namespace {

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::vector<std::string> split_words(const std::string& s) {
  std::istringstream is(s);
  std::vector<std::string> out;
  for (std::string w; is >> w;) out.push_back(w);
  return out;
}

bool parse_double(const std::string& s, double& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && std::isfinite(out);
}

template <class Int>
bool parse_int(const std::string& s, Int& out) {
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <class T>
std::string join(const std::vector<T>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ", ";
    if constexpr (std::is_floating_point_v<T>) {
      out += format_double(xs[i]);
    } else {
      out += std::to_string(xs[i]);
    }
  }
  return out;
}

}  // namespace

FieldSpec FieldSpec::constant(double v) {
  FieldSpec s;
  s.kind = Kind::constant;
  s.value = v;
  s.text = format_double(v);
  return s;
}

FieldSpec FieldSpec::parse(const std::string& raw, const std::filesystem::path& base_dir) {
  const std::string text = trim(raw);
  FieldSpec s;
  s.text = text;
  if (text.empty()) throw std::invalid_argument("empty field value");
  if (text.front() == '@') {
    s.kind = Kind::file;
    std::filesystem::path p = trim(text.substr(1));
    if (p.empty()) throw std::invalid_argument("'@' needs a file path");
    s.path = p.is_absolute() ? p : base_dir / p;
    return s;
  }
  const auto words = split_words(text);
  if (words.front() == "bump") {
    if (words.size() < 3 || words.size() > 5) {
      throw std::invalid_argument("bump takes amplitude, radius and an optional center");
    }
    s.kind = Kind::bump;
    std::array<double, 4> nums{};
    for (std::size_t i = 1; i < words.size(); ++i) {
      if (!parse_double(words[i], nums[i - 1])) throw std::invalid_argument("bad number '" + words[i] + "'");
    }
    s.value = nums[0];
    s.radius = nums[1];
    if (!(s.radius > 0.0)) throw std::invalid_argument("bump radius must be positive");
    if (words.size() >= 4) s.center = std::array<double, 2>{nums[2], words.size() == 5 ? nums[3] : 0.5};
    return s;
  }
  if (words.size() != 1 || !parse_double(words.front(), s.value)) {
    throw std::invalid_argument("expected a number, @file or 'bump A R [cx [cy]]', got '" + text + "'");
  }
  return s;
}

namespace {

double bump_value(const FieldSpec& s, std::array<double, 2> x, int dim) {
  const std::array<double, 2> c = s.center.value_or(std::array<double, 2>{0.5, 0.5});
  double r2 = (x[0] - c[0]) * (x[0] - c[0]);
  if (dim == 2) r2 += (x[1] - c[1]) * (x[1] - c[1]);
  return s.value * std::max(0.0, 1.0 - r2 / (s.radius * s.radius));
}

bool is_section(const std::string& s) {
  return s == "problem" || s == "solver" || s == "schedule" || s == "control" || s == "output" || s == "verify";
}

struct Parser {
  const std::string& source;
  std::filesystem::path base_dir;
  Config cfg;
  std::map<std::string, int> seen;

  [[noreturn]] void fail(int line, const std::string& msg) const { throw ConfigError(source, line, msg); }

  double number(int line, const std::string& key, const std::string& v) const {
    double out = 0.0;
    if (!parse_double(v, out)) fail(line, key + ": expected a number, got '" + v + "'");
    return out;
  }
  int integer(int line, const std::string& key, const std::string& v) const {
    int out = 0;
    if (!parse_int(v, out)) fail(line, key + ": expected an integer, got '" + v + "'");
    return out;
  }
  bool boolean(int line, const std::string& key, const std::string& v) const {
    if (v == "true" || v == "on" || v == "1") return true;
    if (v == "false" || v == "off" || v == "0") return false;
    fail(line, key + ": expected true or false, got '" + v + "'");
  }
  FieldSpec field(int line, const std::string& key, const std::string& v) const {
    try {
      return FieldSpec::parse(v, base_dir);
    } catch (const std::invalid_argument& e) {
      fail(line, key + ": " + e.what());
    }
  }
  template <class T, class Conv>
  std::vector<T> list(int line, const std::string& key, const std::string& v, Conv conv) const {
    std::vector<T> out;
    std::string item;
    std::istringstream is(v);
    while (std::getline(is, item, ',')) {
      item = trim(item);
      if (item.empty()) fail(line, key + ": empty list entry");
      out.push_back((this->*conv)(line, key, item));
    }
    return out;
  }

  void assign(const std::string& section, const std::string& key, const std::string& v, int line) {
    using Setter = std::function<void()>;
    SolverParams& sp = cfg.solver;
    ControlConfig& cc = cfg.control;
    OutputConfig& oc = cfg.output;
    const std::map<std::string, std::map<std::string, Setter>> table{
        {"problem",
         {{"dim", [&] { cfg.problem.dim = integer(line, key, v); }},
          {"n", [&] { cfg.problem.n = integer(line, key, v); }},
          {"source", [&] { cfg.problem.source = field(line, key, v); }},
          {"support", [&] { cfg.problem.support = field(line, key, v); }},
          {"obstacle", [&] { cfg.problem.obstacle = field(line, key, v); }}}},
        {"solver",
         {{"eps", [&] { sp.eps = number(line, key, v); }},
          {"gamma", [&] { sp.gamma = number(line, key, v); }},
          {"mode",
           [&] {
             if (v == "weak") {
               sp.mode.kind = GradientMode::Kind::weak;
             } else if (v == "incremental") {
               sp.mode.kind = GradientMode::Kind::incremental;
             } else {
               fail(line, "mode: expected weak or incremental, got '" + v + "'");
             }
           }},
          {"mu_cells", [&] { sp.mode.mu_cells = integer(line, key, v); }},
          {"tol_res", [&] { sp.tol_res = number(line, key, v); }},
          {"max_iter", [&] { sp.max_iter = integer(line, key, v); }},
          {"tol_lin", [&] { sp.tol_lin = number(line, key, v); }},
          {"max_lin_iter", [&] { sp.max_lin_iter = integer(line, key, v); }},
          {"damping",
           [&] {
             if (v == "armijo") {
               sp.damping = Damping::armijo;
             } else if (v == "off") {
               sp.damping = Damping::off;
             } else {
               fail(line, "damping: expected armijo or off, got '" + v + "'");
             }
           }},
          {"armijo_c1", [&] { sp.armijo_c1 = number(line, key, v); }},
          {"armijo_backtrack", [&] { sp.armijo_backtrack = number(line, key, v); }},
          {"max_backtracks", [&] { sp.max_backtracks = integer(line, key, v); }},
          {"preconditioner",
           [&] {
             if (v == "cholesky") {
               sp.preconditioner = Preconditioner::cholesky;
             } else if (v == "jacobi") {
               sp.preconditioner = Preconditioner::jacobi;
             } else {
               fail(line, "preconditioner: expected cholesky or jacobi, got '" + v + "'");
             }
           }}}},
        {"schedule",
         {{"gamma",
           [&] {
             if (!cfg.schedule) cfg.schedule = Schedule{};
             cfg.schedule->gamma = list<double>(line, key, v, &Parser::number);
           }},
          {"mu_cells",
           [&] {
             if (!cfg.schedule) cfg.schedule = Schedule{};
             cfg.schedule->mu_cells = list<int>(line, key, v, &Parser::integer);
           }}}},
        {"control",
         {{"lambda", [&] { cc.lambda = number(line, key, v); }},
          {"target", [&] { cc.target = field(line, key, v); }},
          {"f_init", [&] { cc.f_init = field(line, key, v); }},
          {"descent",
           [&] {
             if (v == "armijo") {
               cc.descent = DescentRule::armijo;
             } else if (v == "fixed") {
               cc.descent = DescentRule::fixed;
             } else {
               fail(line, "descent: expected armijo or fixed, got '" + v + "'");
             }
           }},
          {"step_init", [&] { cc.step_init = number(line, key, v); }},
          {"armijo_c1", [&] { cc.armijo_c1 = number(line, key, v); }},
          {"armijo_backtrack", [&] { cc.armijo_backtrack = number(line, key, v); }},
          {"max_backtracks", [&] { cc.max_backtracks = integer(line, key, v); }},
          {"bb_step", [&] { cc.bb_step = boolean(line, key, v); }},
          {"max_outer", [&] { cc.max_outer = integer(line, key, v); }},
          {"tol_grad", [&] { cc.tol_grad = number(line, key, v); }}}},
        {"output",
         {{"u_field", [&] { oc.u_field = v; }},
          {"report", [&] { oc.report = v; }},
          {"plot", [&] { oc.plot = v; }},
          {"f_field", [&] { oc.f_field = v; }},
          {"trace", [&] { oc.trace = v; }}}},
        {"verify",
         {{"seed",
           [&] {
             if (!parse_int(v, cfg.verify.seed)) fail(line, "seed: expected a non-negative integer");
           }}}},
    };
    const auto sec = table.find(section);
    if (sec == table.end()) fail(line, "unknown section [" + section + "]");
    const auto it = sec->second.find(key);
    if (it == sec->second.end()) fail(line, "unknown key '" + key + "' in [" + section + "]");
    const std::string full = section + "." + key;
    if (const auto prev = seen.find(full); prev != seen.end()) {
      fail(line, "duplicate key '" + key + "' (first set on line " + std::to_string(prev->second) + ")");
    }
    seen[full] = line;
    it->second();
  }

  // Line of the key in section that the message names, else of the section header.
  int blame(const std::string& section, const std::string& msg) const {
    int best = line_of(section);
    std::size_t best_len = 0;
    for (const auto& [full, line] : seen) {
      if (full.rfind(section + ".", 0) != 0) continue;
      const std::string key = full.substr(section.size() + 1);
      if (key.size() > best_len && msg.find(key) != std::string::npos) {
        best = line;
        best_len = key.size();
      }
    }
    return best;
  }

  int line_of(const std::string& full, int fallback = 0) const {
    const auto it = seen.find(full);
    return it == seen.end() ? fallback : it->second;
  }

  void validate() {
    try {
      (void)cfg.grid();
    } catch (const std::invalid_argument& e) {
      fail(line_of("problem.n", line_of("problem.dim")), e.what());
    }
    try {
      cfg.solver.validate();
    } catch (const std::invalid_argument& e) {
      fail(blame("solver", e.what()), e.what());
    }
    if (cfg.schedule) {
      if (cfg.schedule->gamma.empty()) fail(line_of("schedule.mu_cells"), "schedule: mu_cells given without gamma");
      try {
        cfg.schedule->validate();
      } catch (const std::invalid_argument& e) {
        fail(line_of("schedule.gamma"), e.what());
      }
      if (!cfg.schedule->mu_cells.empty() && cfg.solver.mode.kind != GradientMode::Kind::incremental) {
        fail(line_of("schedule.mu_cells"), "schedule: mu_cells requires solver mode = incremental");
      }
    }
    const ControlConfig& c = cfg.control;
    ControlParams probe{NodalField(Grid(1, 1))};
    probe.lambda = c.lambda;
    probe.step_init = c.step_init;
    probe.armijo_c1 = c.armijo_c1;
    probe.armijo_backtrack = c.armijo_backtrack;
    probe.max_backtracks = c.max_backtracks;
    probe.max_outer = c.max_outer;
    probe.tol_grad = c.tol_grad;
    try {
      probe.validate();
    } catch (const std::invalid_argument& e) {
      fail(blame("control", e.what()), e.what());
    }
  }
};

}  // namespace

Config parse_config(const std::string& text, const std::string& source_name,
                    const std::filesystem::path& base_dir) {
  Parser p{source_name, base_dir, {}, {}};
  p.cfg.source_name = source_name;
  std::istringstream is(text);
  std::string section;
  int line_no = 0;
  for (std::string line; std::getline(is, line);) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') p.fail(line_no, "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) p.fail(line_no, "empty section name");
      if (!is_section(section)) p.fail(line_no, "unknown section [" + section + "]");
      p.seen[section] = line_no;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) p.fail(line_no, "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) p.fail(line_no, "missing key before '='");
    if (value.empty() && section != "output") p.fail(line_no, "missing value for '" + key + "'");
    if (section.empty()) p.fail(line_no, "key '" + key + "' outside any section");
    p.assign(section, key, value, line_no);
  }
  p.validate();
  return p.cfg;
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError(path.string(), 0, "cannot open config file");
  std::stringstream buf;
  buf << is.rdbuf();
  return parse_config(buf.str(), path.string(), path.parent_path().empty() ? "." : path.parent_path());
}

std::vector<std::pair<std::string, std::vector<std::pair<std::string, std::string>>>>
resolved_config(const Config& cfg) {
  const SolverParams& s = cfg.solver;
  const ControlConfig& c = cfg.control;
  const auto spec = [](const FieldSpec& f) {
    return f.kind == FieldSpec::Kind::file ? "@" + f.path.string() : f.text;
  };
  std::vector<std::pair<std::string, std::string>> problem{
      {"dim", std::to_string(cfg.problem.dim)},
      {"n", std::to_string(cfg.problem.n)},
      {"source", spec(cfg.problem.source)},
      {"obstacle", spec(cfg.problem.obstacle)}};
  if (cfg.problem.support) problem.emplace_back("support", spec(*cfg.problem.support));
  std::vector<std::pair<std::string, std::string>> solver{
      {"eps", format_double(s.eps)},
      {"gamma", format_double(s.gamma)},
      {"mode", s.mode.kind == GradientMode::Kind::weak ? "weak" : "incremental"},
      {"mu_cells", std::to_string(s.mode.mu_cells)},
      {"tol_res", format_double(s.tol_res)},
      {"max_iter", std::to_string(s.max_iter)},
      {"tol_lin", format_double(s.tol_lin)},
      {"max_lin_iter", std::to_string(s.max_lin_iter)},
      {"damping", s.damping == Damping::armijo ? "armijo" : "off"},
      {"armijo_c1", format_double(s.armijo_c1)},
      {"armijo_backtrack", format_double(s.armijo_backtrack)},
      {"max_backtracks", std::to_string(s.max_backtracks)},
      {"preconditioner", s.preconditioner == Preconditioner::cholesky ? "cholesky" : "jacobi"}};
  std::vector<std::pair<std::string, std::string>> schedule;
  if (cfg.schedule) {
    schedule.emplace_back("gamma", join(cfg.schedule->gamma));
    if (!cfg.schedule->mu_cells.empty()) schedule.emplace_back("mu_cells", join(cfg.schedule->mu_cells));
  }
  std::vector<std::pair<std::string, std::string>> control{
      {"lambda", format_double(c.lambda)},
      {"f_init", spec(c.f_init)},
      {"descent", c.descent == DescentRule::armijo ? "armijo" : "fixed"},
      {"step_init", format_double(c.step_init)},
      {"armijo_c1", format_double(c.armijo_c1)},
      {"armijo_backtrack", format_double(c.armijo_backtrack)},
      {"max_backtracks", std::to_string(c.max_backtracks)},
      {"bb_step", c.bb_step ? "true" : "false"},
      {"max_outer", std::to_string(c.max_outer)},
      {"tol_grad", format_double(c.tol_grad)}};
  if (c.target) control.emplace_back("target", spec(*c.target));
  std::vector<std::pair<std::string, std::string>> output{{"u_field", cfg.output.u_field},
                                                          {"report", cfg.output.report},
                                                          {"f_field", cfg.output.f_field},
                                                          {"trace", cfg.output.trace},
                                                          {"plot", cfg.output.plot}};
  return {{"problem", problem},
          {"solver", solver},
          {"schedule", schedule},
          {"control", control},
          {"output", output},
          {"verify", {{"seed", std::to_string(cfg.verify.seed)}}}};
}

std::string format_config(const Config& cfg) {
  std::string out;
  for (const auto& [section, entries] : resolved_config(cfg)) {
    if (entries.empty()) continue;
    out += "[" + section + "]\n";
    for (const auto& [k, v] : entries) out += v.empty() ? k + " =\n" : k + " = " + v + "\n";
    out += "\n";
  }
  return out;
}

NodalField make_nodal_field(const FieldSpec& spec, const Grid& g) {
  switch (spec.kind) {
    case FieldSpec::Kind::constant: return NodalField(g, spec.value);
    case FieldSpec::Kind::file: return read_nodal_field(spec.path, g);
    case FieldSpec::Kind::bump: {
      NodalField u(g);
      for (std::size_t i = 0; i < u.size(); ++i) u[i] = bump_value(spec, node_coordinates(g, i), g.dim());
      return u;
    }
  }
  throw std::logic_error("unhandled field kind");
}

ObstacleField make_obstacle(const FieldSpec& spec, const Grid& g) {
  switch (spec.kind) {
    case FieldSpec::Kind::constant: return ObstacleField::constant(g, spec.value);
    case FieldSpec::Kind::file: return read_obstacle_field(spec.path, g);
    case FieldSpec::Kind::bump: {
      std::vector<double> phi(g.cell_count());
      for (std::size_t c = 0; c < phi.size(); ++c) phi[c] = bump_value(spec, cell_center(g, c), g.dim());
      return ObstacleField(g, std::move(phi));
    }
  }
  throw std::logic_error("unhandled field kind");
}

NodalField supported_source(const NodalField& g, const NodalField& u0, double eps) {
  require_same_grid(g.grid(), u0.grid(), "supported_source");
  NodalField f = g;
  const NodalField lu = stiffness_apply(1.0, u0);
  axpy(-eps / g.grid().cell_volume(), lu.values(), f.values());
  return f;
}

NodalField problem_source(const Config& cfg) {
  const Grid g = cfg.grid();
  NodalField f = make_nodal_field(cfg.problem.source, g);
  if (cfg.problem.support) f = supported_source(f, make_nodal_field(*cfg.problem.support, g), cfg.solver.eps);
  return f;
}

ControlParams make_control_params(const Config& cfg) {
  const Grid g = cfg.grid();
  if (!cfg.control.target) throw ConfigError(cfg.source_name, 0, "[control] target is required");
  return make_control_params(cfg, make_nodal_field(*cfg.control.target, g));
}

ControlParams make_control_params(const Config& cfg, NodalField target) {
  ControlParams cp(std::move(target));
  const ControlConfig& c = cfg.control;
  cp.lambda = c.lambda;
  cp.descent = c.descent;
  cp.step_init = c.step_init;
  cp.armijo_c1 = c.armijo_c1;
  cp.armijo_backtrack = c.armijo_backtrack;
  cp.max_backtracks = c.max_backtracks;
  cp.bb_step = c.bb_step;
  cp.max_outer = c.max_outer;
  cp.tol_grad = c.tol_grad;
  return cp;
}

}  // namespace sandpile
