#include "sandpile/field_io.hpp"

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace sandpile {

namespace {

std::string format_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

void write_raw_field(std::ostream& os, int dim, int per_axis, std::span<const double> values) {
  os << dim << ' ' << per_axis;
  if (dim == 2) os << ' ' << per_axis;
  os << '\n';
  for (double v : values) os << format_value(v) << '\n';
}

RawField read_raw_field(std::istream& is, const std::string& source_name) {
  auto fail = [&](int line, const std::string& msg) {
    throw FieldFormatError(source_name + ":" + std::to_string(line) + ": " + msg);
  };
  std::string line;
  if (!std::getline(is, line)) fail(1, "empty field file");
  RawField raw;
  {
    std::istringstream hs(line);
    int a = 0, b = 0;
    if (!(hs >> raw.dim >> a)) fail(1, "header must be \"d n\" or \"d n n\"");
    if (raw.dim != 1 && raw.dim != 2) fail(1, "dimension must be 1 or 2");
    if (raw.dim == 2) {
      if (!(hs >> b)) fail(1, "2D header must be \"2 n n\"");
      if (a != b) fail(1, "only square grids are supported");
    }
    std::string extra;
    if (hs >> extra) fail(1, "trailing text in header");
    if (a < 1) fail(1, "sample count must be positive");
    raw.per_axis = a;
  }
  const std::size_t expected =
      raw.dim == 1 ? static_cast<std::size_t>(raw.per_axis)
                   : static_cast<std::size_t>(raw.per_axis) * static_cast<std::size_t>(raw.per_axis);
  raw.values.reserve(expected);
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty()) continue;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size()) fail(lineno, "not a number: \"" + t + "\"");
    if (!std::isfinite(v)) fail(lineno, "non-finite value");
    raw.values.push_back(v);
  }
  if (raw.values.size() != expected) {
    fail(lineno, "expected " + std::to_string(expected) + " values, found " +
                     std::to_string(raw.values.size()));
  }
  return raw;
}

void write_field(const std::filesystem::path& path, const NodalField& u) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  write_raw_field(os, u.grid().dim(), u.grid().n(), u.values());
}

void write_cell_field(const std::filesystem::path& path, const Grid& g, std::span<const double> values) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  write_raw_field(os, g.dim(), g.n() + 1, values);
}

NodalField read_nodal_field(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw FieldFormatError("cannot open field file " + path.string());
  RawField raw = read_raw_field(is, path.string());
  return NodalField(Grid(raw.dim, raw.per_axis), std::move(raw.values));
}

NodalField read_nodal_field(const std::filesystem::path& path, const Grid& g) {
  NodalField u = read_nodal_field(path);
  if (!(u.grid() == g)) {
    throw FieldFormatError(path.string() + ": field grid (d=" + std::to_string(u.grid().dim()) +
                           ", n=" + std::to_string(u.grid().n()) + ") does not match the problem grid");
  }
  return u;
}

ObstacleField read_obstacle_field(const std::filesystem::path& path, const Grid& g) {
  std::ifstream is(path);
  if (!is) throw FieldFormatError("cannot open field file " + path.string());
  RawField raw = read_raw_field(is, path.string());
  if (raw.dim != g.dim() || raw.per_axis != g.n() + 1) {
    throw FieldFormatError(path.string() + ": obstacle field must hold n+1 = " +
                           std::to_string(g.n() + 1) + " cells per axis");
  }
  try {
    return ObstacleField(g, std::move(raw.values));
  } catch (const std::invalid_argument& e) {
    throw FieldFormatError(path.string() + ": " + e.what());
  }
}

}  // namespace sandpile
