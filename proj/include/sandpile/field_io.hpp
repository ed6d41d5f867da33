#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sandpile/grid.hpp"

// Text field format: line 1 is "d n" (1D) or "d n n" (2D) giving the number of
// stored samples per axis, followed by one value per line, row-major, printed
// with 17 significant digits. Nodal fields store n interior values per axis;
// cell fields (obstacles) store n+1.

namespace sandpile {

class FieldFormatError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct RawField {
  int dim = 1;
  int per_axis = 0;
  std::vector<double> values;
};

void write_raw_field(std::ostream& os, int dim, int per_axis, std::span<const double> values);
RawField read_raw_field(std::istream& is, const std::string& source_name = "<stream>");

void write_field(const std::filesystem::path& path, const NodalField& u);
void write_cell_field(const std::filesystem::path& path, const Grid& g, std::span<const double> values);

NodalField read_nodal_field(const std::filesystem::path& path);
/// Reads a nodal field and checks it lives on `g`.
NodalField read_nodal_field(const std::filesystem::path& path, const Grid& g);
ObstacleField read_obstacle_field(const std::filesystem::path& path, const Grid& g);

}  // namespace sandpile
