#pragma once

// Text format for a measure density and matrix weight on a dyadic grid:
//   line 1:     n N L
//   then one line per finest cell, lexicographic with the first axis most
//   significant: mu-density followed by the N*N weight entries row-major.
// Numbers are written with %.17g so a write/read cycle is bit exact.

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "dwlab/dyadic.hpp"

namespace dwlab {

class FieldFormatError : public std::runtime_error {
 public:
  FieldFormatError(const std::string& source, std::size_t line, const std::string& msg);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct FieldData {
  int n = 1;
  std::size_t N = 1;
  int L = 0;
  Vec density;
  std::vector<Matrix> weight;
};

FieldData parse_field(std::istream& in, const std::string& source = "<input>");
FieldData read_field(const std::string& path);
std::string format_field(const FieldData& f);
void write_field(const std::string& path, const FieldData& f);

/// Validates positivity and SPD-ness (errors name the file line of the cell).
WeightedSpace make_space(const FieldData& f, const std::string& source = "<input>");
FieldData field_of(const WeightedSpace& space);

std::string format_double(double x);

}  // namespace dwlab
