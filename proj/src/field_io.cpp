#include "dwlab/field_io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace dwlab {

FieldFormatError::FieldFormatError(const std::string& source, std::size_t line, const std::string& msg)
    : std::runtime_error(source + ":" + std::to_string(line) + ": " + msg), line_(line) {}

namespace {

bool parse_number(const std::string& tok, double& out) {
  errno = 0;
  char* end = nullptr;
  out = std::strtod(tok.c_str(), &end);
  return end != tok.c_str() && *end == '\0' && errno != ERANGE && std::isfinite(out);
}

std::vector<std::string> tokens(const std::string& line) {
  std::istringstream ss(line);
  std::vector<std::string> t;
  std::string s;
  while (ss >> s) t.push_back(s);
  return t;
}

}  // namespace

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

FieldData parse_field(std::istream& in, const std::string& source) {
  FieldData f;
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) throw FieldFormatError(source, 1, "empty file");
  ++lineno;
  {
    const auto t = tokens(line);
    if (t.size() != 3) throw FieldFormatError(source, lineno, "header must be 'n N L'");
    try {
      std::size_t used = 0;
      f.n = std::stoi(t[0], &used);
      if (used != t[0].size()) throw std::invalid_argument(t[0]);
      const int N = std::stoi(t[1], &used);
      if (used != t[1].size()) throw std::invalid_argument(t[1]);
      f.L = std::stoi(t[2], &used);
      if (used != t[2].size()) throw std::invalid_argument(t[2]);
      if (f.n < 1 || f.n > kMaxDim || N < 1 || N > 16 || f.L < 0 || f.n * f.L > 24)
        throw FieldFormatError(source, lineno, "header values out of range");
      f.N = static_cast<std::size_t>(N);
    } catch (const FieldFormatError&) {
      throw;
    } catch (const std::exception&) {
      throw FieldFormatError(source, lineno, "header must be three integers 'n N L'");
    }
  }
  const std::size_t cells = std::size_t{1} << (f.n * f.L);
  const std::size_t per = 1 + f.N * f.N;
  f.density.reserve(cells);
  f.weight.reserve(cells);
  while (f.density.size() < cells) {
    if (!std::getline(in, line)) {
      std::ostringstream os;
      os << "expected " << cells << " cell lines, found " << f.density.size();
      throw FieldFormatError(source, lineno + 1, os.str());
    }
    ++lineno;
    const auto t = tokens(line);
    if (t.size() != per) {
      std::ostringstream os;
      os << "expected " << per << " numbers, found " << t.size();
      throw FieldFormatError(source, lineno, os.str());
    }
    Vec v(per);
    for (std::size_t k = 0; k < per; ++k)
      if (!parse_number(t[k], v[k])) throw FieldFormatError(source, lineno, "not a finite number: '" + t[k] + "'");
    f.density.push_back(v[0]);
    f.weight.emplace_back(f.N, f.N, Vec(v.begin() + 1, v.end()));
  }
  while (std::getline(in, line)) {
    ++lineno;
    if (!tokens(line).empty()) throw FieldFormatError(source, lineno, "unexpected data after last cell");
  }
  return f;
}

FieldData read_field(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open field file: " + path);
  return parse_field(in, path);
}

std::string format_field(const FieldData& f) {
  std::string out = std::to_string(f.n) + " " + std::to_string(f.N) + " " + std::to_string(f.L) + "\n";
  for (std::size_t c = 0; c < f.density.size(); ++c) {
    out += format_double(f.density[c]);
    for (const double x : f.weight[c].data()) {
      out += ' ';
      out += format_double(x);
    }
    out += '\n';
  }
  return out;
}

void write_field(const std::string& path, const FieldData& f) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write field file: " + path);
  out << format_field(f);
  if (!out) throw std::runtime_error("write failed: " + path);
}

WeightedSpace make_space(const FieldData& f, const std::string& source) {
  const Grid g(f.n, f.L);
  for (std::size_t c = 0; c < f.density.size(); ++c)
    if (!(f.density[c] > 0.0)) throw FieldFormatError(source, c + 2, "density must be positive");
  std::vector<Matrix> w = f.weight;
  for (std::size_t c = 0; c < w.size(); ++c) {
    try {
      (void)SpdMatrix(w[c]);
    } catch (const NotPositiveDefinite&) {
      throw FieldFormatError(source, c + 2, "weight is not positive definite");
    }
  }
  return WeightedSpace(MeasuredGrid(g, f.density), WeightField(g, std::move(w)));
}

FieldData field_of(const WeightedSpace& space) {
  FieldData f;
  f.n = space.grid().dim();
  f.N = space.dim();
  f.L = space.grid().finest_level();
  f.density = space.mu().density();
  for (const SpdMatrix& w : space.weight().cells()) f.weight.push_back(w.matrix());
  return f;
}

}  // namespace dwlab
