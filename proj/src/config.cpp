#include "dwlab/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "dwlab/field_io.hpp"

namespace dwlab {

namespace pt = boost::property_tree;

std::string format_config(const RunConfig& c) {
  std::ostringstream o;
  o << "[grid]\n"
    << "n=" << c.n << "\nN=" << c.N << "\nL=" << c.L << "\nshifts=" << c.shifts << "\n\n"
    << "[epsilons]\n"
    << "eps1=" << format_double(c.eps1) << "\neps2=" << format_double(c.eps2) << "\neps3=" << format_double(c.eps3)
    << "\nlambda=" << format_double(c.lambda) << "\n\n"
    << "[seeds]\nseed=" << c.seed << "\n\n"
    << "[tolerances]\n"
    << "partition=" << format_double(c.partition) << "\nslack=" << format_double(c.slack)
    << "\nrevalidate=" << format_double(c.revalidate) << "\n\n"
    << "[output]\nreport=" << c.report << "\nout_dir=" << c.out_dir << "\n";
  return o.str();
}

namespace {

template <class T>
void load(const pt::ptree& t, const char* key, T& out) {
  try {
    if (auto v = t.get_child_optional(key)) out = v->get_value<T>();
  } catch (const pt::ptree_error& e) {
    throw ConfigError(std::string("config: bad value for ") + key + ": " + e.what());
  }
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  pt::ptree t;
  std::istringstream in(text);
  try {
    pt::read_ini(in, t);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  static const char* known[] = {"grid", "epsilons", "seeds", "tolerances", "output"};
  for (const auto& [section, _] : t) {
    bool ok = false;
    for (const char* k : known) ok = ok || section == k;
    if (!ok) throw ConfigError("config: unknown section [" + section + "]");
  }
  RunConfig c;
  load(t, "grid.n", c.n);
  load(t, "grid.N", c.N);
  load(t, "grid.L", c.L);
  load(t, "grid.shifts", c.shifts);
  load(t, "epsilons.eps1", c.eps1);
  load(t, "epsilons.eps2", c.eps2);
  load(t, "epsilons.eps3", c.eps3);
  load(t, "epsilons.lambda", c.lambda);
  load(t, "seeds.seed", c.seed);
  load(t, "tolerances.partition", c.partition);
  load(t, "tolerances.slack", c.slack);
  load(t, "tolerances.revalidate", c.revalidate);
  load(t, "output.report", c.report);
  load(t, "output.out_dir", c.out_dir);
  return c;
}

RunConfig read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return parse_config(s.str());
}

void write_config(const std::string& path, const RunConfig& c) {
  std::ofstream out(path);
  if (!out) throw ConfigError("config: cannot write " + path);
  out << format_config(c);
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_hash(const RunConfig& c) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(format_config(c))));
  return buf;
}

void validate(const RunConfig& c, bool proof_order) {
  if (c.n < 1 || c.n > 3) throw ConfigError("config: n must lie in 1..3");
  if (c.N < 1) throw ConfigError("config: N must be >= 1");
  if (c.L < 0 || c.L > 16) throw ConfigError("config: L must lie in 0..16");
  if (c.shifts < 0) throw ConfigError("config: shifts must be >= 0");
  if (!(c.eps2 > 0 && c.eps2 < 1)) throw ConfigError("config: eps2 must lie in (0,1)");
  if (!(c.eps1 > 0 && c.eps1 < 1)) throw ConfigError("config: eps1 must lie in (0,1)");
  if (!(c.eps3 > 0 && c.eps3 < 1)) throw ConfigError("config: eps3 must lie in (0,1)");
  if (!(c.lambda > 1)) throw ConfigError("config: lambda must exceed 1");
  if (proof_order) {
    if (!(c.eps3 < c.eps2 * c.eps2 / 4)) throw ConfigError("config: proof order needs eps3 < eps2^2/4");
    if (!(c.eps1 <= c.eps2 / 2)) throw ConfigError("config: proof order needs eps1 <= eps2/2");
  }
}

}  // namespace dwlab
