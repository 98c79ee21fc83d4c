#pragma once

// Run configuration stored as an INI file with sections [grid] [epsilons]
// [seeds] [tolerances] [output]. Doubles are written with 17 significant
// digits so a write/read cycle is exact.

#include <cstdint>
#include <stdexcept>
#include <string>

namespace dwlab {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  // [grid]
  int n = 1;
  std::size_t N = 2;
  int L = 4;
  int shifts = 0;  // 0: 3^n
  // [epsilons]
  double eps1 = 0.05, eps2 = 0.1, eps3 = 0.00125, lambda = 16;
  // [seeds]
  std::uint64_t seed = 1;
  // [tolerances]
  double partition = 1e-9;   // sawtooth partition residual, relative
  double slack = 1e-9;       // inequality slack
  double revalidate = 1e-10;  // recomputed constants vs reported
  // [output]
  std::string report;
  std::string out_dir;

  bool operator==(const RunConfig&) const = default;
};

std::string format_config(const RunConfig& c);
RunConfig parse_config(const std::string& text);
RunConfig read_config(const std::string& path);
void write_config(const std::string& path, const RunConfig& c);

/// FNV-1a (64 bit) of format_config(c), as 16 hex digits.
std::string config_hash(const RunConfig& c);
std::uint64_t fnv1a(const std::string& bytes);

/// Throws ConfigError unless eps2 in (0,1), lambda > 1, eps1 in (0,1),
/// 0 < eps3 < 1 and the grid sizes are in range. With proof_order the
/// chain also needs eps3 < eps2^2/4 and eps1 <= eps2/2.
void validate(const RunConfig& c, bool proof_order);

}  // namespace dwlab
