#pragma once

// Random weight generators and the search for matrix weights with large
// A-infinity constant under a cap on the determinant reverse Hoelder
// constant.

#include <cstdint>
#include <string>
#include <vector>

#include "dwlab/field_io.hpp"
#include "dwlab/weight_classes.hpp"

namespace dwlab {

enum class GeneratorKind { constant, diagonal, rotated_diagonal, log_gaussian, two_scale };
GeneratorKind parse_generator_kind(const std::string& name);
std::string generator_name(GeneratorKind k);

struct GeneratorParams {
  GeneratorKind kind = GeneratorKind::log_gaussian;
  double amplitude = 1.0;     // size of the log-eigenvalue fluctuations
  double correlation = 0.5;   // per-level decay of fluctuations (0 = white across scales)
  double mu_amplitude = 0.0;  // log-density fluctuation; 0 gives mu = 1
  double doubling_cap = 16.0;
  int retries = 10;
  std::uint64_t seed = 1;
};

struct GeneratedField {
  FieldData field;
  int attempts = 1;
  double doubling = 1;
};

/// Reproducible from the seed. The constant kind draws one SPD matrix and
/// mu = 1; diagonal multiplies independent scalar weights per coordinate;
/// rotated-diagonal conjugates a diagonal field by cellwise rotations;
/// log-gaussian takes exp of a sum of random symmetric matrices over the
/// ancestors of each cell; two-scale alternates two anisotropic matrices at
/// a coarse and a fine scale. Throws std::runtime_error if the density keeps
/// exceeding the doubling cap after `retries` redraws.
GeneratedField generate(const GeneratorParams& p, int n, std::size_t N, int L);

/// Determinant B2 and A-infinity constants only (b2_iv, ainf_ii) on the same
/// cube family as class_constants; cheap enough for search loops.
struct DetConstants {
  double b2_iv = 1, ainf_ii = 1;
};
DetConstants det_constants(const Grid& g, const Vec& density, const std::vector<Matrix>& cells, int shifts);
DetConstants det_constants(const Grid& g, const Vec& density, const std::vector<Matrix>& cells,
                           const std::vector<Box>& family);

enum class SearchFamily { log_cell, log_multiscale, rotated_diagonal };
SearchFamily parse_search_family(const std::string& name);
std::string search_family_name(SearchFamily f);

struct TrailPoint {
  std::uint64_t step = 0;
  double ainf_ii = 0;
  double b2_iv = 0;
};

struct InclusionResult {
  SearchFamily family = SearchFamily::log_cell;
  FieldData best;
  ClassReport report;  // full constants of `best`
  double ainf_ii = 1, b2_iv = 1;
  std::vector<TrailPoint> trail;  // improvements of the best chain
  std::uint64_t evaluations = 0;
};

struct InclusionOptions {
  SearchFamily family = SearchFamily::log_cell;
  int chains = 4;
  int inits = 8;  // random starts per chain before annealing
  int shifts = 0;  // 0: 3^n
  double t0 = 0.05, t_final = 1e-4;
};

/// Annealing over the family's parameters maximizing ainf_ii with b2_iv <=
/// b2_cap enforced by shrinking the parameters toward W = I (bisection on a
/// scale factor). mu = 1. Requires N >= 2 and b2_cap > 1. budget counts
/// proposals per chain; 0 keeps the best random start. Results are labeled
/// empirical: a finite grid cannot show unboundedness.
InclusionResult inclusion_search(int n, std::size_t N, int L, double b2_cap, std::uint64_t budget, std::uint64_t seed,
                                 const InclusionOptions& opt = {}, Exec exec = Exec::parallel);

}  // namespace dwlab
