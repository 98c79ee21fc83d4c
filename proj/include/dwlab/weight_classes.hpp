#pragma once

// Matrix weight class constants (reverse Hoelder B2, A-infinity, A2, the
// W^2 A-infinity constant) as suprema over a family of cell-aligned cubes,
// plus the scalar A-infinity equivalences and the column-weight relations.

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "dwlab/dyadic.hpp"
#include "dwlab/parallel.hpp"

namespace dwlab {

/// Dyadic cubes of levels 0..L on the first `shifts` translated grids. Shift
/// t offsets axis a by round(j_a * s / 3) cells, where s is the side in cells
/// and j_a is the a-th base-3 digit of t. Boxes must fit in [0,1)^n; a box
/// already produced by a lower shift is dropped, so the family for K shifts
/// contains the one for K-1.
std::vector<Box> cube_family(const Grid& g, int shifts);

/// Everything about one cube that the class constants need.
struct CubeRatios {
  double b2_i = 1;          // sqrt(lambda_max(L^-1 S L^-T)), L L^T = W_Q^2
  double b2_i_sampled = 1;  // max over sampled a of |S^1/2 a| / |W_Q a|
  double b2_ii = 1;         // |S^1/2 W_Q^-1|
  double b2_iii = 1;        // |W_Q^-1 S W_Q^-1|
  double b2_iv = 1;         // det(S)^1/2 / det(W_Q)
  double ainf_i = 1;        // max over sampled a
  double ainf_ii = 1;       // det(W_Q) / exp(avg ln det W)
  double a2 = 1;            // det(W_Q) det(avg W^-1)
  double thewest = 1;       // det(S) / exp(avg ln det W^2)
  /// det(S)^1/2, det W_Q, exp(avg ln det W), det(avg W^-1)^-1, det(avg W^-2)^-1/2
  std::array<double, 5> chain{};
};

/// Per-cell quantities reused by every cube.
struct CellSample {
  double mass = 0;
  Matrix w, w2, winv, winv2, winv_sqrt;
  double log_det = 0;
};
CellSample make_cell_sample(const SpdMatrix& w, double mass);

/// Ratios from an explicit list of (mass, W) samples; `directions` are the
/// unit vectors used by the sampled quantities.
CubeRatios sample_ratios(std::span<const CellSample> cells, std::span<const Vec> directions);

/// 2N signed basis vectors followed by `random_count` random unit vectors.
std::vector<Vec> sample_directions(std::size_t dim, int random_count, std::uint64_t seed);

/// Precomputed cell samples for a weighted space.
class ClassEvaluator {
 public:
  explicit ClassEvaluator(const WeightedSpace& space, std::uint64_t seed = 0);
  const WeightedSpace& space() const { return *space_; }
  /// Directions for a box are seeded by (seed, level, lo), not by its shift.
  std::vector<Vec> directions(const Box& b) const;
  CubeRatios ratios(const Box& b) const;
  std::span<const CellSample> cells() const { return cells_; }

 private:
  const WeightedSpace* space_;
  std::uint64_t seed_;
  std::vector<CellSample> cells_;
};

inline constexpr int kRandomDirections = 64;

struct ClassReport {
  double b2_i = 1, b2_i_sampled = 1, b2_ii = 1, b2_iii = 1, b2_iv = 1;
  double ainf_i = 1, ainf_ii = 1, a2 = 1, thewest = 1;
  std::size_t cube_count = 0;
  /// Name of constant -> argmax cube.
  std::map<std::string, Box> worst;
};

ClassReport class_constants(const WeightedSpace& space, int shifts, Exec exec = Exec::parallel);

struct B2Constants {
  double b2_i, b2_ii, b2_iii, b2_iv;
};
struct AinfConstants {
  double ainf_i, ainf_ii;
};
B2Constants b2_constants(const WeightedSpace& space, int shifts, Exec exec = Exec::parallel);
AinfConstants ainf_constants(const WeightedSpace& space, int shifts, Exec exec = Exec::parallel);
double thewest_constant(const WeightedSpace& space, int shifts, Exec exec = Exec::parallel);

/// The five determinant quantities on one cube; throws std::logic_error if
/// they are not non-increasing to 1e-9 relative.
std::array<double, 5> det_chain_check(const WeightedSpace& space, const Box& q);

/// Scalar weight equivalences on the cube family (N = 1 only).
struct ScalarAinftyReport {
  std::vector<double> p_grid, ap_prime;  // sup avg w * (avg w^-(p-1))^(1/(p-1))
  double ainf = 1;                       // sup avg w / exp(avg ln w)
  std::vector<double> beta_grid, alpha;  // sup sigma(E)/sigma(Q) over mu(E) <= beta mu(Q)
  double delta_fit = 1;                  // largest delta with y <= x^delta on every sample
  std::vector<double> q_grid, bq;        // sup (avg w^q)^(1/q) / avg w
  std::size_t subset_samples = 0;
};
ScalarAinftyReport scalar_ainfty_report(const WeightedSpace& space, int shifts, std::uint64_t seed,
                                        Exec exec = Exec::parallel);

struct CorollaryReport {
  /// sup over cubes of |thewest - b2_iv^2 ainf_ii^2| / thewest.
  double identity_residual = 0;
  double thewest = 1, b2_iv = 1, ainf_ii = 1;
  /// sup over cubes and sampled a of B2(|W a|) on the cube, and of that
  /// value divided by b2_ii of the same cube (never above 1).
  double column_b2 = 1;
  double column_ratio = 0;
  bool diagonal = false;
  /// Diagonal fields only: sup over cubes |b2_ii - max_i B2(w_i)|.
  double diagonal_residual = 0;
};
CorollaryReport corollary_relations(const WeightedSpace& space, int shifts, Exec exec = Exec::parallel);

}  // namespace dwlab
