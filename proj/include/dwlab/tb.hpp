#pragma once

// Carleson functionals for a per-cube matrix field gamma(R) (one value per
// Whitney region), test function families b_Q^v, the hypothesis constants
// C1..C4, and the numerical run of the sector / corona / Kato argument.

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "dwlab/cone.hpp"
#include "dwlab/dyadic.hpp"
#include "dwlab/stopping.hpp"

namespace dwlab {

enum class GammaNorm { op, frobenius };
double gamma_norm(const Matrix& g, GammaNorm kind);

/// gamma(R) for every dyadic R of the grid, an M x N matrix each, indexed by
/// the grid's global cube id.
class CarlesonField {
 public:
  CarlesonField(Grid grid, std::size_t rows, std::size_t cols);

  const Grid& grid() const { return grid_; }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  const Matrix& at(const DyadicCube& r) const { return values_[grid_.id(r)]; }
  void set(const DyadicCube& r, Matrix m);

 private:
  Grid grid_;
  std::size_t rows_, cols_;
  std::vector<Matrix> values_;
};

/// int over one Whitney layer of dt/t.
inline const double kLn2 = std::log(2.0);

/// sum over R inside q of |gamma(R)|^2 mu(R) ln 2.
double box_integral(const CarlesonField& gamma, const MeasuredGrid& mu, const DyadicCube& q,
                    GammaNorm kind = GammaNorm::op);

struct CarlesonNorm {
  double value = 0;
  DyadicCube argmax;
};
/// sup over dyadic Q of box_integral(Q) / mu(Q).
CarlesonNorm carleson_norm(const CarlesonField& gamma, const MeasuredGrid& mu, GammaNorm kind = GammaNorm::op);

/// sum over R inside q of |gamma(R) E_R b|^2 mu(R) ln 2; b given on the cells
/// of q in for_each_cell order.
double testfun_carleson(const CarlesonField& gamma, const WeightedSpace& space, const DyadicCube& q,
                        std::span<const Vec> b_cells);

/// Rule (Q, v) -> b_Q^v. `cells` is required. `expectation` (E_R b_Q^v for R
/// inside Q) and `gram` (G with int_Q |b_Q^v|^2 dmu = mu(Q) v^T G v) are
/// optional closed forms; when `linear` is set b_Q^v depends linearly on v.
struct TestFamily {
  std::string name;
  std::function<std::vector<Vec>(const DyadicCube& q, const Vec& v)> cells;
  std::function<Vec(const DyadicCube& q, const DyadicCube& r, const Vec& v)> expectation;
  std::function<Matrix(const DyadicCube& q)> gram;
  bool linear = false;
};

/// b_Q^v(x) = W(x)^-1 W_Q v on Q, so E_R b_Q^v = W_R^-1 W_Q v for R inside Q
/// and E_Q b_Q^v = v. Throws std::domain_error for a cell whose W has
/// condition number above 1e12. The space must outlive the family.
TestFamily canonical_family(const WeightedSpace& space);

/// E_R b_Q^v through the closed form when present, else from cell values.
Vec family_expectation(const TestFamily& fam, const WeightedSpace& space, const DyadicCube& q, const DyadicCube& r,
                       const Vec& v);

/// Memoizing E_R b_S^{v0} for a fixed v0, suitable for kato_criterion. Not
/// thread safe; make one per worker.
ExpectationFn family_expectation_fn(const TestFamily& fam, const WeightedSpace& space, const Vec& v0);

struct Hypotheses {
  double c1 = 0;  // doubling constant
  double c2 = 0;  // sqrt of the W^2 in A-infinity constant
  double c3 = 0;  // sup (mu(Q)^-1 int |b_Q^v|^2)^1/2
  double c4 = 0;  // sup (mu(Q)^-1 testfun_carleson)^1/2
  DyadicCube c3_cube, c4_cube;
  double max_normalization_error = 0;  // max |(v, E_Q b_Q^v) - 1|
};
/// Linear families with a closed-form expectation get C3 and C4 as exact
/// eigenvalue sups over unit v; otherwise the sup runs over 2N signed basis
/// vectors plus `vec_samples` random unit vectors.
Hypotheses verify_hypotheses(const WeightedSpace& space, const CarlesonField& gamma, const TestFamily& fam,
                             int vec_samples, std::uint64_t seed, int shifts, Exec exec = Exec::parallel);

// gamma generators
CarlesonField zero_gamma(const Grid& g, std::size_t rows, std::size_t cols);
CarlesonField constant_gamma(const Grid& g, const Matrix& value);
/// Row v^T scaled by 2^(-rate * level).
CarlesonField damped_gamma(const Grid& g, const Vec& v, double rate);
/// First row of W_R - W_parent(R); zero at the root.
CarlesonField martingale_gamma(const WeightedSpace& space);
/// Entries uniform in [-1, 1].
CarlesonField random_gamma_field(const Grid& g, std::size_t rows, std::size_t cols, std::uint64_t seed);

struct TbParams {
  double eps1 = 0.05, eps2 = 0.1, eps3 = 0.00125, lambda = 16;
  std::uint64_t seed = 1;
  std::size_t net_probes = 100000;
  GammaNorm norm = GammaNorm::op;
};
/// eps3 = eps2^2/8, eps1 = eps2/2, lambda = 16.
TbParams proof_order_params(double eps2 = 0.1);

struct ChainViolation {
  std::uint64_t sector = 0;
  DyadicCube root, s1, s2, r;
  std::string what;
  double value = 0, bound = 0;
};

struct SectorReport {
  std::uint64_t net_index = 0;
  Vec v0;
  std::size_t cubes = 0;  // cubes of the box assigned to this sector
  double corona_packing = 0;
  double kato_max_first_generation = 0;
  std::size_t pieces = 0;
  double direct = 0;     // sum of |gamma|^2 mu ln2 over assigned cubes
  double assembled = 0;  // sum of (2/eps1^3)^2 |gamma E_R b_S2|^2 mu ln2
  /// max over pieces of sum |gamma E_R b_S2|^2 mu ln2 / mu(S2)
  double max_piece_ratio = 0;
  double decomposition_residual = 0;
};

struct RootReport {
  DyadicCube root;
  double mu = 0;
  double direct = 0;         // box_integral at the root
  double pieces_direct = 0;  // the same sum collected piece by piece
  double assembled = 0;
  double partition_residual = 0;
  double volberg_packing = 0;
  std::size_t uncovered = 0;  // cubes with gamma != 0 in no tested sector
  std::vector<SectorReport> sectors;
};

struct TbReport {
  TbParams params;
  double carleson_norm = 0;
  DyadicCube argmax;
  /// assembled / mu at the cube attaining the Carleson norm.
  double assembled_bound = 0;
  double partition_residual = 0;
  std::uint64_t net_size = 0;
  double net_certificate = 0;
  std::vector<RootReport> roots;
  std::vector<ChainViolation> violations;
};

/// Runs the argument on the unit cube and on the cube attaining the Carleson
/// norm: every cube R with gamma(R) != 0 is assigned to the sector of the
/// net vector nearest to its top right singular vector (or its negative);
/// per active sector, corona then Kato (restricted to G^W) iterated
/// sawtooths; on each piece the pointwise chain is checked cube by cube.
TbReport tb_run(const WeightedSpace& space, const CarlesonField& gamma, const TestFamily& fam, const TbParams& p,
                Exec exec = Exec::parallel);

}  // namespace dwlab
