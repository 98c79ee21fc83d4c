#pragma once

// Dyadic grids on [0,1)^n, piecewise-constant fields on the finest cells, the
// doubling measure mu, exact cube averages W_Q and the matrix weighted
// averaging operators E_Q, E_t.

#include <array>
#include <cstdint>
#include <compare>
#include <span>
#include <string>
#include <vector>

#include "dwlab/matrix.hpp"
#include "dwlab/parallel.hpp"

namespace dwlab {

inline constexpr int kMaxDim = 3;
using Coords = std::array<std::int64_t, kMaxDim>;

/// Dyadic cube of sidelength 2^-level; `index` is the lexicographic position
/// of its coordinates among the level's cubes (first axis most significant).
struct DyadicCube {
  int level = 0;
  std::uint64_t index = 0;
  friend auto operator<=>(const DyadicCube&, const DyadicCube&) = default;
};

/// Cell-aligned cube used for the class constants: sidelength
/// 2^-level, lower corner `lo` in finest-cell units. `shift` records which
/// translated grid produced it (0 = dyadic).
struct Box {
  int level = 0;
  Coords lo{};
  int shift = 0;
};

class Grid {
 public:
  Grid(int dim, int finest_level);

  int dim() const { return dim_; }
  int finest_level() const { return finest_; }
  std::int64_t cells_per_axis() const { return std::int64_t{1} << finest_; }
  std::uint64_t cell_count() const { return cubes_at(finest_); }
  std::uint64_t cubes_at(int level) const { return std::uint64_t{1} << (dim_ * level); }
  std::uint64_t cube_count() const { return offsets_.back(); }
  std::int64_t side_cells(int level) const { return std::int64_t{1} << (finest_ - level); }
  double volume(int level) const;

  /// Global id over all cubes of all levels, coarse levels first.
  std::uint64_t id(const DyadicCube& q) const { return offsets_[static_cast<std::size_t>(q.level)] + q.index; }
  DyadicCube from_id(std::uint64_t id) const;

  DyadicCube root() const { return {0, 0}; }
  DyadicCube cube(int level, const Coords& c) const;
  Coords coords(const DyadicCube& q) const;
  DyadicCube parent(const DyadicCube& q) const;
  std::vector<DyadicCube> children(const DyadicCube& q) const;
  bool contains(const DyadicCube& outer, const DyadicCube& inner) const;
  DyadicCube ancestor(const DyadicCube& q, int level) const;
  DyadicCube cell_cube(std::uint64_t cell) const { return {finest_, cell}; }

  std::uint64_t cell_index(const Coords& cell) const;
  Coords cell_coords(std::uint64_t cell) const;

  void validate(const DyadicCube& q) const;
  std::string describe(const DyadicCube& q) const;
  std::string describe(const Box& b) const;
  /// Parses "level,c0[,c1[,c2]]".
  DyadicCube parse_cube(const std::string& text) const;

  Box box_of(const DyadicCube& q) const;

  /// Visits the finest cells of a dyadic cube in lexicographic order.
  template <class F>
  void for_each_cell(const DyadicCube& q, F&& f) const {
    Box b = box_of(q);
    for_each_cell(b, std::forward<F>(f));
  }

  template <class F>
  void for_each_cell(const Box& b, F&& f) const {
    const std::int64_t s = side_cells(b.level);
    Coords c{};
    visit_cells(b, s, 0, c, f);
  }

  /// Visits every dyadic R with R subset of q (q included) in preorder.
  template <class F>
  void for_each_subcube(const DyadicCube& q, F&& f) const {
    f(q);
    if (q.level == finest_) return;
    for (const DyadicCube& c : children(q)) for_each_subcube(c, f);
  }

 private:
  template <class F>
  void visit_cells(const Box& b, std::int64_t s, int axis, Coords& c, F& f) const {
    if (axis == dim_) {
      f(cell_index(c));
      return;
    }
    for (std::int64_t k = 0; k < s; ++k) {
      c[static_cast<std::size_t>(axis)] = b.lo[static_cast<std::size_t>(axis)] + k;
      visit_cells(b, s, axis + 1, c, f);
    }
  }

  int dim_;
  int finest_;
  std::vector<std::uint64_t> offsets_;
};

/// Values attached to the finest cells; `components` numbers per cell.
class CellField {
 public:
  CellField(Grid grid, std::size_t components, Vec data);
  CellField(Grid grid, std::size_t components);

  const Grid& grid() const { return grid_; }
  std::size_t components() const { return components_; }
  std::span<const double> at(std::uint64_t cell) const {
    return std::span<const double>(data_).subspan(cell * components_, components_);
  }
  std::span<double> at(std::uint64_t cell) {
    return std::span<double>(data_).subspan(cell * components_, components_);
  }
  const Vec& data() const { return data_; }

 private:
  Grid grid_;
  std::size_t components_;
  Vec data_;
};

/// Doubling measure d mu = mu(x) dx with piecewise-constant density.
class MeasuredGrid {
 public:
  MeasuredGrid(Grid grid, Vec density);
  static MeasuredGrid lebesgue(const Grid& grid);

  const Grid& grid() const { return grid_; }
  const Vec& density() const { return density_; }
  double cell_mass(std::uint64_t cell) const { return density_[cell] * cell_volume_; }

  /// mu(Q), exact finite sum; throws when Q lies outside the grid.
  double measure(const DyadicCube& q) const;
  double measure(const Box& b) const;
  /// mu of the real box [lo, hi) intersected with [0,1)^n.
  double measure_region(std::span<const double> lo, std::span<const double> hi) const;

 private:
  Grid grid_;
  Vec density_;
  double cell_volume_;
  Vec mass_;
};

/// Matrix weight: one SPD value per finest cell.
class WeightField {
 public:
  WeightField(Grid grid, std::vector<Matrix> cells);
  const Grid& grid() const { return grid_; }
  std::size_t dim() const { return dim_; }
  const SpdMatrix& at(std::uint64_t cell) const { return cells_[cell]; }
  const std::vector<SpdMatrix>& cells() const { return cells_; }

 private:
  Grid grid_;
  std::size_t dim_;
  std::vector<SpdMatrix> cells_;
};

/// A measured grid together with a matrix weight and the precomputed dyadic
/// averages W_Q. Immutable.
class WeightedSpace {
 public:
  WeightedSpace(MeasuredGrid mu, WeightField w);

  const Grid& grid() const { return mu_.grid(); }
  const MeasuredGrid& mu() const { return mu_; }
  const WeightField& weight() const { return w_; }
  std::size_t dim() const { return w_.dim(); }

  double measure(const DyadicCube& q) const { return mu_.measure(q); }
  /// W_Q = mu(Q)^-1 int_Q W dmu.
  const SpdMatrix& average(const DyadicCube& q) const;
  const SpdMatrix& average_inverse(const DyadicCube& q) const;

 private:
  MeasuredGrid mu_;
  WeightField w_;
  std::vector<SpdMatrix> avg_;
  std::vector<SpdMatrix> avg_inv_;
};

/// W_Q as a free function.
const SpdMatrix& avg_matrix(const WeightedSpace& space, const DyadicCube& q);

/// E_Q f = (int_Q W dmu)^-1 int_Q W f dmu for a vector field with N
/// components per cell.
Vec weighted_avg(const WeightedSpace& space, const CellField& f, const DyadicCube& q);

/// Field constant on each level-t cube, equal to E_Q f there.
CellField expectation_Et(const WeightedSpace& space, const CellField& f, int t_level, Exec exec = Exec::parallel);

/// E_R f for every dyadic R inside a fixed cube Q, computed bottom-up from
/// the cell values of f on Q (given in for_each_cell order).
class SubtreeAverages {
 public:
  SubtreeAverages(const WeightedSpace& space, const DyadicCube& q, std::span<const Vec> cell_values);
  const DyadicCube& root() const { return root_; }
  Vec at(const DyadicCube& r) const;
  /// int_R W f dmu.
  const Vec& integral(const DyadicCube& r) const;

 private:
  std::size_t local_id(const DyadicCube& r) const;

  const WeightedSpace* space_;
  DyadicCube root_;
  Coords root_coords_{};
  std::vector<std::size_t> offsets_;
  std::vector<Vec> integrals_;
};

/// sup over sampled cubes Q of mu(2Q)/mu(Q), 2Q clipped to [0,1)^n. The
/// sample is every dyadic cube of level 0..L+1 on the first `shifts`
/// translated grids (offsets j/3 of the sidelength per axis).
struct DoublingResult {
  double constant = 1.0;
  int level = 0;
  Vec lo;
};
DoublingResult doubling_check(const MeasuredGrid& g, int shifts, Exec exec = Exec::parallel);

/// Number of third-shift translated grids, 3^n.
int default_shifts(int dim);

}  // namespace dwlab
