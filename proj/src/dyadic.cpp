#include "dwlab/dyadic.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace dwlab {

namespace {

std::uint64_t lex_index(const Coords& c, int dim, std::int64_t side) {
  std::uint64_t idx = 0;
  for (int a = 0; a < dim; ++a) idx = idx * static_cast<std::uint64_t>(side) + static_cast<std::uint64_t>(c[static_cast<std::size_t>(a)]);
  return idx;
}

Coords lex_coords(std::uint64_t idx, int dim, std::int64_t side) {
  Coords c{};
  for (int a = dim - 1; a >= 0; --a) {
    c[static_cast<std::size_t>(a)] = static_cast<std::int64_t>(idx % static_cast<std::uint64_t>(side));
    idx /= static_cast<std::uint64_t>(side);
  }
  return c;
}

}  // namespace

// ---------------------------------------------------------------------------
// Grid

Grid::Grid(int dim, int finest_level) : dim_(dim), finest_(finest_level) {
  if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("Grid: dimension must be in [1, 3]");
  if (finest_level < 0 || dim * finest_level > 40)
    throw std::invalid_argument("Grid: finest level out of range");
  offsets_.resize(static_cast<std::size_t>(finest_level) + 2);
  offsets_[0] = 0;
  for (int k = 0; k <= finest_level; ++k)
    offsets_[static_cast<std::size_t>(k) + 1] = offsets_[static_cast<std::size_t>(k)] + cubes_at(k);
}

double Grid::volume(int level) const { return std::ldexp(1.0, -dim_ * level); }

DyadicCube Grid::from_id(std::uint64_t id) const {
  if (id >= cube_count()) throw std::out_of_range("Grid::from_id: id out of range");
  const auto it = std::upper_bound(offsets_.begin(), offsets_.end(), id);
  const auto level = static_cast<int>(it - offsets_.begin()) - 1;
  return {level, id - offsets_[static_cast<std::size_t>(level)]};
}

DyadicCube Grid::cube(int level, const Coords& c) const {
  if (level < 0 || level > finest_) throw std::out_of_range("Grid::cube: level out of range");
  const std::int64_t side = std::int64_t{1} << level;
  for (int a = 0; a < dim_; ++a)
    if (c[static_cast<std::size_t>(a)] < 0 || c[static_cast<std::size_t>(a)] >= side)
      throw std::out_of_range("Grid::cube: coordinates out of range");
  return {level, lex_index(c, dim_, side)};
}

Coords Grid::coords(const DyadicCube& q) const { return lex_coords(q.index, dim_, std::int64_t{1} << q.level); }

DyadicCube Grid::parent(const DyadicCube& q) const {
  if (q.level == 0) throw std::invalid_argument("Grid::parent: root has no parent");
  Coords c = coords(q);
  for (int a = 0; a < dim_; ++a) c[static_cast<std::size_t>(a)] /= 2;
  return {q.level - 1, lex_index(c, dim_, std::int64_t{1} << (q.level - 1))};
}

DyadicCube Grid::ancestor(const DyadicCube& q, int level) const {
  if (level > q.level || level < 0) throw std::invalid_argument("Grid::ancestor: bad level");
  Coords c = coords(q);
  for (int a = 0; a < dim_; ++a) c[static_cast<std::size_t>(a)] >>= (q.level - level);
  return {level, lex_index(c, dim_, std::int64_t{1} << level)};
}

std::vector<DyadicCube> Grid::children(const DyadicCube& q) const {
  if (q.level >= finest_) return {};
  const Coords c = coords(q);
  const std::int64_t side = std::int64_t{1} << (q.level + 1);
  const int count = 1 << dim_;
  std::vector<DyadicCube> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int b = 0; b < count; ++b) {
    Coords cc{};
    for (int a = 0; a < dim_; ++a) {
      const int bit = (b >> (dim_ - 1 - a)) & 1;
      cc[static_cast<std::size_t>(a)] = 2 * c[static_cast<std::size_t>(a)] + bit;
    }
    out.push_back({q.level + 1, lex_index(cc, dim_, side)});
  }
  return out;
}

bool Grid::contains(const DyadicCube& outer, const DyadicCube& inner) const {
  if (inner.level < outer.level) return false;
  return ancestor(inner, outer.level) == outer;
}

std::uint64_t Grid::cell_index(const Coords& cell) const { return lex_index(cell, dim_, cells_per_axis()); }

Coords Grid::cell_coords(std::uint64_t cell) const { return lex_coords(cell, dim_, cells_per_axis()); }

void Grid::validate(const DyadicCube& q) const {
  if (q.level < 0 || q.level > finest_) {
    std::ostringstream os;
    os << "cube level " << q.level << " outside grid levels 0.." << finest_;
    throw std::out_of_range(os.str());
  }
  if (q.index >= cubes_at(q.level)) throw std::out_of_range("cube index outside grid");
}

std::string Grid::describe(const DyadicCube& q) const {
  std::ostringstream os;
  os << q.level;
  const Coords c = coords(q);
  for (int a = 0; a < dim_; ++a) os << ',' << c[static_cast<std::size_t>(a)];
  return os.str();
}

std::string Grid::describe(const Box& b) const {
  std::ostringstream os;
  os << b.level;
  for (int a = 0; a < dim_; ++a) os << ',' << b.lo[static_cast<std::size_t>(a)];
  os << "@" << b.shift;
  return os.str();
}

DyadicCube Grid::parse_cube(const std::string& text) const {
  std::vector<std::int64_t> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      parts.push_back(std::stoll(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw std::invalid_argument("cube spec must be 'level,c0[,c1[,c2]]': " + text);
    }
  }
  if (parts.size() != static_cast<std::size_t>(dim_) + 1)
    throw std::invalid_argument("cube spec must be 'level,c0[,c1[,c2]]': " + text);
  Coords c{};
  for (int a = 0; a < dim_; ++a) c[static_cast<std::size_t>(a)] = parts[static_cast<std::size_t>(a) + 1];
  return cube(static_cast<int>(parts[0]), c);
}

Box Grid::box_of(const DyadicCube& q) const {
  validate(q);
  Box b;
  b.level = q.level;
  const Coords c = coords(q);
  const std::int64_t s = side_cells(q.level);
  for (int a = 0; a < dim_; ++a) b.lo[static_cast<std::size_t>(a)] = c[static_cast<std::size_t>(a)] * s;
  return b;
}

// ---------------------------------------------------------------------------
// CellField

CellField::CellField(Grid grid, std::size_t components, Vec data)
    : grid_(std::move(grid)), components_(components), data_(std::move(data)) {
  if (data_.size() != grid_.cell_count() * components_)
    throw std::invalid_argument("CellField: data size does not match grid");
}

CellField::CellField(Grid grid, std::size_t components)
    : grid_(std::move(grid)), components_(components), data_(grid_.cell_count() * components, 0.0) {}

// ---------------------------------------------------------------------------
// MeasuredGrid

MeasuredGrid::MeasuredGrid(Grid grid, Vec density)
    : grid_(std::move(grid)), density_(std::move(density)), cell_volume_(grid_.volume(grid_.finest_level())) {
  if (density_.size() != grid_.cell_count()) throw std::invalid_argument("MeasuredGrid: density size mismatch");
  for (std::size_t c = 0; c < density_.size(); ++c)
    if (!(density_[c] > 0.0) || !std::isfinite(density_[c])) {
      std::ostringstream os;
      os << "MeasuredGrid: density at cell " << c << " must be positive and finite";
      throw std::invalid_argument(os.str());
    }
  mass_.assign(grid_.cube_count(), 0.0);
  const int L = grid_.finest_level();
  for (std::uint64_t c = 0; c < grid_.cell_count(); ++c) mass_[grid_.id({L, c})] = cell_mass(c);
  for (int k = L - 1; k >= 0; --k)
    for (std::uint64_t i = 0; i < grid_.cubes_at(k); ++i) {
      const DyadicCube q{k, i};
      double s = 0.0;
      for (const DyadicCube& ch : grid_.children(q)) s += mass_[grid_.id(ch)];
      mass_[grid_.id(q)] = s;
    }
}

MeasuredGrid MeasuredGrid::lebesgue(const Grid& grid) { return MeasuredGrid(grid, Vec(grid.cell_count(), 1.0)); }

double MeasuredGrid::measure(const DyadicCube& q) const {
  grid_.validate(q);
  return mass_[grid_.id(q)];
}

double MeasuredGrid::measure(const Box& b) const {
  double s = 0.0;
  grid_.for_each_cell(b, [&](std::uint64_t c) { s += cell_mass(c); });
  return s;
}

double MeasuredGrid::measure_region(std::span<const double> lo, std::span<const double> hi) const {
  const int n = grid_.dim();
  if (lo.size() != static_cast<std::size_t>(n) || hi.size() != static_cast<std::size_t>(n))
    throw std::invalid_argument("measure_region: dimension mismatch");
  const double cells = static_cast<double>(grid_.cells_per_axis());
  std::array<std::int64_t, kMaxDim> first{}, last{};
  std::array<double, kMaxDim> a{}, b{};
  for (int d = 0; d < n; ++d) {
    const auto i = static_cast<std::size_t>(d);
    a[i] = std::clamp(lo[i], 0.0, 1.0);
    b[i] = std::clamp(hi[i], 0.0, 1.0);
    if (!(b[i] > a[i])) return 0.0;
    first[i] = static_cast<std::int64_t>(std::floor(a[i] * cells));
    last[i] = std::min(grid_.cells_per_axis() - 1, static_cast<std::int64_t>(std::ceil(b[i] * cells)) - 1);
  }
  double total = 0.0;
  Coords c{};
  // Odometer over the overlapped cell range.
  for (int d = 0; d < n; ++d) c[static_cast<std::size_t>(d)] = first[static_cast<std::size_t>(d)];
  while (true) {
    double vol = 1.0;
    for (int d = 0; d < n; ++d) {
      const auto i = static_cast<std::size_t>(d);
      const double cl = static_cast<double>(c[i]) / cells;
      const double ch = static_cast<double>(c[i] + 1) / cells;
      vol *= std::max(0.0, std::min(b[i], ch) - std::max(a[i], cl));
    }
    total += vol * density_[grid_.cell_index(c)];
    int d = n - 1;
    while (d >= 0) {
      const auto i = static_cast<std::size_t>(d);
      if (++c[i] <= last[i]) break;
      c[i] = first[i];
      --d;
    }
    if (d < 0) break;
  }
  return total;
}

// ---------------------------------------------------------------------------
// WeightField / WeightedSpace

WeightField::WeightField(Grid grid, std::vector<Matrix> cells) : grid_(std::move(grid)) {
  if (cells.size() != grid_.cell_count()) throw std::invalid_argument("WeightField: cell count mismatch");
  dim_ = cells.empty() ? 0 : cells.front().rows();
  cells_.reserve(cells.size());
  for (std::size_t c = 0; c < cells.size(); ++c) {
    if (cells[c].rows() != dim_ || cells[c].cols() != dim_)
      throw std::invalid_argument("WeightField: inconsistent matrix shape at cell " + std::to_string(c));
    try {
      cells_.emplace_back(cells[c]);
    } catch (const NotPositiveDefinite& e) {
      throw NotPositiveDefinite("weight at cell " + std::to_string(c) + ": " + e.what(), e.eigenvalue());
    }
  }
}

WeightedSpace::WeightedSpace(MeasuredGrid mu, WeightField w) : mu_(std::move(mu)), w_(std::move(w)) {
  const Grid& g = mu_.grid();
  if (g.dim() != w_.grid().dim() || g.finest_level() != w_.grid().finest_level())
    throw std::invalid_argument("WeightedSpace: measure and weight grids differ");
  const std::size_t n = w_.dim();
  std::vector<Matrix> integral(g.cube_count(), Matrix(n, n));
  const int L = g.finest_level();
  for (std::uint64_t c = 0; c < g.cell_count(); ++c) integral[g.id({L, c})] = w_.at(c).matrix() * mu_.cell_mass(c);
  for (int k = L - 1; k >= 0; --k)
    for (std::uint64_t i = 0; i < g.cubes_at(k); ++i) {
      const DyadicCube q{k, i};
      Matrix s(n, n);
      for (const DyadicCube& ch : g.children(q)) s += integral[g.id(ch)];
      integral[g.id(q)] = std::move(s);
    }
  avg_.reserve(g.cube_count());
  avg_inv_.reserve(g.cube_count());
  for (std::uint64_t id = 0; id < g.cube_count(); ++id) {
    const DyadicCube q = g.from_id(id);
    avg_.emplace_back(integral[id] * (1.0 / mu_.measure(q)));
    avg_inv_.push_back(avg_.back().inverse());
  }
}

const SpdMatrix& WeightedSpace::average(const DyadicCube& q) const {
  grid().validate(q);
  return avg_[grid().id(q)];
}

const SpdMatrix& WeightedSpace::average_inverse(const DyadicCube& q) const {
  grid().validate(q);
  return avg_inv_[grid().id(q)];
}

const SpdMatrix& avg_matrix(const WeightedSpace& space, const DyadicCube& q) { return space.average(q); }

Vec weighted_avg(const WeightedSpace& space, const CellField& f, const DyadicCube& q) {
  const std::size_t n = space.dim();
  if (f.components() != n) throw std::invalid_argument("weighted_avg: field has wrong number of components");
  space.grid().validate(q);
  Vec s(n, 0.0);
  space.grid().for_each_cell(q, [&](std::uint64_t c) {
    const Vec wf = space.weight().at(c).matrix() * f.at(c);
    const double m = space.mu().cell_mass(c);
    for (std::size_t i = 0; i < n; ++i) s[i] += m * wf[i];
  });
  const Matrix integral = space.average(q).matrix() * space.measure(q);
  // int_Q W dmu is SPD for an SPD field; the guard catches a degenerate sum.
  const SpdMatrix integral_spd(integral);
  return integral_spd.inverse().matrix() * s;
}

CellField expectation_Et(const WeightedSpace& space, const CellField& f, int t_level, Exec exec) {
  const Grid& g = space.grid();
  if (t_level < 0 || t_level > g.finest_level()) throw std::out_of_range("expectation_Et: level out of range");
  CellField out(g, f.components());
  for_each_index(g.cubes_at(t_level), exec, [&](std::size_t i) {
    const DyadicCube q{t_level, i};
    const Vec e = weighted_avg(space, f, q);
    g.for_each_cell(q, [&](std::uint64_t c) { std::copy(e.begin(), e.end(), out.at(c).begin()); });
  });
  return out;
}

// ---------------------------------------------------------------------------
// SubtreeAverages

SubtreeAverages::SubtreeAverages(const WeightedSpace& space, const DyadicCube& q, std::span<const Vec> cell_values)
    : space_(&space), root_(q) {
  const Grid& g = space.grid();
  g.validate(q);
  root_coords_ = g.coords(q);
  const int depth = g.finest_level() - q.level;
  const int n = g.dim();
  offsets_.resize(static_cast<std::size_t>(depth) + 2);
  offsets_[0] = 0;
  for (int d = 0; d <= depth; ++d)
    offsets_[static_cast<std::size_t>(d) + 1] = offsets_[static_cast<std::size_t>(d)] + (std::size_t{1} << (n * d));
  if (cell_values.size() != (std::size_t{1} << (n * depth)))
    throw std::invalid_argument("SubtreeAverages: wrong number of cell values");
  integrals_.assign(offsets_.back(), Vec(space.dim(), 0.0));

  std::size_t k = 0;
  g.for_each_cell(q, [&](std::uint64_t c) {
    if (cell_values[k].size() != space.dim()) throw std::invalid_argument("SubtreeAverages: bad vector size");
    Vec wf = space.weight().at(c).matrix() * cell_values[k];
    const double m = space.mu().cell_mass(c);
    for (double& x : wf) x *= m;
    integrals_[offsets_[static_cast<std::size_t>(depth)] + k] = std::move(wf);
    ++k;
  });
  for (int d = depth - 1; d >= 0; --d) {
    const std::int64_t side = std::int64_t{1} << d;
    const std::size_t count = std::size_t{1} << (n * d);
    for (std::size_t i = 0; i < count; ++i) {
      const Coords c = lex_coords(i, n, side);
      Vec& acc = integrals_[offsets_[static_cast<std::size_t>(d)] + i];
      for (int b = 0; b < (1 << n); ++b) {
        Coords cc{};
        for (int a = 0; a < n; ++a)
          cc[static_cast<std::size_t>(a)] = 2 * c[static_cast<std::size_t>(a)] + ((b >> (n - 1 - a)) & 1);
        const Vec& child = integrals_[offsets_[static_cast<std::size_t>(d) + 1] + lex_index(cc, n, 2 * side)];
        for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += child[j];
      }
    }
  }
}

std::size_t SubtreeAverages::local_id(const DyadicCube& r) const {
  const Grid& g = space_->grid();
  if (!g.contains(root_, r)) throw std::invalid_argument("SubtreeAverages: cube outside root");
  const int d = r.level - root_.level;
  Coords c = g.coords(r);
  for (int a = 0; a < g.dim(); ++a) c[static_cast<std::size_t>(a)] -= root_coords_[static_cast<std::size_t>(a)] << d;
  return offsets_[static_cast<std::size_t>(d)] + lex_index(c, g.dim(), std::int64_t{1} << d);
}

const Vec& SubtreeAverages::integral(const DyadicCube& r) const { return integrals_[local_id(r)]; }

Vec SubtreeAverages::at(const DyadicCube& r) const {
  const Vec& s = integral(r);
  return scaled(space_->average_inverse(r).matrix() * s, 1.0 / space_->measure(r));
}

// ---------------------------------------------------------------------------
// Doubling

int default_shifts(int dim) {
  int k = 1;
  for (int i = 0; i < dim; ++i) k *= 3;
  return k;
}

DoublingResult doubling_check(const MeasuredGrid& g, int shifts, Exec exec) {
  const int n = g.grid().dim();
  const int L = g.grid().finest_level();
  const int k_shifts = std::clamp(shifts, 1, default_shifts(n));
  DoublingResult best;
  best.constant = 0.0;
  for (int level = 0; level <= L + 1; ++level) {
    const double side = std::ldexp(1.0, -level);
    const std::int64_t per_axis = std::int64_t{1} << level;
    for (int t = 0; t < k_shifts; ++t) {
      // Per-axis third-offsets j in {0,1,2}; digits of t, first axis most significant.
      std::array<int, kMaxDim> j{};
      int rest = t;
      for (int a = n - 1; a >= 0; --a) {
        j[static_cast<std::size_t>(a)] = rest % 3;
        rest /= 3;
      }
      std::array<std::int64_t, kMaxDim> count{};
      std::uint64_t total = 1;
      for (int a = 0; a < n; ++a) {
        count[static_cast<std::size_t>(a)] = j[static_cast<std::size_t>(a)] == 0 ? per_axis : per_axis - 1;
        total *= static_cast<std::uint64_t>(std::max<std::int64_t>(0, count[static_cast<std::size_t>(a)]));
      }
      if (total == 0) continue;
      Vec ratios(total);
      for_each_index(total, exec, [&](std::size_t idx) {
        Vec lo(static_cast<std::size_t>(n)), hi(static_cast<std::size_t>(n)), lo2(static_cast<std::size_t>(n)),
            hi2(static_cast<std::size_t>(n));
        std::size_t rem = idx;
        for (int a = n - 1; a >= 0; --a) {
          const auto i = static_cast<std::size_t>(a);
          const auto m = static_cast<std::int64_t>(rem % static_cast<std::size_t>(count[i]));
          rem /= static_cast<std::size_t>(count[i]);
          lo[i] = (static_cast<double>(m) + j[i] / 3.0) * side;
          hi[i] = lo[i] + side;
          lo2[i] = lo[i] - 0.5 * side;
          hi2[i] = hi[i] + 0.5 * side;
        }
        ratios[idx] = g.measure_region(lo2, hi2) / g.measure_region(lo, hi);
      });
      for (std::size_t idx = 0; idx < total; ++idx) {
        if (ratios[idx] > best.constant) {
          best.constant = ratios[idx];
          best.level = level;
          best.lo.assign(static_cast<std::size_t>(n), 0.0);
          std::size_t rem = idx;
          for (int a = n - 1; a >= 0; --a) {
            const auto i = static_cast<std::size_t>(a);
            const auto m = static_cast<std::int64_t>(rem % static_cast<std::size_t>(count[i]));
            rem /= static_cast<std::size_t>(count[i]);
            best.lo[i] = (static_cast<double>(m) + j[i] / 3.0) * side;
          }
        }
      }
    }
  }
  return best;
}

}  // namespace dwlab
