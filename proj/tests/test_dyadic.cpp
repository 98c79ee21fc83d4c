#include <doctest.h>

#include <cmath>
#include <set>

#include "dwlab/dyadic.hpp"
#include "dwlab/random.hpp"
#include "support.hpp"

using namespace dwlab;
using dwlab::testing::lebesgue_space;
using dwlab::testing::random_space;

TEST_CASE("cube ids, coordinates and parents are consistent") {
  for (int n = 1; n <= 3; ++n) {
    const Grid g(n, 3);
    std::set<std::uint64_t> ids;
    for (std::uint64_t id = 0; id < g.cube_count(); ++id) {
      const DyadicCube q = g.from_id(id);
      CHECK(g.id(q) == id);
      CHECK(g.cube(q.level, g.coords(q)) == q);
      if (q.level > 0) {
        const auto ch = g.children(g.parent(q));
        CHECK(std::count(ch.begin(), ch.end(), q) == 1);
      }
      const auto ch = g.children(q);
      if (q.level < 3) {
        CHECK(ch.size() == (std::size_t{1} << n));
        std::set<DyadicCube> unique(ch.begin(), ch.end());
        CHECK(unique.size() == ch.size());
        for (const auto& c : ch) CHECK(g.contains(q, c));
      } else {
        CHECK(ch.empty());
      }
    }
  }
}

TEST_CASE("cube parsing and validation") {
  const Grid g(2, 3);
  CHECK(g.parse_cube("2,1,3") == g.cube(2, {1, 3, 0}));
  CHECK(g.describe(g.parse_cube("2,1,3")) == "2,1,3");
  CHECK_THROWS(g.parse_cube("2,1"));
  CHECK_THROWS(g.parse_cube("4,0,0"));
  CHECK_THROWS(g.parse_cube("1,2,0"));
  CHECK_THROWS(g.parse_cube("1,a,0"));
  CHECK_THROWS(g.validate(DyadicCube{5, 0}));
}

TEST_CASE("cells of a cube are visited in lexicographic order") {
  const Grid g(2, 2);
  std::vector<std::uint64_t> cells;
  g.for_each_cell(g.cube(1, {1, 0, 0}), [&](std::uint64_t c) { cells.push_back(c); });
  // Cells with x in {2,3}, y in {0,1}: indices 4x + y.
  CHECK(cells == std::vector<std::uint64_t>{8, 9, 12, 13});
}

TEST_CASE("measure examples") {
  const Grid g1(1, 1);
  const MeasuredGrid leb = MeasuredGrid::lebesgue(g1);
  CHECK(leb.measure(g1.root()) == 1.0);
  CHECK(leb.measure(g1.cube(1, {0, 0, 0})) == 0.5);
  const MeasuredGrid mu(g1, {2.0, 1.0});
  CHECK(mu.measure(g1.cube(1, {0, 0, 0})) == 1.0);
  CHECK(mu.measure(g1.root()) == 1.5);
  CHECK_THROWS(mu.measure(DyadicCube{2, 0}));
  CHECK_THROWS(MeasuredGrid(g1, {1.0, 0.0}));
}

TEST_CASE("children measures sum to the parent") {
  Rng rng(1);
  const Grid g(2, 4);
  Vec d(g.cell_count());
  for (double& x : d) x = std::exp(3 * (uniform01(rng) - 0.5));
  const MeasuredGrid mu(g, d);
  for (std::uint64_t id = 0; id < g.cube_count(); ++id) {
    const DyadicCube q = g.from_id(id);
    if (q.level == g.finest_level()) continue;
    double s = 0;
    for (const auto& c : g.children(q)) s += mu.measure(c);
    CHECK(std::abs(s - mu.measure(q)) <= 1e-14 * mu.measure(q));
    CHECK(mu.measure(g.box_of(q)) == doctest::Approx(mu.measure(q)).epsilon(1e-14));
  }
}

TEST_CASE("average matrix examples") {
  const auto s = lebesgue_space(1, 1, {Matrix::diagonal({1.0, 1.0}), Matrix::diagonal({3.0, 1.0})});
  const Matrix& a = avg_matrix(s, s.grid().root()).matrix();
  CHECK(a(0, 0) == doctest::Approx(2.0));
  CHECK(a(1, 1) == doctest::Approx(1.0));
  CHECK(a(0, 1) == 0.0);
  const DyadicCube right = s.grid().cube(1, {1, 0, 0});
  CHECK(avg_matrix(s, right).matrix() == Matrix::diagonal({3.0, 1.0}));
}

TEST_CASE("weighted average examples") {
  const auto s = lebesgue_space(1, 1, {Matrix::diagonal({1.0, 1.0}), Matrix::diagonal({3.0, 1.0})});
  const CellField f(s.grid(), 2, {1.0, 0.0, 0.0, 0.0});
  const Vec e = weighted_avg(s, f, s.grid().root());
  CHECK(e[0] == doctest::Approx(0.25));
  CHECK(e[1] == doctest::Approx(0.0));
  // Constants are reproduced.
  const CellField c(s.grid(), 2, {0.3, -2.0, 0.3, -2.0});
  const Vec ec = weighted_avg(s, c, s.grid().root());
  CHECK(ec[0] == doctest::Approx(0.3));
  CHECK(ec[1] == doctest::Approx(-2.0));
}

TEST_CASE("expectation at level 0 of (1,3) is 2") {
  const auto s = lebesgue_space(1, 1, {Matrix{{1.0}}, Matrix{{1.0}}});
  const CellField f(s.grid(), 1, {1.0, 3.0});
  const CellField e = expectation_Et(s, f, 0);
  CHECK(e.at(0)[0] == doctest::Approx(2.0));
  CHECK(e.at(1)[0] == doctest::Approx(2.0));
  const CellField top = expectation_Et(s, f, 1);
  CHECK(top.data() == f.data());
}

TEST_CASE("E_t is a projection, nested, and bounded by the per-cube reverse Hoelder constant") {
  Rng rng(42);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 1 + trial % 2;
    const std::size_t N = 1 + trial % 3;
    const auto s = random_space(rng, n, 3, N, 0.8);
    const Grid& g = s.grid();
    Vec data(g.cell_count() * N);
    for (double& x : data) x = std::normal_distribution<double>()(rng);
    const CellField f(g, N, data);
    auto l2 = [&](const CellField& h) {
      double t = 0;
      for (std::uint64_t c = 0; c < g.cell_count(); ++c) t += s.mu().cell_mass(c) * dot(h.at(c), h.at(c));
      return std::sqrt(t);
    };
    for (int t = 0; t <= 3; ++t) {
      const CellField et = expectation_Et(s, f, t);
      const CellField et2 = expectation_Et(s, et, t);
      for (std::size_t k = 0; k < data.size(); ++k) CHECK(std::abs(et2.data()[k] - et.data()[k]) <= 1e-12 * (1 + std::abs(et.data()[k])));
      for (int u = 0; u <= t; ++u) {
        const CellField a = expectation_Et(s, et, u);
        const CellField b = expectation_Et(s, f, u);
        for (std::size_t k = 0; k < data.size(); ++k) CHECK(std::abs(a.data()[k] - b.data()[k]) <= 1e-12 * (1 + std::abs(b.data()[k])));
      }
      // Oracle constant: max over level-t cubes of |(avg W^2)^1/2 W_Q^-1|.
      double c = 0;
      for (std::uint64_t i = 0; i < g.cubes_at(t); ++i) {
        const DyadicCube q{t, i};
        Matrix w2(N, N);
        g.for_each_cell(q, [&](std::uint64_t cell) {
          const Matrix& w = s.weight().at(cell).matrix();
          w2 += (w * w) * s.mu().cell_mass(cell);
        });
        const SpdMatrix avg2(w2 * (1.0 / s.measure(q)));
        c = std::max(c, op_norm(avg2.sqrt().matrix() * s.average_inverse(q).matrix()));
      }
      CHECK(l2(et) <= c * l2(f) * (1 + 1e-12));
    }
  }
}

TEST_CASE("subtree averages agree with direct weighted averages") {
  Rng rng(8);
  const auto s = random_space(rng, 2, 3, 2, 0.6);
  const Grid& g = s.grid();
  Vec data(g.cell_count() * 2);
  for (double& x : data) x = std::normal_distribution<double>()(rng);
  const CellField f(g, 2, data);
  const DyadicCube q = g.cube(1, {1, 0, 0});
  std::vector<Vec> vals;
  g.for_each_cell(q, [&](std::uint64_t c) { vals.emplace_back(f.at(c).begin(), f.at(c).end()); });
  const SubtreeAverages sub(s, q, vals);
  g.for_each_subcube(q, [&](const DyadicCube& r) {
    const Vec a = sub.at(r), b = weighted_avg(s, f, r);
    CHECK(a[0] == doctest::Approx(b[0]).epsilon(1e-12));
    CHECK(a[1] == doctest::Approx(b[1]).epsilon(1e-12));
  });
  CHECK_THROWS(sub.at(g.root()));
}

TEST_CASE("doubling examples") {
  for (int n = 1; n <= 2; ++n) {
    const Grid g(n, 2);
    CHECK(doubling_check(MeasuredGrid::lebesgue(g), default_shifts(n)).constant == doctest::Approx(std::pow(2.0, n)));
  }
  const Grid g1(1, 1);
  CHECK(doubling_check(MeasuredGrid(g1, {1.0, 1.0}), 3).constant == doctest::Approx(2.0));
  const DoublingResult r = doubling_check(MeasuredGrid(g1, {1.0, 9.0}), 3);
  CHECK(r.constant == doctest::Approx(6.0));
  CHECK(r.level == 2);
  CHECK(r.lo[0] == doctest::Approx(0.25));
  // The region measure behind it: 2Q = [1/8, 5/8).
  const Vec lo{0.125}, hi{0.625};
  CHECK(MeasuredGrid(g1, {1.0, 9.0}).measure_region(lo, hi) == doctest::Approx(1.5));
}

TEST_CASE("doubling is monotone in the number of shifts and serial equals parallel") {
  Rng rng(4);
  const Grid g(2, 3);
  Vec d(g.cell_count());
  for (double& x : d) x = std::exp(2 * (uniform01(rng) - 0.5));
  const MeasuredGrid mu(g, d);
  double prev = 0;
  for (int k = 1; k <= 9; ++k) {
    const double c = doubling_check(mu, k).constant;
    CHECK(c >= prev);
    prev = c;
  }
  CHECK(doubling_check(mu, 9, Exec::serial).constant == doubling_check(mu, 9, Exec::parallel).constant);
}

TEST_CASE("non positive weights are rejected with the cell id") {
  const Grid g(1, 1);
  try {
    WeightField w(g, {Matrix{{1.0}}, Matrix{{-1.0}}});
    FAIL("expected rejection");
  } catch (const NotPositiveDefinite& e) {
    CHECK(std::string(e.what()).find("cell 1") != std::string::npos);
  }
}
