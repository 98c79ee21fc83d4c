#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <set>

#include "dwlab/cone.hpp"
#include "dwlab/random.hpp"

using namespace dwlab;

TEST_CASE("maximizing vector inequality") {
  const BoundPair a = maximizing_vector_bound(Matrix::identity(2), {1, 0}, {0, 1});
  CHECK(a.lhs == doctest::Approx(1.0));
  CHECK(a.rhs == doctest::Approx(0.0));
  for (double theta : {0.0, 0.3, 1.2, 2.5, -0.7}) {
    const BoundPair b = maximizing_vector_bound(Matrix::diagonal({1.0, 0.0}), {1, 0}, {std::cos(theta), std::sin(theta)});
    CHECK(b.lhs == doctest::Approx(std::abs(std::cos(theta))));
    CHECK(b.rhs == doctest::Approx(std::cos(theta)));
  }
  const Matrix m{{2, 1}, {0, 1}};
  const TopSingular t = top_singular(m);
  const BoundPair e = maximizing_vector_bound(m, t.right, t.right);
  CHECK(e.lhs == doctest::Approx(e.rhs).epsilon(1e-10));
  CHECK_THROWS(maximizing_vector_bound(Matrix(2, 2), {1, 0}, {0, 1}));

  Rng rng(7);
  for (int trial = 0; trial < 20000; ++trial) {
    const std::size_t n = 1 + trial % 4, rows = 1 + trial % 3;
    Matrix a(rows, n);
    for (double& x : a.data()) x = random_gaussian(rng, 1)[0];
    if (trial % 5 == 0) a = Matrix::outer(random_unit(rng, rows), random_unit(rng, n));
    const BoundPair p = maximizing_vector_bound(a, random_unit(rng, n), random_unit(rng, n));
    CHECK(p.lhs >= p.rhs - 1e-9 * op_norm(a));
  }
}

TEST_CASE("net sizes and indexing") {
  const ConeNet n1 = build_net(1, 0.3, 1, 1000);
  CHECK(n1.size() == 2);
  CHECK(n1.vector(0) == Vec{1.0});
  CHECK(n1.vector(1) == Vec{-1.0});

  const ConeNet n2 = build_net(2, 0.5, 1, 20000);
  CHECK(1.0 - std::pow(0.5, 4) / 8.0 == 0.9921875);
  CHECK(n2.size() == 51);
  CHECK(n2.certificate >= n2.threshold());
  // Angular spacing of the ring.
  CHECK(2.0 * std::numbers::pi / 51.0 <= std::acos(0.9921875));

  for (std::size_t dim : {3u, 4u}) {
    const ConeNet n = build_net(dim, 0.5, 3, 20000);
    CHECK(n.certificate >= n.threshold());
    Rng rng(dim);
    for (int i = 0; i < 200; ++i) {
      const std::uint64_t k = rng() % n.size();
      const Vec v = n.vector(k);
      CHECK(norm(v) == doctest::Approx(1.0));
      // nearest of a net vector is a net vector at angle 0 (shared edge
      // points may map to the other face).
      CHECK(dot(n.vector(n.nearest(v)), v) == doctest::Approx(1.0));
    }
  }
}

TEST_CASE("net certificate oracle: brute force nearest over the whole net") {
  const ConeNet n = build_net(3, 0.5, 9, 2000);
  REQUIRE(n.size() < 20000);
  Rng rng(5);
  for (int i = 0; i < 100; ++i) {
    const Vec v = random_unit(rng, 3);
    double best = -1;
    for (std::uint64_t k = 0; k < n.size(); ++k) best = std::max(best, dot(n.vector(k), v));
    CHECK(best >= n.threshold());
    CHECK(dot(n.vector(n.nearest(v)), v) >= n.threshold());
  }
}

TEST_CASE("net budget exceeded") { CHECK_THROWS_AS(build_net(4, 0.2, 1, 100, 1000.0), std::runtime_error); }

TEST_CASE("projection onto D") {
  Rng rng(11);
  const double eps1 = 0.3;
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + trial % 3;
    const Vec v0 = random_unit(rng, n);
    Vec v = scaled(random_gaussian(rng, n), std::exp(3.0 * (uniform01(rng) - 0.3)));
    const Vec p = project_onto_D(v, v0, eps1);
    CHECK(dot(p, v0) >= eps1 - 1e-12);
    CHECK(norm(p) <= 1.0 / eps1 + 1e-12);
    // Oracle: no random point of D is closer to v than the projection.
    const double d = norm(subtract(p, v));
    for (int k = 0; k < 50; ++k) CHECK(norm(subtract(random_point_in_D(rng, v0, eps1), v)) >= d - 1e-12);
    const Vec in = random_point_in_D(rng, v0, eps1);
    CHECK(project_onto_D(in, v0, eps1) == in);
  }
}

TEST_CASE("exact minimum over D: lower bound for every feasible point") {
  Rng rng(19);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + trial % 4;
    const double eps1 = trial % 2 ? 0.3 : 0.5;
    const Matrix gamma = random_gamma(rng, n);
    const Vec v0 = random_unit(rng, n);
    const DMinimum exact = min_over_D(gamma, v0, eps1);
    const DMinimum pg = min_over_D_projected(gamma, v0, eps1, static_cast<std::uint64_t>(trial));
    const double scale = op_norm(gamma);
    CHECK(dot(exact.argmin, v0) >= eps1 - 1e-12);
    CHECK(norm(exact.argmin) <= 1.0 / eps1 + 1e-9);
    CHECK(exact.value == doctest::Approx(norm(gamma * exact.argmin)));
    CHECK(exact.value <= pg.value + 1e-12 * scale);
    for (int k = 0; k < 50; ++k) CHECK(norm(gamma * random_point_in_D(rng, v0, eps1)) >= exact.value - 1e-12 * scale);
  }
  // N = 1: the minimum is eps1 |gamma|.
  const Matrix g1{{3.0}, {4.0}};
  CHECK(min_over_D(g1, {1.0}, 0.25).value == doctest::Approx(1.25));
}

TEST_CASE("exact minimum over D matches projected gradient on well conditioned gamma") {
  Rng rng(20);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + trial % 3, rows = 1 + trial % 4;
    Matrix gamma(rows, n);
    for (double& x : gamma.data()) x = random_gaussian(rng, 1)[0];
    const Vec v0 = random_unit(rng, n);
    const DMinimum exact = min_over_D(gamma, v0, 0.5);
    const DMinimum pg = min_over_D_projected(gamma, v0, 0.5, static_cast<std::uint64_t>(trial), 5000, 16);
    CHECK(pg.value - exact.value <= 1e-2 * op_norm(gamma));
  }
}

TEST_CASE("exact minimum over D matches a dense grid search, N = 2") {
  Rng rng(21);
  const double eps1 = 0.3;
  for (int trial = 0; trial < 40; ++trial) {
    const Matrix gamma = random_gamma(rng, 2);
    const Vec v0 = random_unit(rng, 2);
    const Vec u{-v0[1], v0[0]};
    double best = std::numeric_limits<double>::infinity();
    const int steps = 600;
    for (int i = 0; i <= steps; ++i) {
      const double t = eps1 + (1.0 / eps1 - eps1) * i / steps;
      const double rho = std::sqrt(std::max(0.0, 1.0 / (eps1 * eps1) - t * t));
      for (int j = 0; j <= steps; ++j) {
        const double s = -rho + 2.0 * rho * j / steps;
        best = std::min(best, norm(gamma * add(scaled(v0, t), scaled(u, s))));
      }
    }
    const DMinimum exact = min_over_D(gamma, v0, eps1);
    const double scale = op_norm(gamma);
    CHECK(exact.value <= best + 1e-12 * scale);
    // Grid spacing ~ 2 rho / 600 < 0.012, so the grid overshoots by at most that times |gamma|.
    CHECK(best - exact.value <= 0.012 * scale);
  }
}

TEST_CASE("sector membership examples") {
  Rng rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix g = random_gamma(rng, 1);
    CHECK(sector_membership(g, {1.0}, 0.3, 8, trial).member);
    CHECK(sector_membership(g, {-1.0}, 0.3, 8, trial).member);
  }
  for (std::size_t n : {2u, 3u, 4u}) {
    const Vec v0 = random_unit(rng, n);
    const Membership m = sector_membership(Matrix::row(v0), v0, 0.3, 16, 1);
    CHECK(m.member);
    CHECK(m.min_gamma_v >= 0.3 * m.gamma_norm * (1 - 1e-12));
    Vec w = random_gaussian(rng, n);
    w = subtract(w, scaled(v0, dot(w, v0)));
    const Membership o = sector_membership(Matrix::row(scaled(w, 1.0 / norm(w))), v0, 0.3, 16, 1);
    CHECK_FALSE(o.member);
    CHECK(o.min_gamma_v < 1e-12);
  }
}

TEST_CASE("coverage") {
  for (std::size_t n : {1u, 2u, 3u}) {
    const ConeNet net = build_net(n, 0.3, 4, 20000);
    const CoverageResult r = coverage_check(net, 3000, 8);
    CHECK(r.failures == 0);
    CHECK(r.proof_violations == 0);
    CHECK(r.min_first_step >= net.threshold());
    CHECK(r.min_second_step >= 0.5 * 0.09);
  }
  // Rank-one gamma aligned with a net vector lies in that vector's sector.
  const ConeNet net = build_net(2, 0.5, 1, 1000);
  Rng rng(29);
  for (int i = 0; i < 20; ++i) {
    const Vec v0 = net.vector(rng() % net.size());
    CHECK(sector_membership(Matrix::outer(random_unit(rng, 3), v0), v0, 0.5, 8, i).member);
  }
}

TEST_CASE("coverage is deterministic and exec independent") {
  const ConeNet net = build_net(2, 0.3, 4, 5000);
  const CoverageResult a = coverage_check(net, 500, 3, 8, Exec::serial);
  const CoverageResult b = coverage_check(net, 500, 3, 8, Exec::parallel);
  CHECK(a.failures == b.failures);
  CHECK(a.min_first_step == b.min_first_step);
  CHECK(a.min_second_step == b.min_second_step);
}
