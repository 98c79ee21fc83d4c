#include <doctest.h>

#include <cmath>

#include "dwlab/random.hpp"
#include "dwlab/rrt.hpp"

using namespace dwlab;

TEST_CASE("margin and conclusion examples") {
  Rng rng(1);
  const SpdMatrix b = random_spd(rng, 3, 0.8);
  CHECK(hypothesis_margin(b, b) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(conclusion_value(b, b) == doctest::Approx(0.0).epsilon(1e-12));
  const SpdMatrix s1(Matrix{{2.5}});
  CHECK(hypothesis_margin(SpdMatrix(Matrix{{2.5 * 1.15}}), s1) == doctest::Approx(0.15));
  CHECK(hypothesis_margin(SpdMatrix(Matrix::diagonal({0.9, 1.2})), SpdMatrix::identity(2)) == doctest::Approx(0.2));
  const Matrix sym{{0.3, 0.1}, {0.1, -0.2}};
  const double t = 0.4;
  CHECK(conclusion_value(SpdMatrix(Matrix::identity(2) + sym * t), SpdMatrix::identity(2)) ==
        doctest::Approx(t * op_norm(sym)));
}

TEST_CASE("margin is the sup over x of ||Ax| - |Bx|| / |Bx|") {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t m = 1 + trial % 3;
    const SpdMatrix a = random_spd(rng, m, 0.5), b = random_spd(rng, m, 0.5);
    const double margin = hypothesis_margin(a, b), eps = conclusion_value(a, b);
    double sampled = 0, sampled_eps = 0;
    for (int k = 0; k < 2000; ++k) {
      const Vec x = random_unit(rng, m);
      const Vec ax = a.matrix() * x, bx = b.matrix() * x;
      // The converse (reverse triangle) inequality.
      CHECK(std::abs(norm(ax) - norm(bx)) <= norm(subtract(ax, bx)) + 1e-12);
      sampled = std::max(sampled, std::abs(norm(ax) - norm(bx)) / norm(bx));
      sampled_eps = std::max(sampled_eps, norm(subtract(ax, bx)) / norm(bx));
    }
    CHECK(sampled <= margin + 1e-12);
    CHECK(sampled_eps <= eps + 1e-12);
    if (m == 1) {
      CHECK(sampled == doctest::Approx(margin));
      CHECK(margin == doctest::Approx(eps));
    } else {
      CHECK(sampled >= 0.9 * margin);
    }
    CHECK(margin <= eps + 1e-9);
  }
}

TEST_CASE("perturbation parametrization is exactly feasible") {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t m = 1 + trial % 4;
    const double delta = 0.01 + 0.5 * uniform01(rng);
    const SpdMatrix b = random_spd(rng, m, 1.0);
    const SpdMatrix a = rrt_from_perturbation(b, random_symmetric(rng, m, 2.0), delta);
    CHECK(hypothesis_margin(a, b) <= delta + 1e-9);
  }
}

TEST_CASE("worst case search") {
  const RrtInstance zero = worst_case_search(2, 0.0, 1000, 1);
  CHECK(zero.epsilon_measured == 0.0);
  CHECK(zero.a == zero.b);
  const RrtInstance one = worst_case_search(1, 0.2, 2000, 1);
  CHECK(one.epsilon_measured == doctest::Approx(0.2).epsilon(1e-12));
  double prev = 0;
  for (double delta : {0.01, 0.05, 0.1, 0.2}) {
    const RrtInstance r = worst_case_search(2, delta, 20000, 7);
    CHECK(r.delta_measured <= delta + 1e-9);
    CHECK(r.epsilon_measured >= delta - 1e-12);
    CHECK(r.epsilon_measured >= prev - 1e-12);
    CHECK(hypothesis_margin(SpdMatrix(r.a), SpdMatrix(r.b)) == doctest::Approx(r.delta_measured));
    prev = r.epsilon_measured;
  }
  // m = 2 admits pairs beyond the scalar witness.
  CHECK(worst_case_search(2, 0.1, 20000, 7).epsilon_measured > 0.1 * 1.01);
}

TEST_CASE("search is deterministic and exec independent") {
  const RrtInstance a = worst_case_search(3, 0.1, 5000, 11, {}, Exec::serial);
  const RrtInstance b = worst_case_search(3, 0.1, 5000, 11, {}, Exec::parallel);
  CHECK(a.epsilon_measured == b.epsilon_measured);
  CHECK(a.a == b.a);
}

TEST_CASE("delta of eps curve") {
  const std::vector<double> grid{0.3, 0.1, 0.2};
  const auto one = delta_of_eps_curve(1, grid, 500, 3, 30);
  for (const CurvePoint& p : one) CHECK(p.delta == doctest::Approx(p.eps).epsilon(1e-8));
  const auto two = delta_of_eps_curve(2, grid, 2000, 3, 14);
  for (const CurvePoint& p : two) {
    CHECK(p.delta <= p.eps);
    CHECK(p.worst_eps <= p.eps);
  }
  CHECK(two[1].delta <= two[2].delta);
  CHECK(two[2].delta <= two[0].delta);
}
