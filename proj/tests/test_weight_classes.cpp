#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "dwlab/random.hpp"
#include "dwlab/weight_classes.hpp"
#include "support.hpp"

using namespace dwlab;
using dwlab::testing::lebesgue_space;
using dwlab::testing::random_space;
using dwlab::testing::scalar;

TEST_CASE("cube family enumeration") {
  const Grid g(1, 2);
  const auto f1 = cube_family(g, 1);
  CHECK(f1.size() == 7);
  const auto f3 = cube_family(g, 3);
  // Level 1 gains the box [1/4, 3/4).
  CHECK(f3.size() == 8);
  for (const Box& b : f1)
    CHECK(std::any_of(f3.begin(), f3.end(), [&](const Box& c) { return c.level == b.level && c.lo == b.lo; }));
  // Larger grid: families are nested and every box fits.
  const Grid g2(2, 4);
  std::size_t prev = 0;
  for (int k = 1; k <= 9; ++k) {
    const auto f = cube_family(g2, k);
    CHECK(f.size() >= prev);
    prev = f.size();
    for (const Box& b : f)
      for (int a = 0; a < 2; ++a) CHECK(b.lo[static_cast<std::size_t>(a)] + g2.side_cells(b.level) <= g2.cells_per_axis());
  }
}

TEST_CASE("constant weight: every constant is 1") {
  Rng rng(2);
  const Matrix w = random_spd(rng, 3, 0.5).matrix();
  const auto s = lebesgue_space(2, 2, std::vector<Matrix>(16, w));
  const ClassReport r = class_constants(s, 9);
  for (double c : {r.b2_i, r.b2_i_sampled, r.b2_ii, r.b2_iii, r.b2_iv, r.ainf_i, r.ainf_ii, r.a2, r.thewest})
    CHECK(c == doctest::Approx(1.0).epsilon(1e-10));
  const auto chain = det_chain_check(s, s.grid().box_of(s.grid().root()));
  const double det = std::exp(SpdMatrix(w).log_det());
  for (double c : chain) CHECK(c == doctest::Approx(det).epsilon(1e-10));
}

TEST_CASE("scalar two-cell values {1,4}") {
  const auto s = lebesgue_space(1, 1, {scalar(1.0), scalar(4.0)});
  const ClassReport r = class_constants(s, 3);
  CHECK(r.b2_ii == doctest::Approx(std::sqrt(8.5) / 2.5).epsilon(1e-13));
  CHECK(r.b2_i == doctest::Approx(std::sqrt(8.5) / 2.5).epsilon(1e-13));
  CHECK(r.b2_iii == doctest::Approx(8.5 / 6.25).epsilon(1e-13));
  CHECK(r.b2_iv == doctest::Approx(std::sqrt(8.5) / 2.5).epsilon(1e-13));
  CHECK(r.ainf_ii == doctest::Approx(1.25).epsilon(1e-13));
  // N = 1: ainf_i = exp(avg ln w^-1/2) / avg(w)^-1/2 = sqrt(ainf_ii).
  CHECK(r.ainf_i == doctest::Approx(std::sqrt(1.25)).epsilon(1e-13));
  CHECK(r.thewest == doctest::Approx(2.125).epsilon(1e-13));
  CHECK(r.a2 == doctest::Approx(2.5 * 0.625).epsilon(1e-13));
  CHECK(r.worst.at("b2_ii").level == 0);
  const auto chain = det_chain_check(s, s.grid().box_of(s.grid().root()));
  CHECK(chain[0] == doctest::Approx(std::sqrt(8.5)).epsilon(1e-13));
  CHECK(chain[1] == doctest::Approx(2.5).epsilon(1e-13));
  CHECK(chain[2] == doctest::Approx(2.0).epsilon(1e-13));
  CHECK(chain[3] == doctest::Approx(1.6).epsilon(1e-13));
  CHECK(chain[4] == doctest::Approx(1.0 / std::sqrt((1.0 + 1.0 / 16.0) / 2.0)).epsilon(1e-13));
  CHECK(chain[4] == doctest::Approx(1.37199).epsilon(1e-5));
}

TEST_CASE("reverse Hoelder items agree and are ordered on random fields") {
  Rng rng(17);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t N = 1 + trial % 3;
    const auto s = random_space(rng, 1 + trial % 2, 3, N, 0.7);
    const ClassReport r = class_constants(s, 3);
    CHECK(r.b2_iii == doctest::Approx(r.b2_ii * r.b2_ii).epsilon(1e-9));
    CHECK(r.b2_i == doctest::Approx(r.b2_ii).epsilon(1e-9));
    CHECK(r.b2_i_sampled <= r.b2_i * (1 + 1e-12));
    CHECK(r.b2_ii >= 1 - 1e-9);
    CHECK(r.b2_ii <= r.b2_iv * (1 + 1e-9));
    CHECK(r.b2_iv <= std::pow(r.b2_ii, static_cast<double>(N)) * (1 + 1e-9));
    for (double c : {r.ainf_i, r.ainf_ii, r.a2, r.thewest}) CHECK(c >= 1 - 1e-9);
  }
}

TEST_CASE("diagonal fields: ainf_ii factorizes into scalar ratios") {
  Rng rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    const Grid g(1, 3);
    std::vector<Matrix> w;
    Vec d;
    for (std::uint64_t c = 0; c < g.cell_count(); ++c) {
      w.push_back(Matrix::diagonal({std::exp(random_gaussian(rng, 1)[0]), std::exp(random_gaussian(rng, 1)[0])}));
      d.push_back(0.5 + uniform01(rng));
    }
    const WeightedSpace s(MeasuredGrid(g, d), WeightField(g, w));
    double oracle = 0;
    for (const Box& b : cube_family(g, 3)) {
      double prod = 1;
      for (std::size_t i = 0; i < 2; ++i) {
        double m = 0, sw = 0, slog = 0;
        g.for_each_cell(b, [&](std::uint64_t c) {
          m += s.mu().cell_mass(c);
          sw += s.mu().cell_mass(c) * w[c](i, i);
          slog += s.mu().cell_mass(c) * std::log(w[c](i, i));
        });
        prod *= (sw / m) / std::exp(slog / m);
      }
      oracle = std::max(oracle, prod);
    }
    CHECK(class_constants(s, 3).ainf_ii == doctest::Approx(oracle).epsilon(1e-12));
  }
}

TEST_CASE("restricting the cube family never increases a constant") {
  Rng rng(31);
  const auto s = random_space(rng, 2, 3, 2, 0.8);
  ClassReport prev;
  for (int k = 9; k >= 1; --k) {
    const ClassReport r = class_constants(s, k);
    if (k < 9) {
      CHECK(r.b2_ii <= prev.b2_ii);
      CHECK(r.b2_iv <= prev.b2_iv);
      CHECK(r.ainf_i <= prev.ainf_i);
      CHECK(r.ainf_ii <= prev.ainf_ii);
      CHECK(r.a2 <= prev.a2);
      CHECK(r.thewest <= prev.thewest);
    }
    prev = r;
  }
}

TEST_CASE("serial and parallel class constants are identical") {
  Rng rng(37);
  const auto s = random_space(rng, 2, 3, 2, 0.8);
  const ClassReport a = class_constants(s, 9, Exec::serial);
  const ClassReport b = class_constants(s, 9, Exec::parallel);
  CHECK(a.b2_ii == b.b2_ii);
  CHECK(a.ainf_i == b.ainf_i);
  CHECK(a.thewest == b.thewest);
}

TEST_CASE("scalar report: constant weight") {
  const auto s = lebesgue_space(1, 3, std::vector<Matrix>(8, scalar(2.0)));
  const ScalarAinftyReport r = scalar_ainfty_report(s, 3, 1);
  for (double c : r.ap_prime) CHECK(c == doctest::Approx(1.0));
  for (double c : r.bq) CHECK(c == doctest::Approx(1.0));
  CHECK(r.ainf == doctest::Approx(1.0));
  CHECK(r.delta_fit == doctest::Approx(1.0));
  // sigma = 2 mu, so sigma(E)/sigma(Q) = mu(E)/mu(Q) <= beta.
  for (std::size_t k = 0; k < r.beta_grid.size(); ++k) CHECK(r.alpha[k] <= r.beta_grid[k] + 1e-12);
}

TEST_CASE("scalar report: two cells and a power weight") {
  const auto s = lebesgue_space(1, 1, {scalar(1.0), scalar(4.0)});
  const ScalarAinftyReport r = scalar_ainfty_report(s, 3, 1);
  CHECK(r.bq[2] == doctest::Approx(std::sqrt(8.5) / 2.5));
  CHECK(r.ainf == doctest::Approx(1.25));
  // A_2 (p = 2): avg w * avg w^-1 = 2.5 * 0.625.
  CHECK(r.ap_prime[2] == doctest::Approx(2.5 * 0.625));

  const Grid g(1, 8);
  std::vector<Matrix> w;
  for (std::uint64_t c = 0; c < g.cell_count(); ++c) w.push_back(scalar(std::sqrt((c + 0.5) / 256.0)));
  const auto p = lebesgue_space(1, 8, w);
  const ScalarAinftyReport rp = scalar_ainfty_report(p, 3, 5);
  for (double c : rp.ap_prime) CHECK(std::isfinite(c));
  for (double c : rp.bq) CHECK(std::isfinite(c));
  CHECK(rp.ainf > 1.0);
  CHECK(rp.delta_fit > 0.0);
  CHECK(rp.delta_fit <= 1.0);
  // Power means: B_q constants and A_{p'} constants both increase with the
  // exponent, and the A-infinity constant is the limit of the latter as p -> 1.
  for (std::size_t k = 1; k < rp.bq.size(); ++k) CHECK(rp.bq[k] >= rp.bq[k - 1] - 1e-12);
  for (std::size_t k = 1; k < rp.ap_prime.size(); ++k) CHECK(rp.ap_prime[k] >= rp.ap_prime[k - 1] - 1e-12);
  CHECK(rp.ainf <= rp.ap_prime.front() + 1e-12);
}

TEST_CASE("corollary relations") {
  Rng rng(41);
  SUBCASE("constant weight") {
    const auto s = lebesgue_space(1, 2, std::vector<Matrix>(4, random_spd(rng, 2, 0.5).matrix()));
    const CorollaryReport r = corollary_relations(s, 3);
    CHECK(r.thewest == doctest::Approx(1.0));
    CHECK(r.column_b2 == doctest::Approx(1.0));
    CHECK(r.identity_residual < 1e-12);
  }
  SUBCASE("random fields: column weights stay below b2_ii") {
    for (int trial = 0; trial < 20; ++trial) {
      const auto s = random_space(rng, 1 + trial % 2, 3, 2 + trial % 2, 0.8);
      const CorollaryReport r = corollary_relations(s, 3);
      CHECK(r.identity_residual < 1e-9);
      CHECK(r.column_ratio <= 1.0 + 1e-12);
      CHECK(r.column_b2 <= class_constants(s, 3).b2_ii * (1 + 1e-12));
      CHECK_FALSE(r.diagonal);
    }
  }
  SUBCASE("diagonal field: b2_ii is the worst scalar column constant") {
    const Grid g(1, 4);
    std::vector<Matrix> w;
    for (std::uint64_t c = 0; c < g.cell_count(); ++c)
      w.push_back(Matrix::diagonal({std::exp(random_gaussian(rng, 1)[0]), std::exp(random_gaussian(rng, 1)[0])}));
    const CorollaryReport r = corollary_relations(lebesgue_space(1, 4, w), 3);
    CHECK(r.diagonal);
    CHECK(r.diagonal_residual < 1e-12);
  }
}
