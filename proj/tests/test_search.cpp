#include <doctest.h>

#include <cmath>

#include "dwlab/search.hpp"
#include "dwlab/weight_classes.hpp"

using namespace dwlab;

TEST_CASE("constant generator") {
  GeneratorParams p;
  p.kind = GeneratorKind::constant;
  p.mu_amplitude = 1.0;  // ignored for constant weights
  const GeneratedField f = generate(p, 2, 3, 2);
  for (std::size_t c = 0; c < f.field.weight.size(); ++c) {
    CHECK(f.field.weight[c] == f.field.weight[0]);
    CHECK(f.field.density[c] == 1.0);
  }
  const ClassReport r = class_constants(make_space(f.field), 9);
  CHECK(r.b2_iv == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(r.ainf_ii == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("diagonal generator: determinant constants factor over coordinates") {
  GeneratorParams p;
  p.kind = GeneratorKind::diagonal;
  p.amplitude = 1.5;
  p.mu_amplitude = 0.5;
  p.seed = 4;
  const int n = 1, L = 5;
  const std::size_t N = 3;
  const GeneratedField f = generate(p, n, N, L);
  const Grid g(n, L);
  // Independent oracle: product over coordinates of the scalar ratios per box.
  double b2 = 1, ainf = 1;
  for (const Box& b : cube_family(g, 3)) {
    double m = 0, b2q = 1, ainfq = 1;
    Vec s1(N, 0.0), s2(N, 0.0), sl(N, 0.0);
    g.for_each_cell(b, [&](std::uint64_t c) {
      const double mass = f.field.density[c];
      m += mass;
      for (std::size_t i = 0; i < N; ++i) {
        const double w = f.field.weight[c](i, i);
        CHECK(f.field.weight[c](i, (i + 1) % N) == (N == 1 ? w : 0.0));
        s1[i] += mass * w;
        s2[i] += mass * w * w;
        sl[i] += mass * std::log(w);
      }
    });
    for (std::size_t i = 0; i < N; ++i) {
      b2q *= std::sqrt(s2[i] / m) / (s1[i] / m);
      ainfq *= (s1[i] / m) / std::exp(sl[i] / m);
    }
    b2 = std::max(b2, b2q);
    ainf = std::max(ainf, ainfq);
  }
  const ClassReport r = class_constants(make_space(f.field), 3);
  CHECK(r.b2_iv == doctest::Approx(b2).epsilon(1e-10));
  CHECK(r.ainf_ii == doctest::Approx(ainf).epsilon(1e-10));
  const DetConstants d = det_constants(g, f.field.density, f.field.weight, 3);
  CHECK(d.b2_iv == doctest::Approx(b2).epsilon(1e-10));
  CHECK(d.ainf_ii == doctest::Approx(ainf).epsilon(1e-10));
}

TEST_CASE("generators are reproducible and valid") {
  for (GeneratorKind k : {GeneratorKind::constant, GeneratorKind::diagonal, GeneratorKind::rotated_diagonal,
                          GeneratorKind::log_gaussian, GeneratorKind::two_scale}) {
    CHECK(parse_generator_kind(generator_name(k)) == k);
    GeneratorParams p;
    p.kind = k;
    p.seed = 17;
    p.mu_amplitude = 0.3;
    const GeneratedField a = generate(p, 2, 2, 3), b = generate(p, 2, 2, 3);
    CHECK(format_field(a.field) == format_field(b.field));
    CHECK(a.doubling <= p.doubling_cap);
    CHECK_NOTHROW(make_space(a.field));
    p.seed = 18;
    CHECK(format_field(generate(p, 2, 2, 3).field) != format_field(a.field));
  }
  CHECK_THROWS_AS(parse_generator_kind("nope"), std::invalid_argument);
}

TEST_CASE("doubling cap forces redraws or failure") {
  GeneratorParams p;
  p.kind = GeneratorKind::log_gaussian;
  p.mu_amplitude = 4.0;
  p.doubling_cap = 2.0;
  p.retries = 3;
  CHECK_THROWS_AS(generate(p, 1, 2, 6), std::runtime_error);
}

TEST_CASE("det_constants agrees with class_constants") {
  for (GeneratorKind k : {GeneratorKind::rotated_diagonal, GeneratorKind::log_gaussian, GeneratorKind::two_scale}) {
    GeneratorParams p;
    p.kind = k;
    p.amplitude = 1.2;
    p.mu_amplitude = 0.4;
    p.seed = 5;
    const GeneratedField f = generate(p, 2, 3, 3);
    const ClassReport r = class_constants(make_space(f.field), 9);
    const DetConstants d = det_constants(Grid(2, 3), f.field.density, f.field.weight, 9);
    CHECK(d.b2_iv == doctest::Approx(r.b2_iv).epsilon(1e-10));
    CHECK(d.ainf_ii == doctest::Approx(r.ainf_ii).epsilon(1e-10));
  }
}

TEST_CASE("inclusion search") {
  CHECK_THROWS_AS(inclusion_search(1, 1, 4, 2.0, 10, 1), std::invalid_argument);
  CHECK_THROWS_AS(inclusion_search(1, 2, 4, 1.0, 10, 1), std::invalid_argument);
  for (SearchFamily fam : {SearchFamily::log_cell, SearchFamily::log_multiscale, SearchFamily::rotated_diagonal}) {
    CHECK(parse_search_family(search_family_name(fam)) == fam);
    InclusionOptions opt;
    opt.family = fam;
    opt.chains = 2;
    const double cap = 1.5;
    const InclusionResult zero = inclusion_search(1, 2, 4, cap, 0, 3, opt);
    const InclusionResult r = inclusion_search(1, 2, 4, cap, 200, 3, opt);
    CHECK(zero.trail.size() == 1);
    CHECK(r.b2_iv <= cap + 1e-10);
    CHECK(r.ainf_ii >= zero.ainf_ii - 1e-10);
    CHECK(r.ainf_ii > 1.0);
    // The reported field re-validates.
    const ClassReport again = class_constants(make_space(r.best), 3);
    CHECK(again.ainf_ii == doctest::Approx(r.ainf_ii).epsilon(1e-10));
    CHECK(again.b2_iv == doctest::Approx(r.b2_iv).epsilon(1e-10));
    CHECK(r.trail.back().ainf_ii == doctest::Approx(r.ainf_ii).epsilon(1e-10));
    for (std::size_t i = 1; i < r.trail.size(); ++i) CHECK(r.trail[i].ainf_ii > r.trail[i - 1].ainf_ii);
  }
}

TEST_CASE("inclusion search is deterministic and exec independent") {
  const InclusionResult a = inclusion_search(2, 2, 2, 2.0, 60, 9, {}, Exec::serial);
  const InclusionResult b = inclusion_search(2, 2, 2, 2.0, 60, 9, {}, Exec::parallel);
  CHECK(format_field(a.best) == format_field(b.best));
  CHECK(a.ainf_ii == b.ainf_ii);
  CHECK(a.evaluations == b.evaluations);
}
