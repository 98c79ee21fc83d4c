#pragma once

// Small builders shared by the unit tests.

#include <vector>

#include "dwlab/dyadic.hpp"
#include "dwlab/random.hpp"

namespace dwlab::testing {

inline WeightedSpace space_of(int n, int L, const Vec& density, const std::vector<Matrix>& w) {
  const Grid g(n, L);
  return WeightedSpace(MeasuredGrid(g, density), WeightField(g, w));
}

inline WeightedSpace lebesgue_space(int n, int L, const std::vector<Matrix>& w) {
  return space_of(n, L, Vec(w.size(), 1.0), w);
}

/// Independent random SPD per cell, density in [0.5, 2].
inline WeightedSpace random_space(Rng& rng, int n, int L, std::size_t N, double spread) {
  const Grid g(n, L);
  Vec d;
  std::vector<Matrix> w;
  for (std::uint64_t c = 0; c < g.cell_count(); ++c) {
    d.push_back(0.5 + 1.5 * uniform01(rng));
    w.push_back(random_spd(rng, N, spread).matrix());
  }
  return WeightedSpace(MeasuredGrid(g, d), WeightField(g, w));
}

inline Matrix scalar(double x) { return Matrix{{x}}; }

}  // namespace dwlab::testing
