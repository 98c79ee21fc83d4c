#include "dwlab/random.hpp"

#include <cmath>

namespace dwlab {

Vec random_gaussian(Rng& rng, std::size_t n) {
  std::normal_distribution<double> g(0.0, 1.0);
  Vec v(n);
  for (double& x : v) x = g(rng);
  return v;
}

Vec random_unit(Rng& rng, std::size_t n) {
  while (true) {
    Vec v = random_gaussian(rng, n);
    const double r = norm(v);
    if (r > 1e-12) return scaled(v, 1.0 / r);
  }
}

Matrix random_symmetric(Rng& rng, std::size_t n, double s) {
  std::normal_distribution<double> g(0.0, s);
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) m(i, j) = m(j, i) = g(rng);
  return m;
}

SpdMatrix random_spd(Rng& rng, std::size_t n, double spread) { return spd_exp(random_symmetric(rng, n, spread)); }

Matrix random_orthogonal(Rng& rng, std::size_t n) {
  // Gram-Schmidt on Gaussian columns.
  Matrix q(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    Vec v = random_gaussian(rng, n);
    for (int pass = 0; pass < 2; ++pass)
      for (std::size_t k = 0; k < j; ++k) {
        double d = 0.0;
        for (std::size_t i = 0; i < n; ++i) d += q(i, k) * v[i];
        for (std::size_t i = 0; i < n; ++i) v[i] -= d * q(i, k);
      }
    const double r = norm(v);
    for (std::size_t i = 0; i < n; ++i) q(i, j) = v[i] / r;
  }
  return q;
}

double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

}  // namespace dwlab
