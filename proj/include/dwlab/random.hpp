#pragma once

// Random vectors and SPD matrices for generators and property tests. All
// draws go through std::mt19937_64 so a seed fixes the output.

#include <cstdint>
#include <random>

#include "dwlab/matrix.hpp"

namespace dwlab {

using Rng = std::mt19937_64;

Vec random_gaussian(Rng& rng, std::size_t n);
Vec random_unit(Rng& rng, std::size_t n);
/// Symmetric matrix with independent N(0, s^2) upper entries.
Matrix random_symmetric(Rng& rng, std::size_t n, double s);
/// exp of random_symmetric(rng, n, spread); eigenvalues roughly e^{+-2 spread}.
SpdMatrix random_spd(Rng& rng, std::size_t n, double spread);
/// Haar-distributed orthogonal matrix.
Matrix random_orthogonal(Rng& rng, std::size_t n);
double uniform01(Rng& rng);

}  // namespace dwlab
