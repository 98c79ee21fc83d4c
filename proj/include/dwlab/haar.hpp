#pragma once

// Scalar Haar system on [0,1) with Lebesgue measure at finite depth L:
// h_Q = |Q|^-1/2 (1_left - 1_right) for dyadic intervals of level 0..L-1,
// plus the coarse average. Fields are 2^L cell values.

#include <cstdint>
#include <vector>

#include "dwlab/matrix.hpp"

namespace dwlab {

struct HaarSystem {
  int depth = 0;
  double coarse = 0;  // E_[0,1) f
  /// coeff[k][j] = (f, h_Q) for Q = [j 2^-k, (j+1) 2^-k).
  std::vector<Vec> coeff;
  /// averages[k][j] = E_Q f for k = 0..L.
  std::vector<Vec> averages;
};

HaarSystem haar_decompose(const Vec& f);
Vec haar_reconstruct(const HaarSystem& h);
/// Cell values of h_Q.
Vec haar_function(int depth, int level, std::uint64_t index);

/// max |b f - (E b E f + sum E_Q b D_Q f + sum D_Q b E_Q f + sum D_Q b D_Q f)|
/// over the cells, D_Q g = (g, h_Q) h_Q.
double product_identity_residual(const Vec& b, const Vec& f);

struct Paraproduct {
  Vec values;         // pi_b f = sum D_Q b E_Q f
  double norm_sq = 0;  // |pi_b f|^2 computed from the cell values
  double energy = 0;   // sum (b, h_Q)^2 (E_Q f)^2
  double bmo_sq = 0;   // sup_Q |Q|^-1 sum_{R in Q} (b, h_R)^2
  double f_norm_sq = 0;
  double ratio = 0;  // energy / (bmo_sq f_norm_sq), 0 when the denominator vanishes
};
Paraproduct paraproduct_plus(const Vec& b, const Vec& f);

/// max over dyadic Q of |sum_{R in Q} (b, h_R)^2 - int_Q |b - E_Q b|^2|.
double haar_parseval_residual(const Vec& b);

}  // namespace dwlab
