#include "dwlab/haar.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>

namespace dwlab {

namespace {

int depth_of(std::size_t cells) {
  if (cells == 0 || !std::has_single_bit(cells)) throw std::invalid_argument("Haar: cell count must be a power of 2");
  return std::countr_zero(cells);
}

// Adds c * h_Q to out.
void add_haar(Vec& out, int depth, int level, std::uint64_t j, double c) {
  const std::uint64_t side = std::uint64_t{1} << (depth - level);
  const double amp = c * std::sqrt(std::ldexp(1.0, level));
  const std::uint64_t lo = j * side;
  for (std::uint64_t i = 0; i < side / 2; ++i) out[lo + i] += amp;
  for (std::uint64_t i = side / 2; i < side; ++i) out[lo + i] -= amp;
}

// value of E_Q g on every cell, for the level-k interval containing it
double avg_at(const HaarSystem& h, int level, std::uint64_t cell) {
  return h.averages[static_cast<std::size_t>(level)][cell >> (h.depth - level)];
}

double coeff_at(const HaarSystem& h, int level, std::uint64_t cell) {
  return h.coeff[static_cast<std::size_t>(level)][cell >> (h.depth - level)];
}

double haar_value(int depth, int level, std::uint64_t cell) {
  const int shift = depth - level;
  const bool right = (cell >> (shift - 1)) & 1;
  return (right ? -1.0 : 1.0) * std::sqrt(std::ldexp(1.0, level));
}

}  // namespace

HaarSystem haar_decompose(const Vec& f) {
  HaarSystem h;
  h.depth = depth_of(f.size());
  h.averages.resize(static_cast<std::size_t>(h.depth) + 1);
  h.averages[static_cast<std::size_t>(h.depth)] = f;
  for (int k = h.depth - 1; k >= 0; --k) {
    const Vec& fine = h.averages[static_cast<std::size_t>(k) + 1];
    Vec coarse(fine.size() / 2);
    for (std::size_t j = 0; j < coarse.size(); ++j) coarse[j] = 0.5 * (fine[2 * j] + fine[2 * j + 1]);
    h.averages[static_cast<std::size_t>(k)] = std::move(coarse);
  }
  h.coeff.resize(static_cast<std::size_t>(h.depth));
  for (int k = 0; k < h.depth; ++k) {
    const Vec& fine = h.averages[static_cast<std::size_t>(k) + 1];
    Vec c(fine.size() / 2);
    // (f, h_Q) = |Q|^1/2 (avg_left - avg_right) / 2
    const double root_len = std::sqrt(std::ldexp(1.0, -k));
    for (std::size_t j = 0; j < c.size(); ++j) c[j] = root_len * 0.5 * (fine[2 * j] - fine[2 * j + 1]);
    h.coeff[static_cast<std::size_t>(k)] = std::move(c);
  }
  h.coarse = h.averages[0][0];
  return h;
}

Vec haar_reconstruct(const HaarSystem& h) {
  Vec out(std::size_t{1} << h.depth, h.coarse);
  for (int k = 0; k < h.depth; ++k)
    for (std::size_t j = 0; j < h.coeff[static_cast<std::size_t>(k)].size(); ++j)
      add_haar(out, h.depth, k, j, h.coeff[static_cast<std::size_t>(k)][j]);
  return out;
}

Vec haar_function(int depth, int level, std::uint64_t index) {
  if (level < 0 || level >= depth) throw std::invalid_argument("haar_function: level out of range");
  Vec out(std::size_t{1} << depth, 0.0);
  add_haar(out, depth, level, index, 1.0);
  return out;
}

double product_identity_residual(const Vec& b, const Vec& f) {
  if (b.size() != f.size()) throw std::invalid_argument("product_identity_residual: size mismatch");
  const HaarSystem hb = haar_decompose(b), hf = haar_decompose(f);
  const int L = hb.depth;
  double worst = 0.0;
  for (std::uint64_t c = 0; c < b.size(); ++c) {
    double s = hb.coarse * hf.coarse;
    for (int k = 0; k < L; ++k) {
      const double h = haar_value(L, k, c);
      const double db = coeff_at(hb, k, c) * h, df = coeff_at(hf, k, c) * h;
      s += avg_at(hb, k, c) * df + db * avg_at(hf, k, c) + db * df;
    }
    worst = std::max(worst, std::abs(b[c] * f[c] - s));
  }
  return worst;
}

Paraproduct paraproduct_plus(const Vec& b, const Vec& f) {
  if (b.size() != f.size()) throw std::invalid_argument("paraproduct_plus: size mismatch");
  const HaarSystem hb = haar_decompose(b), hf = haar_decompose(f);
  const int L = hb.depth;
  Paraproduct p;
  p.values.assign(b.size(), 0.0);
  for (int k = 0; k < L; ++k)
    for (std::size_t j = 0; j < hb.coeff[static_cast<std::size_t>(k)].size(); ++j) {
      const double cb = hb.coeff[static_cast<std::size_t>(k)][j];
      const double ef = hf.averages[static_cast<std::size_t>(k)][j];
      add_haar(p.values, L, k, j, cb * ef);
      p.energy += cb * cb * ef * ef;
    }
  const double cell = std::ldexp(1.0, -L);
  for (std::size_t c = 0; c < b.size(); ++c) {
    p.norm_sq += p.values[c] * p.values[c] * cell;
    p.f_norm_sq += f[c] * f[c] * cell;
  }
  // Subtree sums of (b, h_R)^2, bottom-up.
  std::vector<Vec> sub(static_cast<std::size_t>(L) + 1);
  sub[static_cast<std::size_t>(L)].assign(b.size(), 0.0);
  for (int k = L - 1; k >= 0; --k) {
    const Vec& fine = sub[static_cast<std::size_t>(k) + 1];
    Vec s(fine.size() / 2);
    for (std::size_t j = 0; j < s.size(); ++j) {
      const double cb = hb.coeff[static_cast<std::size_t>(k)][j];
      s[j] = fine[2 * j] + fine[2 * j + 1] + cb * cb;
      p.bmo_sq = std::max(p.bmo_sq, s[j] * std::ldexp(1.0, k));
    }
    sub[static_cast<std::size_t>(k)] = std::move(s);
  }
  const double denom = p.bmo_sq * p.f_norm_sq;
  p.ratio = denom > 0.0 ? p.energy / denom : 0.0;
  return p;
}

double haar_parseval_residual(const Vec& b) {
  const HaarSystem h = haar_decompose(b);
  const int L = h.depth;
  const double cell = std::ldexp(1.0, -L);
  double worst = 0.0;
  for (int k = 0; k <= L; ++k) {
    const std::uint64_t side = std::uint64_t{1} << (L - k);
    for (std::uint64_t j = 0; j < (std::uint64_t{1} << k); ++j) {
      double lhs = 0.0;
      for (int m = k; m < L; ++m) {
        const std::uint64_t per = std::uint64_t{1} << (m - k);
        for (std::uint64_t i = j * per; i < (j + 1) * per; ++i) {
          const double c = h.coeff[static_cast<std::size_t>(m)][i];
          lhs += c * c;
        }
      }
      double rhs = 0.0;
      const double avg = h.averages[static_cast<std::size_t>(k)][j];
      for (std::uint64_t c = j * side; c < (j + 1) * side; ++c) rhs += (b[c] - avg) * (b[c] - avg) * cell;
      worst = std::max(worst, std::abs(lhs - rhs));
    }
  }
  return worst;
}

}  // namespace dwlab
