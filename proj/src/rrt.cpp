#include "dwlab/rrt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "dwlab/random.hpp"

namespace dwlab {

double hypothesis_margin(const SpdMatrix& a, const SpdMatrix& b) {
  const Matrix binv = b.inverse().matrix();
  const Matrix a2 = a.matrix() * a.matrix();
  const SymmetricEigen e = symmetric_eigen(symmetrize(binv * a2 * binv));
  const double lmin = std::max(e.values.front(), 0.0), lmax = e.values.back();
  return std::max({1.0 - std::sqrt(lmin), std::sqrt(lmax) - 1.0, 0.0});
}

double conclusion_value(const SpdMatrix& a, const SpdMatrix& b) {
  return op_norm((a.matrix() - b.matrix()) * b.inverse().matrix());
}

SpdMatrix rrt_from_perturbation(const SpdMatrix& b, const Matrix& d, double delta) {
  const SymmetricEigen e = symmetric_eigen(symmetrize(d));
  const Matrix m = spectral_apply(e, [delta](double x) {
    const double c = 1.0 + std::clamp(x, -delta, delta);
    return c * c;
  });
  return SpdMatrix(b.matrix() * m * b.matrix()).sqrt();
}

namespace {

struct State {
  Matrix log_b, d;
};

double objective(const State& s, double delta, Matrix* a_out = nullptr, Matrix* b_out = nullptr) {
  const SpdMatrix b = spd_exp(s.log_b);
  const SpdMatrix a = rrt_from_perturbation(b, s.d, delta);
  if (a_out) *a_out = a.matrix();
  if (b_out) *b_out = b.matrix();
  return conclusion_value(a, b);
}

Matrix clamp_spectrum(const Matrix& d, double delta) {
  return spectral_apply(symmetric_eigen(symmetrize(d)), [delta](double x) { return std::clamp(x, -delta, delta); });
}

struct RestartResult {
  double value = -1;
  State best;
};

RestartResult anneal(std::size_t m, double delta, const AnnealingSchedule& sch, std::uint64_t seed) {
  Rng rng(seed);
  State cur{random_symmetric(rng, m, 1.0), clamp_spectrum(random_symmetric(rng, m, delta), delta)};
  double f = objective(cur, delta);
  RestartResult out{f, cur};
  double t = sch.t0;
  for (int k = 0; k < sch.steps; ++k) {
    const double step = 0.05 + 0.5 * t;
    State next{cur.log_b + random_symmetric(rng, m, 0.3 * step),
               clamp_spectrum(cur.d + random_symmetric(rng, m, delta * step), delta)};
    const double g = objective(next, delta);
    // Values scale with delta, so temperatures are in units of delta.
    if (g >= f || uniform01(rng) < std::exp((g - f) / (t * delta))) {
      cur = std::move(next);
      f = g;
      if (f > out.value) out = {f, cur};
    }
    t *= sch.ratio;
  }
  return out;
}

}  // namespace

RrtInstance worst_case_search(std::size_t m, double delta, std::uint64_t budget, std::uint64_t seed,
                              const AnnealingSchedule& schedule, Exec exec) {
  if (m < 1) throw std::invalid_argument("worst_case_search: m must be >= 1");
  if (!(delta >= 0.0 && delta < 1.0)) throw std::invalid_argument("worst_case_search: delta must lie in [0, 1)");
  RrtInstance out;
  out.m = m;
  // Witness B = I, A = (1 + delta) I.
  out.b = Matrix::identity(m);
  out.a = Matrix::identity(m) * (1.0 + delta);
  if (delta == 0.0) {
    out.a = out.b;
    return out;
  }
  out.delta_measured = hypothesis_margin(SpdMatrix(out.a), SpdMatrix(out.b));
  out.epsilon_measured = conclusion_value(SpdMatrix(out.a), SpdMatrix(out.b));

  const std::size_t per = static_cast<std::size_t>(std::max(1, schedule.steps + 1));
  const std::size_t restarts =
      budget == 0 ? static_cast<std::size_t>(std::max(1, schedule.restarts)) : std::max<std::size_t>(1, budget / per);
  std::vector<RestartResult> runs(restarts);
  for_each_index(restarts, exec, [&](std::size_t r) { runs[r] = anneal(m, delta, schedule, mix_seed(seed, r)); });
  for (const RestartResult& r : runs) {
    if (r.value <= out.epsilon_measured) continue;
    Matrix a, b;
    objective(r.best, delta, &a, &b);
    const SpdMatrix sa(a), sb(b);
    const double margin = hypothesis_margin(sa, sb);
    if (margin > delta + 1e-9) continue;  // never report an infeasible pair
    out.a = a;
    out.b = b;
    out.delta_measured = margin;
    out.epsilon_measured = conclusion_value(sa, sb);
  }
  return out;
}

std::vector<CurvePoint> delta_of_eps_curve(std::size_t m, const std::vector<double>& eps_grid, std::uint64_t budget,
                                           std::uint64_t seed, int bisection_steps,
                                           const AnnealingSchedule& schedule, Exec exec) {
  for (double e : eps_grid)
    if (!(e > 0.0 && e < 1.0)) throw std::invalid_argument("delta_of_eps_curve: eps values must lie in (0,1)");
  std::vector<std::size_t> order(eps_grid.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return eps_grid[a] < eps_grid[b]; });
  std::vector<CurvePoint> out(eps_grid.size());
  double lo = 0.0, lo_worst = 0.0;
  for (std::size_t idx : order) {
    const double eps = eps_grid[idx];
    double hi = std::min(eps, 1.0 - 1e-12);
    // Try the top of the interval first: for m = 1 it is feasible.
    const RrtInstance top = worst_case_search(m, hi, budget, seed, schedule, exec);
    if (top.epsilon_measured <= eps) {
      lo = hi;
      lo_worst = top.epsilon_measured;
    } else {
      for (int it = 0; it < bisection_steps; ++it) {
        const double mid = 0.5 * (lo + hi);
        const RrtInstance r = worst_case_search(m, mid, budget, seed, schedule, exec);
        if (r.epsilon_measured <= eps) {
          lo = mid;
          lo_worst = r.epsilon_measured;
        } else {
          hi = mid;
        }
      }
    }
    out[idx] = {eps, lo, lo_worst};
  }
  return out;
}

}  // namespace dwlab
