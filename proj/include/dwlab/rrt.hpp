#pragma once

// Reverse reverse triangle inequality for positive definite A, B: if
// ||Ax| - |Bx|| <= delta |Bx| for all x, how large can |(A - B) B^-1| be?
// Exact margins plus an annealing search for the worst case.

#include <cstdint>
#include <vector>

#include "dwlab/matrix.hpp"
#include "dwlab/parallel.hpp"

namespace dwlab {

/// Smallest delta with (1-delta)^2 B^2 <= A^2 <= (1+delta)^2 B^2:
/// max(1 - sqrt(lmin), sqrt(lmax) - 1, 0) over the eigenvalues of
/// B^-1 A^2 B^-1. Equals sup_x ||Ax| - |Bx|| / |Bx|.
double hypothesis_margin(const SpdMatrix& a, const SpdMatrix& b);

/// |(A - B) B^-1|, the smallest eps with |Ax - Bx| <= eps |Bx|.
double conclusion_value(const SpdMatrix& a, const SpdMatrix& b);

/// A with B^-1 A^2 B^-1 = (I + D)^2 after clamping the eigenvalues of the
/// symmetric D into [-delta, delta]; hypothesis_margin(A, B) <= delta.
SpdMatrix rrt_from_perturbation(const SpdMatrix& b, const Matrix& d, double delta);

struct RrtInstance {
  std::size_t m = 0;
  Matrix a, b;
  double delta_measured = 0;
  double epsilon_measured = 0;
};

struct AnnealingSchedule {
  double t0 = 1.0;
  double ratio = 0.95;
  int steps = 200;
  int restarts = 50;
};

/// Maximizes conclusion_value subject to hypothesis_margin <= delta.
/// `budget` counts objective evaluations and sets the number of restarts
/// (at least one); budget 0 uses the schedule's restart count. The witness
/// B = I, A = (1 + delta) I is always a candidate.
RrtInstance worst_case_search(std::size_t m, double delta, std::uint64_t budget, std::uint64_t seed,
                              const AnnealingSchedule& schedule = {}, Exec exec = Exec::parallel);

struct CurvePoint {
  double eps = 0;
  double delta = 0;      // largest tested delta whose worst case stays <= eps
  double worst_eps = 0;  // worst case found at that delta
};
/// Bisection on [0, eps] for each grid value (processed in increasing order,
/// each bisection starting from the previous feasible delta).
std::vector<CurvePoint> delta_of_eps_curve(std::size_t m, const std::vector<double>& eps_grid, std::uint64_t budget,
                                           std::uint64_t seed, int bisection_steps = 30,
                                           const AnnealingSchedule& schedule = {}, Exec exec = Exec::parallel);

}  // namespace dwlab
