#pragma once

// Stopping times on the dyadic tree: generations B_k(Q), the family B_*(Q),
// sawtooth regions G(S), stopping parents, packing sums, iterated
// decompositions for several criteria, and the three concrete criteria.

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dwlab/dyadic.hpp"

namespace dwlab {

/// fires(S, R): does the criterion started at the stopping cube S select the
/// strict subcube R? Must be pure.
struct StoppingCriterion {
  std::string name;
  std::function<bool(const DyadicCube& top, const DyadicCube& r)> fires;
  /// Optional: distance of the tested quantity from the firing threshold.
  std::function<double(const DyadicCube& top, const DyadicCube& r)> margin;
};

/// Optional restriction of the traversal to an upward-closed set of cubes.
using Region = std::function<bool(const DyadicCube&)>;

struct StoppingResult {
  DyadicCube root;
  /// generations[0] = {root}; generations[k] = B_k(root).
  std::vector<std::vector<DyadicCube>> generations;
  /// B_*(root) in generation order.
  std::vector<DyadicCube> all;
  /// sawtooth[i] = G(all[i]), the stopping cube first.
  std::vector<std::vector<DyadicCube>> sawtooth;
  /// children_of[i] = positions in `all` of B_1(all[i]).
  std::vector<std::vector<std::size_t>> children_of;
  /// Position in `all` of the stopping parent R_* (root maps to itself).
  std::vector<std::size_t> parent;
  /// Cube -> position in `all` of the sawtooth containing it.
  std::map<DyadicCube, std::size_t> owner;

  std::size_t index_of(const DyadicCube& s) const;
  int depth() const { return static_cast<int>(generations.size()) - 1; }
};

/// Top-down traversal: a child is tested against the current stopping cube;
/// a firing child becomes a next-generation stopping cube, a non-firing one
/// joins the sawtooth and is descended into.
StoppingResult run_stopping(const Grid& g, const DyadicCube& q, const StoppingCriterion& crit,
                            const Region& region = nullptr);

/// (1/mu(Q)) sum over B_*(Q) of mu(R), root included.
double packing_constant(const StoppingResult& res, const MeasuredGrid& mu);
/// (1/mu(Q)) sum over B_1(Q) of mu(R).
double first_generation_ratio(const StoppingResult& res, const MeasuredGrid& mu);
/// sup over S in B_*(Q) of (1/mu(S)) sum over B_1(S) of mu(R).
double max_first_generation_ratio(const StoppingResult& res, const MeasuredGrid& mu);

/// |sum_S sum_{R in G(S)} f(R) - sum_{R in box} f(R)| / max(1, sum); also
/// fails (returns infinity) if some cube of the box is missing or repeated.
double partition_residual(const StoppingResult& res, const Grid& g, const std::function<double(const DyadicCube&)>& f,
                          const Region& region = nullptr);

struct SawtoothPiece {
  std::vector<DyadicCube> chain;  // S_1 ⊇ S_2 ⊇ ... ⊇ S_k
  std::vector<DyadicCube> cubes;  // G^1(S_1) ∩ ... ∩ G^k(S_k)
};
struct IteratedDecomposition {
  DyadicCube root;
  std::vector<SawtoothPiece> pieces;
  /// One stopping run per (level, chain prefix), in creation order.
  std::vector<StoppingResult> runs;
  double residual = 0;  // partition residual of the pieces, weighted by mu
};

/// Runs criterion k+1 from each S_k restricted to the current piece; this
/// equals the unrestricted run intersected with the piece because pieces are
/// upward closed. Throws std::logic_error if the pieces fail to partition.
IteratedDecomposition iterated_sawtooth(const MeasuredGrid& mu, const DyadicCube& q,
                                        const std::vector<StoppingCriterion>& crits);

/// Fires iff |W_S W_R^-1| >= lambda.
StoppingCriterion volberg_criterion(const WeightedSpace& space, double lambda);
/// Fires iff |W_S^-1 W_R - I| > eps3.
StoppingCriterion corona_criterion(const WeightedSpace& space, double eps3);
/// expectation(S, R) must return E_R b_S^{v0}. Fires iff |E_R b| > 1/eps2 or
/// (v0, W_S^-1 W_R E_R b) < eps2.
using ExpectationFn = std::function<Vec(const DyadicCube& top, const DyadicCube& r)>;
StoppingCriterion kato_criterion(const WeightedSpace& space, Vec v0, double eps2, ExpectationFn expectation);

/// Fires independently on each (S, R) pair with probability p, from a hash.
StoppingCriterion random_criterion(std::uint64_t seed, double p);

struct StopReport {
  StoppingResult result;
  double packing = 1;           // full packing including B_0
  double first_generation = 0;  // first generation mass ratio
  double max_first_generation = 0;
  /// Smallest distance from the firing threshold over all tested pairs.
  double margin = 0;
};

StopReport volberg_stop(const WeightedSpace& space, const DyadicCube& q, double lambda);
StopReport corona_stop(const WeightedSpace& space, const DyadicCube& q, double eps3);
/// b is a fixed vector field (N components) used as b_S for every stopping
/// cube S reached.
StopReport kato_stop(const WeightedSpace& space, const DyadicCube& q, const CellField& b, const Vec& v0, double eps2);

/// sup over S in B_* and R in G(S) of |W_S^-1 W_R - I|.
double corona_sawtooth_deviation(const WeightedSpace& space, const StoppingResult& res);

struct MartingaleCheck {
  Matrix lhs, rhs;
  double min_gap_eigenvalue = 0;  // smallest eigenvalue of rhs - lhs
  bool ok = true;
};
/// lhs = sum over B_* \ {Q} of (W_R - W_{R_*})^2 mu(R); rhs = ((W^2)_Q - W_Q^2) mu(Q).
/// The Loewner tolerance is 1e-9 times |(W^2)_Q| mu(Q), the scale of the
/// cancellation in rhs.
MartingaleCheck martingale_square_check(const WeightedSpace& space, const StoppingResult& res);

}  // namespace dwlab
