#pragma once

// Conical covering of M x N matrices by directions in R^N: the maximizing
// vector inequality, nets of unit vectors with (v0, v1) >= 1 - eps1^4/8, and
// membership in the sectors S(v0) = {gamma : |gamma| <= (2/eps1^3)|gamma v|
// for all v in D(v0)}, D(v0) = {(v, v0) >= eps1, |v| <= 1/eps1}.

#include <cmath>
#include <cstdint>
#include <string>

#include "dwlab/matrix.hpp"
#include "dwlab/parallel.hpp"
#include "dwlab/random.hpp"

namespace dwlab {

struct BoundPair {
  double lhs = 0, rhs = 0;
};

/// lhs = |A y|, rhs = ((x,y) - sqrt2 sqrt(1 - |Ax|/|A|)) |A|. Throws for A = 0.
BoundPair maximizing_vector_bound(const Matrix& a, const Vec& x, const Vec& y);

/// Unit vectors with an implicit index. N = 1: {+1, -1}. N = 2: m equally
/// spaced angles, spacing at most arccos(1 - eps1^4/8). N >= 3: the 2N faces
/// of the cube [-1,1]^N, each carrying an (m+1)^(N-1) grid, normalized.
class ConeNet {
 public:
  ConeNet(std::size_t dim, double eps1, std::int64_t m);

  std::size_t dim() const { return dim_; }
  double eps1() const { return eps1_; }
  /// 1 - eps1^4/8.
  double threshold() const { return 1.0 - std::pow(eps1_, 4) / 8.0; }
  std::int64_t resolution() const { return m_; }
  std::uint64_t size() const;
  Vec vector(std::uint64_t index) const;
  /// A net vector close to v (nearest for N <= 2; rounding on the face of
  /// the largest coordinate for N >= 3, within the covering angle).
  std::uint64_t nearest(const Vec& v) const;

  /// min over probe directions v1 of (nearest(v1), v1); set by build_net.
  double certificate = 1.0;
  std::size_t probes = 0;

 private:
  std::size_t dim_;
  double eps1_;
  std::int64_t m_;
};

/// Builds a net and certifies it on a deterministic sample plus `probes`
/// random directions, multiplying the resolution by 1.1 until the
/// certificate reaches the threshold. Throws std::runtime_error (with the
/// achieved certificate) if the net would exceed `max_size` vectors.
ConeNet build_net(std::size_t dim, double eps1, std::uint64_t seed, std::size_t probes = 100000,
                  double max_size = 1e15);

/// min over v in D(v0) of |gamma v|, exact: the minimum sits on (v,v0) = eps1
/// (|gamma v| is convex and positively homogeneous), which leaves a
/// trust-region least-squares problem in the complement of v0, solved
/// through an eigendecomposition and a bisected secular equation.
struct DMinimum {
  double value = 0;
  Vec argmin;
};
DMinimum min_over_D(const Matrix& gamma, const Vec& v0, double eps1);

/// Projected gradient search for the same minimum (200 steps, 16 starts);
/// kept as an independent check of min_over_D.
DMinimum min_over_D_projected(const Matrix& gamma, const Vec& v0, double eps1, std::uint64_t seed, int steps = 200,
                              int starts = 16);

/// Euclidean projection onto D(v0).
Vec project_onto_D(const Vec& v, const Vec& v0, double eps1);

/// Random point of D(v0): (v, v0) uniform in [eps1, 1/eps1], the
/// complement part uniform in the remaining disc.
Vec random_point_in_D(Rng& rng, const Vec& v0, double eps1);

struct Membership {
  bool member = false;
  double gamma_norm = 0;
  double min_gamma_v = 0;  // exact minimum over D(v0)
  double sampled_min = 0;  // minimum over the random sample (infinity if none)
};
/// |gamma| <= (2/eps1^3) |gamma v| for the exact minimizer and for
/// `sample_d` random points of D(v0) (relative slack 1e-12).
Membership sector_membership(const Matrix& gamma, const Vec& v0, double eps1, int sample_d, std::uint64_t seed);

/// Random nonzero M x N matrix: M in [1, N+1], random rank, singular
/// values spread over several orders of magnitude, overall scale e^{+-6}.
Matrix random_gamma(Rng& rng, std::size_t dim);

struct CoverageResult {
  std::size_t trials = 0;
  std::size_t failures = 0;
  /// min over trials of |gamma v0| / |gamma| for the chosen net vector; the
  /// covering argument guarantees >= 1 - eps1^4/8.
  double min_first_step = 1;
  /// min over trials and tested v of |gamma v| / (|v| |gamma|); guaranteed
  /// >= eps1^2/2.
  double min_second_step = 1;
  std::size_t proof_violations = 0;
};
/// For each random gamma the witness sector is nearest(v1) for the top right
/// singular vector v1 (then nearest(-v1)); a gamma in neither counts as a
/// failure.
CoverageResult coverage_check(const ConeNet& net, std::size_t trials, std::uint64_t seed, int sample_d = 8,
                              Exec exec = Exec::parallel);

}  // namespace dwlab
