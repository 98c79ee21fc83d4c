#include "dwlab/cone.hpp"

#include <algorithm>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace dwlab {

BoundPair maximizing_vector_bound(const Matrix& a, const Vec& x, const Vec& y) {
  const double na = op_norm(a);
  if (!(na > 0.0)) throw std::invalid_argument("maximizing_vector_bound: A must be nonzero");
  const double ax = norm(a * x);
  const double slack = std::max(0.0, 1.0 - ax / na);
  return {norm(a * y), (dot(x, y) - std::numbers::sqrt2 * std::sqrt(slack)) * na};
}

// ---------------------------------------------------------------------------
// Nets

namespace {

double covering_angle(double eps1) { return std::acos(1.0 - std::pow(eps1, 4) / 8.0); }

std::int64_t initial_resolution(std::size_t dim, double eps1) {
  const double phi = covering_angle(eps1);
  if (dim == 1) return 2;
  if (dim == 2) return static_cast<std::int64_t>(std::ceil(2.0 * std::numbers::pi / phi));
  return static_cast<std::int64_t>(std::ceil(std::sqrt(static_cast<double>(dim - 1)) / std::sin(phi)));
}

double net_size(std::size_t dim, std::int64_t m) {
  if (dim == 1) return 2;
  if (dim == 2) return static_cast<double>(m);
  return 2.0 * static_cast<double>(dim) * std::pow(static_cast<double>(m + 1), static_cast<double>(dim - 1));
}

}  // namespace

ConeNet::ConeNet(std::size_t dim, double eps1, std::int64_t m) : dim_(dim), eps1_(eps1), m_(m) {
  if (dim < 1) throw std::invalid_argument("ConeNet: dimension must be >= 1");
  if (!(eps1 > 0.0 && eps1 <= 0.5)) throw std::invalid_argument("ConeNet: eps1 must lie in (0, 1/2]");
  if (m < 1) throw std::invalid_argument("ConeNet: resolution must be positive");
}

std::uint64_t ConeNet::size() const { return static_cast<std::uint64_t>(net_size(dim_, m_)); }

Vec ConeNet::vector(std::uint64_t index) const {
  if (index >= size()) throw std::out_of_range("ConeNet::vector: index out of range");
  if (dim_ == 1) return {index == 0 ? 1.0 : -1.0};
  if (dim_ == 2) {
    const double t = 2.0 * std::numbers::pi * static_cast<double>(index) / static_cast<double>(m_);
    return {std::cos(t), std::sin(t)};
  }
  const auto per_face = static_cast<std::uint64_t>(std::pow(static_cast<double>(m_ + 1), static_cast<double>(dim_ - 1)));
  const std::uint64_t face = index / per_face;
  std::uint64_t rest = index % per_face;
  const std::size_t axis = face / 2;
  const double sign = face % 2 == 0 ? 1.0 : -1.0;
  Vec v(dim_);
  v[axis] = sign;
  for (std::size_t a = dim_; a-- > 0;) {
    if (a == axis) continue;
    const auto k = static_cast<std::int64_t>(rest % static_cast<std::uint64_t>(m_ + 1));
    rest /= static_cast<std::uint64_t>(m_ + 1);
    v[a] = -1.0 + 2.0 * static_cast<double>(k) / static_cast<double>(m_);
  }
  return scaled(v, 1.0 / norm(v));
}

std::uint64_t ConeNet::nearest(const Vec& v) const {
  if (v.size() != dim_) throw std::invalid_argument("ConeNet::nearest: dimension mismatch");
  if (dim_ == 1) return v[0] >= 0.0 ? 0 : 1;
  if (dim_ == 2) {
    double t = std::atan2(v[1], v[0]);
    if (t < 0) t += 2.0 * std::numbers::pi;
    const auto k = static_cast<std::int64_t>(std::llround(t / (2.0 * std::numbers::pi) * static_cast<double>(m_)));
    return static_cast<std::uint64_t>(k % m_);
  }
  std::size_t axis = 0;
  for (std::size_t a = 1; a < dim_; ++a)
    if (std::abs(v[a]) > std::abs(v[axis])) axis = a;
  const double top = std::abs(v[axis]);
  const std::uint64_t face = 2 * axis + (v[axis] >= 0 ? 0 : 1);
  std::uint64_t idx = 0;
  for (std::size_t a = 0; a < dim_; ++a) {
    if (a == axis) continue;
    const double c = std::clamp(v[a] / top, -1.0, 1.0);
    const auto k = std::clamp<std::int64_t>(std::llround((c + 1.0) * 0.5 * static_cast<double>(m_)), 0, m_);
    idx = idx * static_cast<std::uint64_t>(m_ + 1) + static_cast<std::uint64_t>(k);
  }
  const auto per_face = static_cast<std::uint64_t>(std::pow(static_cast<double>(m_ + 1), static_cast<double>(dim_ - 1)));
  return face * per_face + idx;
}

namespace {

std::vector<Vec> deterministic_probes(const ConeNet& net) {
  const std::size_t n = net.dim();
  std::vector<Vec> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(unit_basis(n, i, 1.0));
    out.push_back(unit_basis(n, i, -1.0));
  }
  if (n <= 10)
    for (std::uint64_t s = 0; s < (std::uint64_t{1} << n); ++s) {
      Vec v(n);
      for (std::size_t i = 0; i < n; ++i) v[i] = (s >> i) & 1 ? -1.0 : 1.0;
      out.push_back(scaled(v, 1.0 / norm(v)));
    }
  if (n == 2) {
    // Midpoints between consecutive net angles are the worst case.
    for (std::int64_t k = 0; k < net.resolution(); ++k) {
      const double t = 2.0 * std::numbers::pi * (static_cast<double>(k) + 0.5) / static_cast<double>(net.resolution());
      out.push_back({std::cos(t), std::sin(t)});
    }
  } else if (n >= 3) {
    // Cell centres of each face grid, strided to a few thousand per face.
    const std::int64_t m = net.resolution();
    const std::int64_t stride = std::max<std::int64_t>(1, m / 12);
    for (std::size_t axis = 0; axis < n; ++axis)
      for (const double sign : {1.0, -1.0}) {
        std::vector<std::int64_t> k(n - 1, 0);
        while (true) {
          Vec v(n);
          v[axis] = sign;
          std::size_t j = 0;
          for (std::size_t a = 0; a < n; ++a) {
            if (a == axis) continue;
            v[a] = -1.0 + 2.0 * (static_cast<double>(k[j]) + 0.5) / static_cast<double>(m);
            ++j;
          }
          out.push_back(scaled(v, 1.0 / norm(v)));
          std::size_t d = 0;
          while (d < k.size()) {
            k[d] += stride;
            if (k[d] < m) break;
            k[d] = 0;
            ++d;
          }
          if (d == k.size()) break;
        }
      }
  }
  return out;
}

double certify(const ConeNet& net, std::uint64_t seed, std::size_t probes) {
  double worst = 1.0;
  for (const Vec& v : deterministic_probes(net)) worst = std::min(worst, dot(net.vector(net.nearest(v)), v));
  std::vector<double> local(probes);
  for_each_index(probes, Exec::parallel, [&](std::size_t i) {
    Rng rng(mix_seed(seed, i));
    const Vec v = random_unit(rng, net.dim());
    local[i] = dot(net.vector(net.nearest(v)), v);
  });
  for (double x : local) worst = std::min(worst, x);
  return worst;
}

}  // namespace

ConeNet build_net(std::size_t dim, double eps1, std::uint64_t seed, std::size_t probes, double max_size) {
  std::int64_t m = initial_resolution(dim, eps1);
  for (int attempt = 0; attempt < 40; ++attempt) {
    if (net_size(dim, m) > max_size) {
      std::ostringstream os;
      os << "cone net for N=" << dim << ", eps1=" << eps1 << " needs more than " << max_size << " vectors";
      throw std::runtime_error(os.str());
    }
    ConeNet net(dim, eps1, m);
    net.certificate = certify(net, seed, probes);
    net.probes = probes;
    if (net.certificate >= net.threshold()) return net;
    if (dim == 1) break;
    m = std::max(m + 1, static_cast<std::int64_t>(std::ceil(1.1 * static_cast<double>(m))));
  }
  std::ostringstream os;
  os << "cone net certificate below " << 1.0 - std::pow(eps1, 4) / 8.0 << " after densification";
  throw std::runtime_error(os.str());
}

// ---------------------------------------------------------------------------
// Minimum of |gamma v| over D(v0)

DMinimum min_over_D(const Matrix& gamma, const Vec& v0, double eps1) {
  const std::size_t n = v0.size();
  if (gamma.cols() != n) throw std::invalid_argument("min_over_D: dimension mismatch");
  const Vec base = scaled(v0, eps1);
  const Vec b = gamma * base;
  if (n == 1) return {norm(b), base};
  const double r2 = 1.0 / (eps1 * eps1) - eps1 * eps1;
  const Matrix c = orthogonal_complement(v0);
  const Matrix g = gamma * c;
  const Matrix h = symmetrize(g.transpose() * g);
  const Vec grad = g.transpose() * b;
  const SymmetricEigen e = symmetric_eigen(h);
  const std::size_t k = n - 1;
  Vec gt(k, 0.0);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) gt[i] += e.vectors(j, i) * grad[j];
  const double lmax = std::max(e.values.back(), 0.0);
  const double tol = 1e-14 * std::max(lmax, std::numeric_limits<double>::min());

  auto z_of = [&](double lambda) {
    Vec z(k, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
      const double d = std::max(e.values[i], 0.0) + lambda;
      if (d <= tol) continue;
      const double coef = -gt[i] / d;
      for (std::size_t j = 0; j < k; ++j) z[j] += coef * e.vectors(j, i);
    }
    return z;
  };
  Vec z = z_of(0.0);
  if (dot(z, z) > r2) {
    double lo = 0.0, hi = norm(gt) / std::sqrt(r2);
    for (int it = 0; it < 200 && hi - lo > 1e-17 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      const Vec zm = z_of(mid);
      (dot(zm, zm) > r2 ? lo : hi) = mid;
    }
    z = z_of(hi);
    const double nz = norm(z);
    if (nz * nz > r2) z = scaled(z, std::sqrt(r2) / nz);
  }
  Vec v = add(base, c * z);
  return {norm(gamma * v), std::move(v)};
}

Vec project_onto_D(const Vec& v, const Vec& v0, double eps1) {
  const double radius = 1.0 / eps1;
  const double t = dot(v, v0);
  const double nv = norm(v);
  if (t >= eps1 && nv <= radius) return v;
  // Ball projection first; it is the answer when it stays in the half space.
  if (nv > radius) {
    const Vec p = scaled(v, radius / nv);
    if (dot(p, v0) >= eps1) return p;
  }
  Vec u = subtract(v, scaled(v0, t));
  const Vec p2 = add(scaled(v0, eps1), u);
  if (norm(p2) <= radius) return p2;
  const double rho = std::sqrt(radius * radius - eps1 * eps1);
  const double nu = norm(u);
  if (nu == 0.0) return scaled(v0, eps1);
  return add(scaled(v0, eps1), scaled(u, rho / nu));
}

Vec random_point_in_D(Rng& rng, const Vec& v0, double eps1) {
  const std::size_t n = v0.size();
  const double t = eps1 + (1.0 / eps1 - eps1) * uniform01(rng);
  if (n == 1) return scaled(v0, t);
  const double rmax = std::sqrt(std::max(0.0, 1.0 / (eps1 * eps1) - t * t));
  Vec u = random_gaussian(rng, n);
  u = subtract(u, scaled(v0, dot(u, v0)));
  const double nu = norm(u);
  if (nu == 0.0) return scaled(v0, t);
  const double r = rmax * std::pow(uniform01(rng), 1.0 / static_cast<double>(n - 1));
  return add(scaled(v0, t), scaled(u, r / nu));
}

DMinimum min_over_D_projected(const Matrix& gamma, const Vec& v0, double eps1, std::uint64_t seed, int steps,
                              int starts) {
  const Matrix h = gamma.transpose() * gamma;
  const double lip = 2.0 * std::max(max_eigenvalue(symmetrize(h)), 1e-300);
  Rng rng(seed);
  DMinimum best{std::numeric_limits<double>::infinity(), {}};
  for (int s = 0; s < starts; ++s) {
    Vec v = s == 0 ? scaled(v0, eps1) : random_point_in_D(rng, v0, eps1);
    for (int it = 0; it < steps; ++it) {
      const Vec grad = scaled(h * v, 2.0);
      v = project_onto_D(subtract(v, scaled(grad, 1.0 / lip)), v0, eps1);
    }
    const double val = norm(gamma * v);
    if (val < best.value) best = {val, v};
  }
  return best;
}

Membership sector_membership(const Matrix& gamma, const Vec& v0, double eps1, int sample_d, std::uint64_t seed) {
  Membership m;
  m.gamma_norm = op_norm(gamma);
  if (!(m.gamma_norm > 0.0)) throw std::invalid_argument("sector_membership: gamma must be nonzero");
  const double factor = 2.0 / (eps1 * eps1 * eps1);
  m.min_gamma_v = min_over_D(gamma, v0, eps1).value;
  m.sampled_min = std::numeric_limits<double>::infinity();
  Rng rng(seed);
  for (int i = 0; i < sample_d; ++i) m.sampled_min = std::min(m.sampled_min, norm(gamma * random_point_in_D(rng, v0, eps1)));
  const double worst = std::min(m.min_gamma_v, m.sampled_min);
  m.member = m.gamma_norm <= factor * worst * (1.0 + 1e-12);
  return m;
}

Matrix random_gamma(Rng& rng, std::size_t dim) {
  const std::size_t rows = 1 + static_cast<std::size_t>(rng() % (dim + 1));
  const std::size_t rank = 1 + static_cast<std::size_t>(rng() % std::min(rows, dim));
  std::normal_distribution<double> g;
  const double scale = std::exp(12.0 * (uniform01(rng) - 0.5));
  Matrix out(rows, dim);
  for (std::size_t r = 0; r < rank; ++r) {
    const double sigma = scale * std::exp(2.0 * g(rng));
    out += Matrix::outer(random_unit(rng, rows), random_unit(rng, dim)) * sigma;
  }
  return out;
}

CoverageResult coverage_check(const ConeNet& net, std::size_t trials, std::uint64_t seed, int sample_d, Exec exec) {
  struct Trial {
    bool failed = false;
    double first = 1, second = 1;
    bool violation = false;
  };
  const double eps1 = net.eps1();
  std::vector<Trial> out(trials);
  for_each_index(trials, exec, [&](std::size_t i) {
    Rng rng(mix_seed(seed, i));
    Matrix gamma = random_gamma(rng, net.dim());
    while (!(op_norm(gamma) > 0.0)) gamma = random_gamma(rng, net.dim());
    const TopSingular top = top_singular(gamma);
    Trial& t = out[i];
    const Vec v0 = net.vector(net.nearest(top.right));
    Membership m = sector_membership(gamma, v0, eps1, sample_d, mix_seed(seed ^ 0xabcdefULL, i));
    if (!m.member) {
      const Vec v0b = net.vector(net.nearest(scaled(top.right, -1.0)));
      m = sector_membership(gamma, v0b, eps1, sample_d, mix_seed(seed ^ 0x123457ULL, i));
      t.failed = !m.member;
    }
    // The two steps of the covering argument, for the v0 nearest to v1.
    if (dot(v0, top.right) >= net.threshold()) {
      t.first = norm(gamma * v0) / top.value;
      const DMinimum dm = min_over_D(gamma, v0, eps1);
      t.second = norm(gamma * dm.argmin) / (norm(dm.argmin) * top.value);
      Rng r2(mix_seed(seed ^ 0x55aaULL, i));
      for (int k = 0; k < sample_d; ++k) {
        const Vec v = random_point_in_D(r2, v0, eps1);
        t.second = std::min(t.second, norm(gamma * v) / (norm(v) * top.value));
      }
      t.violation = t.first < net.threshold() * (1 - 1e-12) || t.second < 0.5 * eps1 * eps1 * (1 - 1e-12);
    }
  });
  CoverageResult r;
  r.trials = trials;
  for (const Trial& t : out) {
    r.failures += t.failed ? 1 : 0;
    r.min_first_step = std::min(r.min_first_step, t.first);
    r.min_second_step = std::min(r.min_second_step, t.second);
    r.proof_violations += t.violation ? 1 : 0;
  }
  return r;
}

}  // namespace dwlab
