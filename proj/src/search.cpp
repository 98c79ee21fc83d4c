#include "dwlab/search.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "dwlab/random.hpp"

namespace dwlab {

GeneratorKind parse_generator_kind(const std::string& name) {
  if (name == "constant") return GeneratorKind::constant;
  if (name == "diagonal" || name == "diagonal-scalar-products") return GeneratorKind::diagonal;
  if (name == "rotated-diagonal") return GeneratorKind::rotated_diagonal;
  if (name == "log-gaussian") return GeneratorKind::log_gaussian;
  if (name == "two-scale" || name == "two-scale-adversarial") return GeneratorKind::two_scale;
  throw std::invalid_argument("unknown generator kind '" + name + "'");
}

std::string generator_name(GeneratorKind k) {
  switch (k) {
    case GeneratorKind::constant: return "constant";
    case GeneratorKind::diagonal: return "diagonal";
    case GeneratorKind::rotated_diagonal: return "rotated-diagonal";
    case GeneratorKind::log_gaussian: return "log-gaussian";
    case GeneratorKind::two_scale: return "two-scale";
  }
  return "?";
}

namespace {

// Sum over the ancestors of each cell of independent N(0,1) draws, level k
// weighted by 2^(-c k), normalized to unit variance.
Vec multiscale_field(Rng& rng, const Grid& g, double c) {
  Vec out(g.cell_count(), 0.0);
  double var = 0.0;
  for (int k = 0; k <= g.finest_level(); ++k) {
    const double w = std::pow(2.0, -c * k);
    var += w * w;
    Vec z(g.cubes_at(k));
    for (double& x : z) x = random_gaussian(rng, 1)[0];
    for (std::uint64_t cell = 0; cell < g.cell_count(); ++cell)
      out[cell] += w * z[g.ancestor(g.cell_cube(cell), k).index];
  }
  const double s = 1.0 / std::sqrt(var);
  for (double& x : out) x *= s;
  return out;
}

Matrix givens_product(std::size_t n, std::span<const double> angles) {
  Matrix u = Matrix::identity(n);
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double c = std::cos(angles[k]), s = std::sin(angles[k]);
      ++k;
      for (std::size_t r = 0; r < n; ++r) {
        const double a = u(r, i), b = u(r, j);
        u(r, i) = c * a - s * b;
        u(r, j) = s * a + c * b;
      }
    }
  return u;
}

Matrix symmetric_from(std::size_t n, std::span<const double> p) {
  Matrix s(n, n);
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      s(i, j) = p[k];
      s(j, i) = p[k];
      ++k;
    }
  return s;
}

std::vector<Matrix> draw_weight(Rng& rng, const GeneratorParams& p, const Grid& g, std::size_t N) {
  const std::uint64_t cells = g.cell_count();
  std::vector<Matrix> w;
  w.reserve(cells);
  switch (p.kind) {
    case GeneratorKind::constant: {
      const Matrix m = random_spd(rng, N, 0.5 * p.amplitude).matrix();
      w.assign(cells, m);
      break;
    }
    case GeneratorKind::diagonal:
    case GeneratorKind::rotated_diagonal: {
      std::vector<Vec> logs;
      for (std::size_t i = 0; i < N; ++i) logs.push_back(multiscale_field(rng, g, p.correlation));
      std::vector<Vec> angles;
      if (p.kind == GeneratorKind::rotated_diagonal)
        for (std::size_t i = 0; i < N * (N - 1) / 2; ++i) angles.push_back(multiscale_field(rng, g, p.correlation));
      for (std::uint64_t c = 0; c < cells; ++c) {
        Vec d(N);
        for (std::size_t i = 0; i < N; ++i) d[i] = std::exp(p.amplitude * logs[i][c]);
        Matrix m = Matrix::diagonal(d);
        if (!angles.empty()) {
          Vec a(angles.size());
          for (std::size_t i = 0; i < a.size(); ++i) a[i] = std::numbers::pi * angles[i][c];
          const Matrix u = givens_product(N, a);
          m = symmetrize(u * m * u.transpose());
        }
        w.push_back(std::move(m));
      }
      break;
    }
    case GeneratorKind::log_gaussian: {
      std::vector<Matrix> acc(cells, Matrix(N, N));
      double var = 0.0;
      for (int k = 0; k <= g.finest_level(); ++k) {
        const double wk = std::pow(2.0, -p.correlation * k);
        var += wk * wk;
        std::vector<Matrix> z;
        for (std::uint64_t i = 0; i < g.cubes_at(k); ++i) z.push_back(random_symmetric(rng, N, 1.0));
        for (std::uint64_t c = 0; c < cells; ++c) acc[c] += z[g.ancestor(g.cell_cube(c), k).index] * wk;
      }
      const double s = p.amplitude / std::sqrt(var);
      for (std::uint64_t c = 0; c < cells; ++c) w.push_back(spd_exp(acc[c] * s).matrix());
      break;
    }
    case GeneratorKind::two_scale: {
      Vec d(N, 1.0);
      d.front() = std::exp(p.amplitude);
      d.back() = N == 1 ? std::exp(p.amplitude) : std::exp(-p.amplitude);
      const Matrix dm = Matrix::diagonal(d);
      const Matrix u1 = random_orthogonal(rng, N), u2 = random_orthogonal(rng, N);
      const Matrix a = symmetrize(u1 * dm * u1.transpose());
      const Matrix b = N == 1 ? Matrix::identity(1) : symmetrize(u2 * dm * u2.transpose());
      const int coarse = g.finest_level() / 3;
      for (std::uint64_t c = 0; c < cells; ++c) {
        const DyadicCube cell = g.cell_cube(c);
        const Coords fc = g.coords(cell), cc = g.coords(g.ancestor(cell, coarse));
        std::int64_t parity = 0;
        for (int ax = 0; ax < g.dim(); ++ax) parity += fc[static_cast<std::size_t>(ax)] + cc[static_cast<std::size_t>(ax)];
        w.push_back((parity & 1) ? b : a);
      }
      break;
    }
  }
  return w;
}

}  // namespace

GeneratedField generate(const GeneratorParams& p, int n, std::size_t N, int L) {
  if (n < 1 || n > kMaxDim) throw std::invalid_argument("generate: n must lie in 1..3");
  if (N < 1) throw std::invalid_argument("generate: N must be >= 1");
  if (L < 0) throw std::invalid_argument("generate: L must be >= 0");
  if (!(p.amplitude >= 0.0)) throw std::invalid_argument("generate: amplitude must be >= 0");
  const Grid g(n, L);
  Rng rng(p.seed);
  GeneratedField out;
  out.field.n = n;
  out.field.N = N;
  out.field.L = L;
  out.field.weight = draw_weight(rng, p, g, N);
  const int tries = std::max(1, p.retries);
  for (int attempt = 1; attempt <= tries; ++attempt) {
    Vec density(g.cell_count(), 1.0);
    if (p.kind != GeneratorKind::constant && p.mu_amplitude > 0.0) {
      const Vec f = multiscale_field(rng, g, p.correlation);
      for (std::size_t c = 0; c < density.size(); ++c) density[c] = std::exp(p.mu_amplitude * f[c]);
    }
    const double dbl = doubling_check(MeasuredGrid(g, density), default_shifts(n)).constant;
    if (dbl <= p.doubling_cap) {
      out.field.density = std::move(density);
      out.attempts = attempt;
      out.doubling = dbl;
      return out;
    }
  }
  throw std::runtime_error("generate: doubling constant above the cap after " + std::to_string(tries) + " attempts");
}

namespace {

double chol_log_det(const Matrix& spd) {
  const Matrix l = cholesky(spd);
  double s = 0.0;
  for (std::size_t i = 0; i < l.rows(); ++i) s += std::log(l(i, i));
  return 2.0 * s;
}

}  // namespace

DetConstants det_constants(const Grid& g, const Vec& density, const std::vector<Matrix>& cells,
                           const std::vector<Box>& family) {
  const std::size_t N = cells.front().rows();
  const double vol = g.volume(g.finest_level());
  std::vector<Matrix> w2(cells.size());
  Vec ld(cells.size());
  for (std::size_t c = 0; c < cells.size(); ++c) {
    w2[c] = cells[c] * cells[c];
    ld[c] = chol_log_det(cells[c]);
  }
  DetConstants out;
  Matrix sw(N, N), sw2(N, N);
  for (const Box& b : family) {
    sw = Matrix(N, N);
    sw2 = Matrix(N, N);
    double m = 0.0, sl = 0.0;
    g.for_each_cell(b, [&](std::uint64_t c) {
      const double mass = density[c] * vol;
      m += mass;
      sw += cells[c] * mass;
      sw2 += w2[c] * mass;
      sl += ld[c] * mass;
    });
    const double ld_wq = chol_log_det(sw * (1.0 / m));
    const double ld_s = chol_log_det(sw2 * (1.0 / m));
    out.b2_iv = std::max(out.b2_iv, std::exp(0.5 * ld_s - ld_wq));
    out.ainf_ii = std::max(out.ainf_ii, std::exp(ld_wq - sl / m));
  }
  return out;
}

DetConstants det_constants(const Grid& g, const Vec& density, const std::vector<Matrix>& cells, int shifts) {
  return det_constants(g, density, cells, cube_family(g, shifts));
}

SearchFamily parse_search_family(const std::string& name) {
  if (name == "log-cell") return SearchFamily::log_cell;
  if (name == "log-multiscale") return SearchFamily::log_multiscale;
  if (name == "rotated-diagonal") return SearchFamily::rotated_diagonal;
  throw std::invalid_argument("unknown search family '" + name + "'");
}

std::string search_family_name(SearchFamily f) {
  switch (f) {
    case SearchFamily::log_cell: return "log-cell";
    case SearchFamily::log_multiscale: return "log-multiscale";
    case SearchFamily::rotated_diagonal: return "rotated-diagonal";
  }
  return "?";
}

namespace {

// Log-eigenvalues are clamped to [-6, 6] so W^2 stays well inside the
// conditioning limits of SpdMatrix.
constexpr double kLogClamp = 6.0;

Matrix clamped_exp(const Matrix& sym) {
  return spectral_apply(symmetric_eigen(sym), [](double x) { return std::exp(std::clamp(x, -kLogClamp, kLogClamp)); });
}

// Parameter blocks of a search family and the map to cell weights.
class Parametrization {
 public:
  Parametrization(SearchFamily f, const Grid& g, std::size_t N) : family_(f), grid_(g), N_(N) {
    sym_ = N * (N + 1) / 2;
    switch (f) {
      case SearchFamily::log_cell:
        blocks_ = g.cell_count();
        block_size_ = sym_;
        break;
      case SearchFamily::log_multiscale:
        blocks_ = g.cube_count();
        block_size_ = sym_;
        break;
      case SearchFamily::rotated_diagonal:
        blocks_ = g.cell_count();
        block_size_ = N + N * (N - 1) / 2;
        break;
    }
  }

  std::size_t blocks() const { return blocks_; }
  std::size_t block_size() const { return block_size_; }
  std::size_t size() const { return blocks_ * block_size_; }

  // Entries that the feasibility projection scales (rotation angles are not).
  bool scalable(std::size_t i) const {
    return family_ != SearchFamily::rotated_diagonal || i % block_size_ < N_;
  }

  std::vector<Matrix> cells(const Vec& p, double t) const {
    const std::uint64_t n = grid_.cell_count();
    std::vector<Matrix> out;
    out.reserve(n);
    for (std::uint64_t c = 0; c < n; ++c) {
      if (family_ == SearchFamily::log_cell) {
        out.push_back(clamped_exp(symmetric_from(N_, std::span<const double>(p).subspan(c * sym_, sym_)) * t));
      } else if (family_ == SearchFamily::log_multiscale) {
        Matrix s(N_, N_);
        const DyadicCube cell = grid_.cell_cube(c);
        for (int k = 0; k <= grid_.finest_level(); ++k) {
          const std::uint64_t id = grid_.id(grid_.ancestor(cell, k));
          s += symmetric_from(N_, std::span<const double>(p).subspan(id * sym_, sym_));
        }
        out.push_back(clamped_exp(s * t));
      } else {
        const auto blk = std::span<const double>(p).subspan(c * block_size_, block_size_);
        Vec d(N_);
        for (std::size_t i = 0; i < N_; ++i) d[i] = std::exp(std::clamp(t * blk[i], -kLogClamp, kLogClamp));
        const Matrix u = givens_product(N_, blk.subspan(N_));
        out.push_back(symmetrize(u * Matrix::diagonal(d) * u.transpose()));
      }
    }
    return out;
  }

  void scale(Vec& p, double t) const {
    for (std::size_t i = 0; i < p.size(); ++i)
      if (scalable(i)) p[i] *= t;
  }

 private:
  SearchFamily family_;
  Grid grid_;
  std::size_t N_;
  std::size_t sym_ = 0, blocks_ = 0, block_size_ = 0;
};

struct Evaluated {
  Vec p;
  DetConstants c;
};

struct ChainResult {
  Evaluated best;
  std::vector<TrailPoint> trail;
  std::uint64_t evaluations = 0;
};

class Chain {
 public:
  Chain(const Parametrization& par, const Grid& g, double cap, int shifts, std::uint64_t seed)
      : par_(par), grid_(g), cap_(cap), family_(cube_family(g, shifts)), rng_(seed), density_(g.cell_count(), 1.0) {}

  DetConstants eval(const Vec& p, double t = 1.0) {
    ++evaluations_;
    return det_constants(grid_, density_, par_.cells(p, t), family_);
  }

  // Shrinks the scalable parameters until b2_iv <= cap.
  Evaluated project(Vec p) {
    DetConstants c = eval(p);
    if (c.b2_iv <= cap_) return {std::move(p), c};
    double lo = 0.0, hi = 1.0;
    DetConstants at_lo{1.0, 1.0};
    for (int it = 0; it < 14; ++it) {
      const double mid = 0.5 * (lo + hi);
      const DetConstants cm = eval(p, mid);
      if (cm.b2_iv <= cap_) {
        lo = mid;
        at_lo = cm;
      } else {
        hi = mid;
      }
    }
    par_.scale(p, lo);
    return {std::move(p), at_lo};
  }

  Vec random_params(double scale) {
    Vec p(par_.size());
    for (std::size_t i = 0; i < p.size(); ++i)
      p[i] = par_.scalable(i) ? scale * random_gaussian(rng_, 1)[0] : std::numbers::pi * uniform01(rng_);
    return p;
  }

  ChainResult run(std::uint64_t budget, const InclusionOptions& opt) {
    ChainResult out;
    Evaluated cur{Vec(par_.size(), 0.0), DetConstants{}};
    bool have = false;
    for (int i = 0; i < std::max(1, opt.inits); ++i) {
      Evaluated e = project(random_params(1.0));
      if (!have || e.c.ainf_ii > cur.c.ainf_ii) cur = std::move(e);
      have = true;
    }
    out.best = cur;
    out.trail.push_back({0, cur.c.ainf_ii, cur.c.b2_iv});
    const double ratio = budget > 0 ? std::pow(opt.t_final / opt.t0, 1.0 / static_cast<double>(budget)) : 1.0;
    double t = opt.t0;
    for (std::uint64_t step = 1; step <= budget; ++step) {
      Vec p = cur.p;
      const std::size_t blk = static_cast<std::size_t>(rng_() % par_.blocks());
      for (std::size_t j = 0; j < par_.block_size(); ++j) p[blk * par_.block_size() + j] += 0.5 * random_gaussian(rng_, 1)[0];
      Evaluated e = project(std::move(p));
      const double diff = std::log(e.c.ainf_ii) - std::log(cur.c.ainf_ii);
      if (diff >= 0.0 || uniform01(rng_) < std::exp(diff / t)) {
        cur = std::move(e);
        if (cur.c.ainf_ii > out.best.c.ainf_ii) {
          out.best = cur;
          out.trail.push_back({step, cur.c.ainf_ii, cur.c.b2_iv});
        }
      }
      t *= ratio;
    }
    out.evaluations = evaluations_;
    return out;
  }

 private:
  const Parametrization& par_;
  Grid grid_;
  double cap_;
  std::vector<Box> family_;
  Rng rng_;
  Vec density_;
  std::uint64_t evaluations_ = 0;
};

}  // namespace

InclusionResult inclusion_search(int n, std::size_t N, int L, double b2_cap, std::uint64_t budget, std::uint64_t seed,
                                 const InclusionOptions& opt, Exec exec) {
  if (N < 2)
    throw std::invalid_argument("inclusion search needs N >= 2: for scalar weights B2 is known to imply A-infinity");
  if (!(b2_cap > 1.0)) throw std::invalid_argument("inclusion search: b2 cap must exceed 1");
  const Grid g(n, L);
  const int shifts = opt.shifts > 0 ? opt.shifts : default_shifts(n);
  const Parametrization par(opt.family, g, N);
  const int chains = std::max(1, opt.chains);
  std::vector<ChainResult> runs(static_cast<std::size_t>(chains));
  for_each_index(runs.size(), exec, [&](std::size_t c) {
    Chain chain(par, g, b2_cap, shifts, mix_seed(seed, c));
    runs[c] = chain.run(budget, opt);
  });
  std::size_t best = 0;
  InclusionResult out;
  out.family = opt.family;
  for (std::size_t c = 0; c < runs.size(); ++c) {
    out.evaluations += runs[c].evaluations;
    if (runs[c].best.c.ainf_ii > runs[best].best.c.ainf_ii) best = c;
  }
  out.trail = runs[best].trail;
  out.best.n = n;
  out.best.N = N;
  out.best.L = L;
  out.best.density.assign(g.cell_count(), 1.0);
  out.best.weight = par.cells(runs[best].best.p, 1.0);
  out.report = class_constants(make_space(out.best), shifts, exec);
  out.ainf_ii = out.report.ainf_ii;
  out.b2_iv = out.report.b2_iv;
  return out;
}

}  // namespace dwlab
