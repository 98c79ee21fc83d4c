#include "dwlab/weight_classes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

#include "dwlab/random.hpp"

namespace dwlab {

std::vector<Box> cube_family(const Grid& g, int shifts) {
  const int n = g.dim();
  const int k_shifts = std::clamp(shifts, 1, default_shifts(n));
  const std::int64_t cells = g.cells_per_axis();
  std::vector<Box> out;
  std::set<std::pair<int, Coords>> seen;
  for (int level = 0; level <= g.finest_level(); ++level) {
    const std::int64_t s = g.side_cells(level);
    for (int t = 0; t < k_shifts; ++t) {
      Coords off{};
      int rest = t;
      for (int a = n - 1; a >= 0; --a) {
        const int j = rest % 3;
        rest /= 3;
        off[static_cast<std::size_t>(a)] = static_cast<std::int64_t>(std::lround(static_cast<double>(j * s) / 3.0));
      }
      std::array<std::int64_t, kMaxDim> count{};
      std::uint64_t total = 1;
      for (int a = 0; a < n; ++a) {
        const auto i = static_cast<std::size_t>(a);
        count[i] = (cells - off[i]) / s;
        total *= static_cast<std::uint64_t>(std::max<std::int64_t>(0, count[i]));
      }
      for (std::uint64_t idx = 0; idx < total; ++idx) {
        Box b;
        b.level = level;
        b.shift = t;
        std::uint64_t rem = idx;
        for (int a = n - 1; a >= 0; --a) {
          const auto i = static_cast<std::size_t>(a);
          b.lo[i] = off[i] + static_cast<std::int64_t>(rem % static_cast<std::uint64_t>(count[i])) * s;
          rem /= static_cast<std::uint64_t>(count[i]);
        }
        if (seen.insert({level, b.lo}).second) out.push_back(b);
      }
    }
  }
  return out;
}

CellSample make_cell_sample(const SpdMatrix& w, double mass) {
  CellSample c;
  c.mass = mass;
  c.w = w.matrix();
  c.w2 = w.square().matrix();
  const SpdMatrix inv = w.inverse();
  c.winv = inv.matrix();
  c.winv2 = inv.square().matrix();
  c.winv_sqrt = w.inverse_sqrt().matrix();
  c.log_det = w.log_det();
  if (!std::isfinite(c.log_det)) throw std::domain_error("log det of weight is not finite");
  return c;
}

std::vector<Vec> sample_directions(std::size_t dim, int random_count, std::uint64_t seed) {
  std::vector<Vec> d;
  for (std::size_t i = 0; i < dim; ++i) {
    d.push_back(unit_basis(dim, i, 1.0));
    d.push_back(unit_basis(dim, i, -1.0));
  }
  Rng rng(seed);
  for (int k = 0; k < random_count; ++k) d.push_back(random_unit(rng, dim));
  return d;
}

namespace {

class Accumulator {
 public:
  Accumulator(std::size_t n, std::span<const Vec> dirs)
      : sw_(n, n), sw2_(n, n), swinv_(n, n), swinv2_(n, n), dirs_(dirs), slog_(dirs.size(), 0.0) {}

  void add(const CellSample& c) {
    m_ += c.mass;
    sw_ += c.w * c.mass;
    sw2_ += c.w2 * c.mass;
    swinv_ += c.winv * c.mass;
    swinv2_ += c.winv2 * c.mass;
    slogdet_ += c.mass * c.log_det;
    for (std::size_t k = 0; k < dirs_.size(); ++k) slog_[k] += c.mass * std::log(norm(c.winv_sqrt * dirs_[k]));
  }

  CubeRatios finish() const {
    const double inv_m = 1.0 / m_;
    const SpdMatrix wq(sw_ * inv_m);
    const SpdMatrix s(sw2_ * inv_m);
    const SpdMatrix winv_avg(swinv_ * inv_m);
    const SpdMatrix winv2_avg(swinv2_ * inv_m);
    const double avg_ld = slogdet_ * inv_m;
    const SpdMatrix wq_inv = wq.inverse();
    const SpdMatrix s_sqrt = s.sqrt();
    const double ld_wq = wq.log_det();
    const double ld_s = s.log_det();

    CubeRatios r;
    r.b2_ii = op_norm(s_sqrt.matrix() * wq_inv.matrix());
    r.b2_iii = max_eigenvalue(symmetrize(wq_inv.matrix() * s.matrix() * wq_inv.matrix()));
    const Matrix li = lower_triangular_inverse(cholesky(wq.square().matrix()));
    r.b2_i = std::sqrt(max_eigenvalue(symmetrize(li * s.matrix() * li.transpose())));
    r.b2_iv = std::exp(0.5 * ld_s - ld_wq);
    r.ainf_ii = std::exp(ld_wq - avg_ld);
    r.a2 = std::exp(ld_wq + winv_avg.log_det());
    r.thewest = std::exp(ld_s - 2.0 * avg_ld);
    r.chain = {std::exp(0.5 * ld_s), std::exp(ld_wq), std::exp(avg_ld), std::exp(-winv_avg.log_det()),
               std::exp(-0.5 * winv2_avg.log_det())};

    const Matrix wq_isqrt = wq.inverse_sqrt().matrix();
    r.b2_i_sampled = 0.0;
    r.ainf_i = 0.0;
    for (std::size_t k = 0; k < dirs_.size(); ++k) {
      const Vec& a = dirs_[k];
      r.b2_i_sampled = std::max(r.b2_i_sampled, norm(s_sqrt.matrix() * a) / norm(wq.matrix() * a));
      r.ainf_i = std::max(r.ainf_i, std::exp(slog_[k] * inv_m) / norm(wq_isqrt * a));
    }
    return r;
  }

 private:
  double m_ = 0.0;
  Matrix sw_, sw2_, swinv_, swinv2_;
  double slogdet_ = 0.0;
  std::span<const Vec> dirs_;
  Vec slog_;
};

std::uint64_t box_seed(std::uint64_t seed, const Box& b) {
  std::uint64_t h = mix_seed(seed, static_cast<std::uint64_t>(b.level));
  for (const std::int64_t c : b.lo) h = mix_seed(h, static_cast<std::uint64_t>(c));
  return h;
}

struct Field {
  const char* name;
  double CubeRatios::*member;
  double ClassReport::*target;
};

constexpr Field kFields[] = {
    {"b2_i", &CubeRatios::b2_i, &ClassReport::b2_i},
    {"b2_i_sampled", &CubeRatios::b2_i_sampled, &ClassReport::b2_i_sampled},
    {"b2_ii", &CubeRatios::b2_ii, &ClassReport::b2_ii},
    {"b2_iii", &CubeRatios::b2_iii, &ClassReport::b2_iii},
    {"b2_iv", &CubeRatios::b2_iv, &ClassReport::b2_iv},
    {"ainf_i", &CubeRatios::ainf_i, &ClassReport::ainf_i},
    {"ainf_ii", &CubeRatios::ainf_ii, &ClassReport::ainf_ii},
    {"a2", &CubeRatios::a2, &ClassReport::a2},
    {"thewest", &CubeRatios::thewest, &ClassReport::thewest},
};

}  // namespace

CubeRatios sample_ratios(std::span<const CellSample> cells, std::span<const Vec> directions) {
  if (cells.empty()) throw std::invalid_argument("sample_ratios: no cells");
  Accumulator acc(cells.front().w.rows(), directions);
  for (const CellSample& c : cells) acc.add(c);
  return acc.finish();
}

ClassEvaluator::ClassEvaluator(const WeightedSpace& space, std::uint64_t seed) : space_(&space), seed_(seed) {
  const std::uint64_t count = space.grid().cell_count();
  cells_.resize(count);
  for_each_index(count, Exec::parallel, [&](std::size_t c) {
    try {
      cells_[c] = make_cell_sample(space.weight().at(c), space.mu().cell_mass(c));
    } catch (const std::domain_error& e) {
      throw std::domain_error("weight at cell " + std::to_string(c) + ": " + e.what());
    }
  });
}

std::vector<Vec> ClassEvaluator::directions(const Box& b) const {
  return sample_directions(space_->dim(), kRandomDirections, box_seed(seed_, b));
}

CubeRatios ClassEvaluator::ratios(const Box& b) const {
  const std::vector<Vec> dirs = directions(b);
  Accumulator acc(space_->dim(), dirs);
  space_->grid().for_each_cell(b, [&](std::uint64_t c) { acc.add(cells_[c]); });
  return acc.finish();
}

ClassReport class_constants(const WeightedSpace& space, int shifts, Exec exec) {
  const ClassEvaluator ev(space);
  const std::vector<Box> family = cube_family(space.grid(), shifts);
  std::vector<CubeRatios> r(family.size());
  for_each_index(family.size(), exec, [&](std::size_t i) { r[i] = ev.ratios(family[i]); });
  ClassReport rep;
  rep.cube_count = family.size();
  for (const Field& f : kFields) {
    double best = -std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (std::size_t i = 0; i < r.size(); ++i)
      if (r[i].*f.member > best) {
        best = r[i].*f.member;
        arg = i;
      }
    rep.*f.target = best;
    rep.worst[f.name] = family[arg];
  }
  return rep;
}

B2Constants b2_constants(const WeightedSpace& space, int shifts, Exec exec) {
  const ClassReport r = class_constants(space, shifts, exec);
  return {r.b2_i, r.b2_ii, r.b2_iii, r.b2_iv};
}

AinfConstants ainf_constants(const WeightedSpace& space, int shifts, Exec exec) {
  const ClassReport r = class_constants(space, shifts, exec);
  return {r.ainf_i, r.ainf_ii};
}

double thewest_constant(const WeightedSpace& space, int shifts, Exec exec) {
  return class_constants(space, shifts, exec).thewest;
}

std::array<double, 5> det_chain_check(const WeightedSpace& space, const Box& q) {
  const ClassEvaluator ev(space);
  const std::array<double, 5> c = ev.ratios(q).chain;
  for (std::size_t i = 0; i + 1 < c.size(); ++i)
    if (c[i + 1] > c[i] * (1.0 + 1e-9)) {
      std::ostringstream os;
      os << "determinant chain out of order at position " << i << ": " << c[i] << " < " << c[i + 1];
      throw std::logic_error(os.str());
    }
  return c;
}

ScalarAinftyReport scalar_ainfty_report(const WeightedSpace& space, int shifts, std::uint64_t seed, Exec exec) {
  if (space.dim() != 1) throw std::invalid_argument("scalar_ainfty_report: weight must be scalar (N = 1)");
  ScalarAinftyReport rep;
  rep.p_grid = {1.25, 1.5, 2.0, 3.0};
  rep.q_grid = {1.25, 1.5, 2.0, 3.0};
  for (int k = 1; k <= 9; ++k) rep.beta_grid.push_back(0.1 * k);
  const std::vector<Box> family = cube_family(space.grid(), shifts);
  const std::size_t np = rep.p_grid.size(), nb = rep.beta_grid.size();

  struct Local {
    Vec ap, bq, alpha;
    double ainf = 1, delta = std::numeric_limits<double>::infinity();
    std::size_t samples = 0;
  };
  std::vector<Local> loc(family.size());
  for_each_index(family.size(), exec, [&](std::size_t i) {
    const Box& b = family[i];
    Vec w, m;
    space.grid().for_each_cell(b, [&](std::uint64_t c) {
      w.push_back(space.weight().at(c).matrix()(0, 0));
      m.push_back(space.mu().cell_mass(c));
    });
    double mq = 0, sq = 0, slog = 0;
    for (std::size_t k = 0; k < w.size(); ++k) {
      mq += m[k];
      sq += m[k] * w[k];
      slog += m[k] * std::log(w[k]);
    }
    const double avg_w = sq / mq;
    Local& L = loc[i];
    L.ainf = avg_w / std::exp(slog / mq);
    for (std::size_t j = 0; j < np; ++j) {
      const double p = rep.p_grid[j];
      double s = 0;
      for (std::size_t k = 0; k < w.size(); ++k) s += m[k] * std::pow(w[k], -(p - 1.0));
      L.ap.push_back(avg_w * std::pow(s / mq, 1.0 / (p - 1.0)));
      const double q = rep.q_grid[j];
      double t = 0;
      for (std::size_t k = 0; k < w.size(); ++k) t += m[k] * std::pow(w[k], q);
      L.bq.push_back(std::pow(t / mq, 1.0 / q) / avg_w);
    }
    L.alpha.assign(nb, 0.0);
    if (w.size() < 2) return;
    Rng rng(box_seed(seed, b));
    for (std::size_t d = 0; d < nb; ++d)
      for (int draw = 0; draw < 32; ++draw) {
        double me = 0, se = 0;
        for (std::size_t k = 0; k < w.size(); ++k)
          if (uniform01(rng) < rep.beta_grid[d]) {
            me += m[k];
            se += m[k] * w[k];
          }
        const double x = me / mq, y = se / sq;
        if (me <= 0.0 || x >= 1.0 - 1e-15) continue;
        ++L.samples;
        for (std::size_t e = 0; e < nb; ++e)
          if (x <= rep.beta_grid[e]) L.alpha[e] = std::max(L.alpha[e], y);
        L.delta = std::min(L.delta, std::log(y) / std::log(x));
      }
  });
  rep.ap_prime.assign(np, 0.0);
  rep.bq.assign(np, 0.0);
  rep.alpha.assign(nb, 0.0);
  rep.ainf = 0.0;
  double delta = std::numeric_limits<double>::infinity();
  for (const Local& L : loc) {
    rep.ainf = std::max(rep.ainf, L.ainf);
    for (std::size_t j = 0; j < np; ++j) {
      rep.ap_prime[j] = std::max(rep.ap_prime[j], L.ap[j]);
      rep.bq[j] = std::max(rep.bq[j], L.bq[j]);
    }
    for (std::size_t e = 0; e < nb; ++e) rep.alpha[e] = std::max(rep.alpha[e], L.alpha[e]);
    delta = std::min(delta, L.delta);
    rep.subset_samples += L.samples;
  }
  rep.delta_fit = std::isfinite(delta) ? delta : 1.0;
  return rep;
}

CorollaryReport corollary_relations(const WeightedSpace& space, int shifts, Exec exec) {
  const ClassEvaluator ev(space);
  const std::vector<Box> family = cube_family(space.grid(), shifts);
  const std::size_t n = space.dim();
  CorollaryReport rep;
  rep.diagonal = true;
  for (const SpdMatrix& w : space.weight().cells())
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j && w.matrix()(i, j) != 0.0) rep.diagonal = false;

  struct Local {
    CubeRatios r;
    double identity = 0, column_b2 = 0, column_ratio = 0, diag = 0;
  };
  std::vector<Local> loc(family.size());
  for_each_index(family.size(), exec, [&](std::size_t i) {
    const Box& b = family[i];
    Local& L = loc[i];
    L.r = ev.ratios(b);
    L.identity = std::abs(L.r.thewest - L.r.b2_iv * L.r.b2_iv * L.r.ainf_ii * L.r.ainf_ii) / L.r.thewest;
    const std::vector<Vec> dirs = ev.directions(b);
    Vec s1(dirs.size(), 0.0), s2(dirs.size(), 0.0);
    double m = 0;
    space.grid().for_each_cell(b, [&](std::uint64_t c) {
      const CellSample& cs = ev.cells()[c];
      m += cs.mass;
      for (std::size_t k = 0; k < dirs.size(); ++k) {
        const double wa = norm(cs.w * dirs[k]);
        s1[k] += cs.mass * wa;
        s2[k] += cs.mass * wa * wa;
      }
    });
    double basis_max = 0;
    for (std::size_t k = 0; k < dirs.size(); ++k) {
      const double b2 = std::sqrt(s2[k] / m) / (s1[k] / m);
      L.column_b2 = std::max(L.column_b2, b2);
      L.column_ratio = std::max(L.column_ratio, b2 / L.r.b2_ii);
      if (k < 2 * n) basis_max = std::max(basis_max, b2);
    }
    L.diag = std::abs(L.r.b2_ii - basis_max);
  });
  for (const Local& L : loc) {
    rep.identity_residual = std::max(rep.identity_residual, L.identity);
    rep.thewest = std::max(rep.thewest, L.r.thewest);
    rep.b2_iv = std::max(rep.b2_iv, L.r.b2_iv);
    rep.ainf_ii = std::max(rep.ainf_ii, L.r.ainf_ii);
    rep.column_b2 = std::max(rep.column_b2, L.column_b2);
    rep.column_ratio = std::max(rep.column_ratio, L.column_ratio);
    if (rep.diagonal) rep.diagonal_residual = std::max(rep.diagonal_residual, L.diag);
  }
  return rep;
}

}  // namespace dwlab
