#include "dwlab/tb.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>

#include "dwlab/random.hpp"
#include "dwlab/weight_classes.hpp"

namespace dwlab {

double gamma_norm(const Matrix& g, GammaNorm kind) {
  return kind == GammaNorm::op ? op_norm(g) : frobenius_norm(g);
}

CarlesonField::CarlesonField(Grid grid, std::size_t rows, std::size_t cols)
    : grid_(std::move(grid)), rows_(rows), cols_(cols), values_(grid_.cube_count(), Matrix(rows, cols)) {
  if (rows == 0 || cols == 0) throw std::invalid_argument("CarlesonField: empty matrix shape");
}

void CarlesonField::set(const DyadicCube& r, Matrix m) {
  if (m.rows() != rows_ || m.cols() != cols_) throw std::invalid_argument("CarlesonField::set: shape mismatch");
  if (!m.is_finite()) throw std::invalid_argument("CarlesonField::set: non-finite entry");
  values_[grid_.id(r)] = std::move(m);
}

double box_integral(const CarlesonField& gamma, const MeasuredGrid& mu, const DyadicCube& q, GammaNorm kind) {
  double s = 0.0;
  gamma.grid().for_each_subcube(q, [&](const DyadicCube& r) {
    const double n = gamma_norm(gamma.at(r), kind);
    s += n * n * mu.measure(r);
  });
  return s * kLn2;
}

CarlesonNorm carleson_norm(const CarlesonField& gamma, const MeasuredGrid& mu, GammaNorm kind) {
  const Grid& g = gamma.grid();
  Vec sum(g.cube_count(), 0.0);
  CarlesonNorm out{0.0, g.root()};
  for (int level = g.finest_level(); level >= 0; --level)
    for (std::uint64_t i = 0; i < g.cubes_at(level); ++i) {
      const DyadicCube q{level, i};
      const double n = gamma_norm(gamma.at(q), kind);
      double s = n * n * mu.measure(q);
      if (level < g.finest_level())
        for (const DyadicCube& c : g.children(q)) s += sum[g.id(c)];
      sum[g.id(q)] = s;
    }
  // Coarse cubes first so ties go to the largest cube.
  for (std::uint64_t id = 0; id < g.cube_count(); ++id) {
    const DyadicCube q = g.from_id(id);
    const double v = sum[id] * kLn2 / mu.measure(q);
    if (v > out.value) out = {v, q};
  }
  return out;
}

double testfun_carleson(const CarlesonField& gamma, const WeightedSpace& space, const DyadicCube& q,
                        std::span<const Vec> b_cells) {
  const SubtreeAverages avg(space, q, b_cells);
  double s = 0.0;
  space.grid().for_each_subcube(q, [&](const DyadicCube& r) {
    const Vec ge = gamma.at(r) * avg.at(r);
    s += dot(ge, ge) * space.measure(r);
  });
  return s * kLn2;
}

TestFamily canonical_family(const WeightedSpace& space) {
  auto inv = std::make_shared<std::vector<Matrix>>();
  const auto& cells = space.weight().cells();
  inv->reserve(cells.size());
  for (std::size_t c = 0; c < cells.size(); ++c) {
    if (cells[c].condition_number() > 1e12)
      throw std::domain_error("canonical family: W is near singular at cell " + std::to_string(c));
    inv->push_back(cells[c].inverse().matrix());
  }
  const WeightedSpace* sp = &space;
  TestFamily f;
  f.name = "canonical";
  f.linear = true;
  f.cells = [sp, inv](const DyadicCube& q, const Vec& v) {
    const Vec wv = sp->average(q).matrix() * v;
    std::vector<Vec> out;
    sp->grid().for_each_cell(q, [&](std::uint64_t c) { out.push_back((*inv)[c] * wv); });
    return out;
  };
  f.expectation = [sp](const DyadicCube& q, const DyadicCube& r, const Vec& v) {
    return sp->average_inverse(r).matrix() * (sp->average(q).matrix() * v);
  };
  f.gram = [sp, inv](const DyadicCube& q) {
    Matrix m(sp->dim(), sp->dim());
    sp->grid().for_each_cell(q, [&](std::uint64_t c) { m += ((*inv)[c] * (*inv)[c]) * sp->mu().cell_mass(c); });
    const Matrix& wq = sp->average(q).matrix();
    return symmetrize(wq * m * wq) * (1.0 / sp->measure(q));
  };
  return f;
}

Vec family_expectation(const TestFamily& fam, const WeightedSpace& space, const DyadicCube& q, const DyadicCube& r,
                       const Vec& v) {
  if (fam.expectation) return fam.expectation(q, r, v);
  const SubtreeAverages avg(space, q, fam.cells(q, v));
  return avg.at(r);
}

ExpectationFn family_expectation_fn(const TestFamily& fam, const WeightedSpace& space, const Vec& v0) {
  if (fam.expectation) {
    auto e = fam.expectation;
    return [e, v0](const DyadicCube& s, const DyadicCube& r) { return e(s, r, v0); };
  }
  auto cache = std::make_shared<std::map<DyadicCube, std::shared_ptr<SubtreeAverages>>>();
  auto cells = fam.cells;
  const WeightedSpace* sp = &space;
  return [cache, cells, sp, v0](const DyadicCube& s, const DyadicCube& r) {
    auto it = cache->find(s);
    if (it == cache->end()) it = cache->emplace(s, std::make_shared<SubtreeAverages>(*sp, s, cells(s, v0))).first;
    return it->second->at(r);
  };
}

namespace {

std::vector<Vec> test_vectors(std::size_t n, int random_count, std::uint64_t seed) {
  std::vector<Vec> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(unit_basis(n, i, 1.0));
    out.push_back(unit_basis(n, i, -1.0));
  }
  Rng rng(seed);
  for (int k = 0; k < random_count; ++k) out.push_back(random_unit(rng, n));
  return out;
}

double l2_ratio(const WeightedSpace& space, const DyadicCube& q, std::span<const Vec> cells) {
  double s = 0.0;
  std::size_t k = 0;
  space.grid().for_each_cell(q, [&](std::uint64_t c) {
    s += dot(cells[k], cells[k]) * space.mu().cell_mass(c);
    ++k;
  });
  return s / space.measure(q);
}

}  // namespace

Hypotheses verify_hypotheses(const WeightedSpace& space, const CarlesonField& gamma, const TestFamily& fam,
                             int vec_samples, std::uint64_t seed, int shifts, Exec exec) {
  const Grid& g = space.grid();
  const std::size_t n = space.dim();
  if (gamma.cols() != n) throw std::invalid_argument("verify_hypotheses: gamma has the wrong number of columns");
  Hypotheses h;
  h.c1 = doubling_check(space.mu(), default_shifts(g.dim()), exec).constant;
  h.c2 = std::sqrt(thewest_constant(space, shifts, exec));
  const std::vector<Vec> vs = test_vectors(n, vec_samples, seed);
  const bool exact4 = fam.linear && static_cast<bool>(fam.expectation);

  struct PerCube {
    double norm_err = 0, c3 = 0, c4 = 0;
  };
  std::vector<PerCube> per(g.cube_count());
  for_each_index(g.cube_count(), exec, [&](std::size_t id) {
    const DyadicCube q = g.from_id(id);
    PerCube& pc = per[id];
    for (const Vec& v : vs) {
      const std::vector<Vec> cells = fam.cells(q, v);
      const SubtreeAverages avg(space, q, cells);
      pc.norm_err = std::max(pc.norm_err, std::abs(dot(v, avg.at(q)) - 1.0));
      if (!fam.gram) pc.c3 = std::max(pc.c3, l2_ratio(space, q, cells));
      if (!exact4) pc.c4 = std::max(pc.c4, testfun_carleson(gamma, space, q, cells) / space.measure(q));
    }
    if (fam.gram) pc.c3 = std::max(0.0, max_eigenvalue(fam.gram(q)));
    if (exact4) {
      Matrix k(n, n);
      g.for_each_subcube(q, [&](const DyadicCube& r) {
        Matrix a(n, n);
        for (std::size_t j = 0; j < n; ++j) {
          const Vec col = fam.expectation(q, r, unit_basis(n, j));
          for (std::size_t i = 0; i < n; ++i) a(i, j) = col[i];
        }
        const Matrix ga = gamma.at(r) * a;
        k += (ga.transpose() * ga) * space.measure(r);
      });
      pc.c4 = std::max(0.0, max_eigenvalue(symmetrize(k))) * kLn2 / space.measure(q);
    }
  });
  for (std::uint64_t id = 0; id < g.cube_count(); ++id) {
    h.max_normalization_error = std::max(h.max_normalization_error, per[id].norm_err);
    if (per[id].c3 > h.c3) {
      h.c3 = per[id].c3;
      h.c3_cube = g.from_id(id);
    }
    if (per[id].c4 > h.c4) {
      h.c4 = per[id].c4;
      h.c4_cube = g.from_id(id);
    }
  }
  h.c3 = std::sqrt(h.c3);
  h.c4 = std::sqrt(h.c4);
  return h;
}

CarlesonField zero_gamma(const Grid& g, std::size_t rows, std::size_t cols) { return CarlesonField(g, rows, cols); }

CarlesonField constant_gamma(const Grid& g, const Matrix& value) {
  CarlesonField f(g, value.rows(), value.cols());
  for (std::uint64_t id = 0; id < g.cube_count(); ++id) f.set(g.from_id(id), value);
  return f;
}

CarlesonField damped_gamma(const Grid& g, const Vec& v, double rate) {
  CarlesonField f(g, 1, v.size());
  for (std::uint64_t id = 0; id < g.cube_count(); ++id) {
    const DyadicCube q = g.from_id(id);
    f.set(q, Matrix::row(v) * std::pow(2.0, -rate * q.level));
  }
  return f;
}

CarlesonField martingale_gamma(const WeightedSpace& space) {
  const Grid& g = space.grid();
  const std::size_t n = space.dim();
  CarlesonField f(g, 1, n);
  for (std::uint64_t id = 1; id < g.cube_count(); ++id) {
    const DyadicCube q = g.from_id(id);
    const Matrix d = space.average(q).matrix() - space.average(g.parent(q)).matrix();
    f.set(q, Matrix::row(d.row_span(0)));
  }
  return f;
}

CarlesonField random_gamma_field(const Grid& g, std::size_t rows, std::size_t cols, std::uint64_t seed) {
  CarlesonField f(g, rows, cols);
  Rng rng(seed);
  for (std::uint64_t id = 0; id < g.cube_count(); ++id) {
    Matrix m(rows, cols);
    for (double& x : m.data()) x = 2.0 * uniform01(rng) - 1.0;
    f.set(g.from_id(id), std::move(m));
  }
  return f;
}

TbParams proof_order_params(double eps2) {
  TbParams p;
  p.eps2 = eps2;
  p.eps3 = eps2 * eps2 / 8.0;
  p.eps1 = eps2 / 2.0;
  p.lambda = 16.0;
  return p;
}

namespace {

double deviation(const Matrix& a_inv, const Matrix& b) {
  Matrix d = a_inv * b;
  for (std::size_t i = 0; i < d.rows(); ++i) d(i, i) -= 1.0;
  return op_norm(d);
}

struct SectorWork {
  SectorReport report;
  std::vector<ChainViolation> violations;
};

SectorWork run_sector(const WeightedSpace& space, const CarlesonField& gamma, const TestFamily& fam,
                      const TbParams& p, const DyadicCube& root, std::uint64_t net_index, const Vec& v0,
                      const std::vector<unsigned char>& assigned) {
  const MeasuredGrid& mu = space.mu();
  SectorWork w;
  SectorReport& rep = w.report;
  rep.net_index = net_index;
  rep.v0 = v0;
  const ExpectationFn ef = family_expectation_fn(fam, space, v0);
  const IteratedDecomposition dec =
      iterated_sawtooth(mu, root, {corona_criterion(space, p.eps3), kato_criterion(space, v0, p.eps2, ef)});
  rep.corona_packing = packing_constant(dec.runs[0], mu);
  for (std::size_t i = 1; i < dec.runs.size(); ++i)
    rep.kato_max_first_generation = std::max(rep.kato_max_first_generation, max_first_generation_ratio(dec.runs[i], mu));
  rep.pieces = dec.pieces.size();
  rep.decomposition_residual = dec.residual;

  const double factor = 2.0 / (p.eps1 * p.eps1 * p.eps1);
  const double rank_factor =
      p.norm == GammaNorm::op ? 1.0 : static_cast<double>(std::min(gamma.rows(), gamma.cols()));
  const double pert = 2.0 * p.eps3 / (1.0 - p.eps3);
  auto check = [&](bool ok, const DyadicCube& s1, const DyadicCube& s2, const DyadicCube& r, const char* what,
                   double value, double bound) {
    if (!ok) w.violations.push_back({net_index, root, s1, s2, r, what, value, bound});
  };
  auto le = [](double a, double b) { return a <= b + 1e-12 * std::max(std::abs(b), 1.0); };
  auto ge = [](double a, double b) { return a >= b - 1e-12 * std::max(std::abs(b), 1.0); };

  for (const SawtoothPiece& piece : dec.pieces) {
    const DyadicCube& s1 = piece.chain[0];
    const DyadicCube& s2 = piece.chain[1];
    const Matrix& w1_inv = space.average_inverse(s1).matrix();
    const Matrix& w2_inv = space.average_inverse(s2).matrix();
    const double dev_s2 = deviation(w1_inv, space.average(s2).matrix());
    double piece_sum = 0.0;
    for (const DyadicCube& r : piece.cubes) {
      if (!assigned[space.grid().id(r)]) continue;
      ++rep.cubes;
      const Matrix& wr = space.average(r).matrix();
      const Vec e = ef(s2, r);
      const double len = norm(e);
      const double proj_kato = dot(v0, w2_inv * (wr * e));
      const double proj = dot(v0, e);
      check(le(len, 1.0 / p.eps2), s1, s2, r, "kato_length", len, 1.0 / p.eps2);
      check(ge(proj_kato, p.eps2), s1, s2, r, "kato_projection", proj_kato, p.eps2);
      const double dev_r = deviation(w1_inv, wr);
      check(le(dev_r, p.eps3), s1, s2, r, "corona_deviation", dev_r, p.eps3);
      check(le(dev_s2, p.eps3), s1, s2, r, "corona_deviation_s2", dev_s2, p.eps3);
      const double dev_2r = deviation(w2_inv, wr);
      check(le(dev_2r, pert), s1, s2, r, "perturbation", dev_2r, pert);
      check(ge(proj, p.eps2 - pert / p.eps2), s1, s2, r, "perturbed_projection", proj, p.eps2 - pert / p.eps2);
      check(ge(proj, p.eps2 / 2.0), s1, s2, r, "half_eps2_projection", proj, p.eps2 / 2.0);
      check(ge(proj, p.eps1) && le(len, 1.0 / p.eps1), s1, s2, r, "in_D", proj, p.eps1);
      const Matrix& gm = gamma.at(r);
      const double gop = op_norm(gm);
      const double gev = norm(gm * e);
      check(le(gop, factor * gev), s1, s2, r, "sector_bound", gop, factor * gev);
      const double m = mu.measure(r);
      const double gk = gamma_norm(gm, p.norm);
      rep.direct += gk * gk * m * kLn2;
      rep.assembled += rank_factor * factor * factor * gev * gev * m * kLn2;
      piece_sum += gev * gev * m * kLn2;
    }
    rep.max_piece_ratio = std::max(rep.max_piece_ratio, piece_sum / mu.measure(s2));
  }
  return w;
}

RootReport run_root(const WeightedSpace& space, const CarlesonField& gamma, const TestFamily& fam, const TbParams& p,
                    const ConeNet& net, const DyadicCube& root, std::vector<ChainViolation>& violations, Exec exec) {
  const Grid& g = space.grid();
  RootReport rr;
  rr.root = root;
  rr.mu = space.measure(root);
  rr.direct = box_integral(gamma, space.mu(), root, p.norm);
  rr.volberg_packing = volberg_stop(space, root, p.lambda).packing;

  // Sector assignment, one sector per cube.
  std::map<std::uint64_t, std::vector<DyadicCube>> by_sector;
  g.for_each_subcube(root, [&](const DyadicCube& r) {
    const Matrix& gm = gamma.at(r);
    if (!(op_norm(gm) > 0.0)) return;
    const Vec v1 = top_singular(gm).right;
    for (const Vec& d : {v1, scaled(v1, -1.0)}) {
      const std::uint64_t k = net.nearest(d);
      if (sector_membership(gm, net.vector(k), p.eps1, 0, 0).member) {
        by_sector[k].push_back(r);
        return;
      }
    }
    ++rr.uncovered;
    violations.push_back({0, root, root, root, r, "uncovered", op_norm(gm), 0.0});
  });

  std::vector<std::uint64_t> keys;
  for (const auto& [k, cubes] : by_sector) keys.push_back(k);
  std::vector<SectorWork> work(keys.size());
  for_each_index(keys.size(), exec, [&](std::size_t i) {
    std::vector<unsigned char> assigned(g.cube_count(), 0);
    for (const DyadicCube& r : by_sector.at(keys[i])) assigned[g.id(r)] = 1;
    work[i] = run_sector(space, gamma, fam, p, root, keys[i], net.vector(keys[i]), assigned);
  });
  for (std::size_t i = 0; i < keys.size(); ++i) {
    SectorWork& w = work[i];
    if (w.report.cubes != by_sector.at(keys[i]).size())
      violations.push_back({keys[i], root, root, root, root, "sector_cube_count", static_cast<double>(w.report.cubes),
                            static_cast<double>(by_sector.at(keys[i]).size())});
    rr.pieces_direct += w.report.direct;
    rr.assembled += w.report.assembled;
    rr.partition_residual = std::max(rr.partition_residual, w.report.decomposition_residual);
    violations.insert(violations.end(), w.violations.begin(), w.violations.end());
    rr.sectors.push_back(std::move(w.report));
  }
  const double scale = std::max(rr.direct, std::numeric_limits<double>::min());
  rr.partition_residual = std::max(rr.partition_residual, std::abs(rr.pieces_direct - rr.direct) / scale);
  return rr;
}

}  // namespace

TbReport tb_run(const WeightedSpace& space, const CarlesonField& gamma, const TestFamily& fam, const TbParams& p,
                Exec exec) {
  if (gamma.cols() != space.dim()) throw std::invalid_argument("tb_run: gamma has the wrong number of columns");
  if (!(p.eps2 > 0.0 && p.eps2 < 1.0)) throw std::invalid_argument("tb_run: eps2 must lie in (0,1)");
  if (!(p.eps3 > 0.0 && p.eps3 < 1.0)) throw std::invalid_argument("tb_run: eps3 must lie in (0,1)");
  if (!(p.lambda > 1.0)) throw std::invalid_argument("tb_run: lambda must exceed 1");
  TbReport out;
  out.params = p;
  const ConeNet net = build_net(space.dim(), p.eps1, p.seed, p.net_probes);
  out.net_size = net.size();
  out.net_certificate = net.certificate;
  const CarlesonNorm cn = carleson_norm(gamma, space.mu(), p.norm);
  out.carleson_norm = cn.value;
  out.argmax = cn.argmax;
  std::vector<DyadicCube> roots{space.grid().root()};
  if (cn.argmax != space.grid().root()) roots.push_back(cn.argmax);
  for (const DyadicCube& q : roots) {
    out.roots.push_back(run_root(space, gamma, fam, p, net, q, out.violations, exec));
    out.partition_residual = std::max(out.partition_residual, out.roots.back().partition_residual);
  }
  const RootReport& at_max = out.roots.back();
  out.assembled_bound = at_max.assembled / at_max.mu;
  return out;
}

}  // namespace dwlab
