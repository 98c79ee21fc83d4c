#include "dwlab/stopping.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>
#include <stdexcept>

namespace dwlab {

std::size_t StoppingResult::index_of(const DyadicCube& s) const {
  const auto it = owner.find(s);
  if (it == owner.end() || all[it->second] != s) throw std::invalid_argument("index_of: not a stopping cube");
  return it->second;
}

StoppingResult run_stopping(const Grid& g, const DyadicCube& q, const StoppingCriterion& crit, const Region& region) {
  g.validate(q);
  StoppingResult res;
  res.root = q;
  res.all = {q};
  res.sawtooth = {{}};
  res.children_of = {{}};
  res.parent = {0};
  res.generations = {{q}};
  std::size_t gen_start = 0;
  while (true) {
    const std::size_t gen_end = res.all.size();
    std::vector<DyadicCube> next;
    for (std::size_t i = gen_start; i < gen_end; ++i) {
      const DyadicCube s = res.all[i];
      res.sawtooth[i].push_back(s);
      res.owner[s] = i;
      std::vector<DyadicCube> stack = g.children(s);
      std::reverse(stack.begin(), stack.end());
      while (!stack.empty()) {
        const DyadicCube r = stack.back();
        stack.pop_back();
        if (region && !region(r)) continue;
        if (crit.fires(s, r)) {
          const std::size_t idx = res.all.size();
          res.all.push_back(r);
          res.sawtooth.emplace_back();
          res.children_of.emplace_back();
          res.parent.push_back(i);
          res.children_of[i].push_back(idx);
          next.push_back(r);
        } else {
          res.sawtooth[i].push_back(r);
          res.owner[r] = i;
          std::vector<DyadicCube> ch = g.children(r);
          for (auto it = ch.rbegin(); it != ch.rend(); ++it) stack.push_back(*it);
        }
      }
    }
    if (next.empty()) break;
    res.generations.push_back(std::move(next));
    gen_start = gen_end;
  }
  return res;
}

double packing_constant(const StoppingResult& res, const MeasuredGrid& mu) {
  double s = 0.0;
  for (const DyadicCube& r : res.all) s += mu.measure(r);
  return s / mu.measure(res.root);
}

double first_generation_ratio(const StoppingResult& res, const MeasuredGrid& mu) {
  double s = 0.0;
  if (res.generations.size() > 1)
    for (const DyadicCube& r : res.generations[1]) s += mu.measure(r);
  return s / mu.measure(res.root);
}

double max_first_generation_ratio(const StoppingResult& res, const MeasuredGrid& mu) {
  double best = 0.0;
  for (std::size_t i = 0; i < res.all.size(); ++i) {
    double s = 0.0;
    for (const std::size_t c : res.children_of[i]) s += mu.measure(res.all[c]);
    best = std::max(best, s / mu.measure(res.all[i]));
  }
  return best;
}

namespace {

double pieces_residual(const Grid& g, const DyadicCube& root, const std::vector<const std::vector<DyadicCube>*>& pieces,
                       const std::function<double(const DyadicCube&)>& f, const Region& region) {
  std::vector<unsigned char> seen(g.cube_count(), 0);
  double piece_sum = 0.0;
  for (const auto* p : pieces)
    for (const DyadicCube& r : *p) {
      if (!g.contains(root, r)) return std::numeric_limits<double>::infinity();
      unsigned char& s = seen[g.id(r)];
      if (s) return std::numeric_limits<double>::infinity();
      s = 1;
      piece_sum += f(r);
    }
  double box_sum = 0.0;
  bool complete = true;
  std::vector<DyadicCube> stack{root};
  while (!stack.empty()) {
    const DyadicCube r = stack.back();
    stack.pop_back();
    if (region && r != root && !region(r)) continue;
    if (!seen[g.id(r)]) complete = false;
    box_sum += f(r);
    for (const DyadicCube& c : g.children(r)) stack.push_back(c);
  }
  if (!complete) return std::numeric_limits<double>::infinity();
  return std::abs(piece_sum - box_sum) / std::max(1.0, std::abs(box_sum));
}

}  // namespace

double partition_residual(const StoppingResult& res, const Grid& g, const std::function<double(const DyadicCube&)>& f,
                          const Region& region) {
  std::vector<const std::vector<DyadicCube>*> pieces;
  for (const auto& s : res.sawtooth) pieces.push_back(&s);
  return pieces_residual(g, res.root, pieces, f, region);
}

IteratedDecomposition iterated_sawtooth(const MeasuredGrid& mu, const DyadicCube& q,
                                        const std::vector<StoppingCriterion>& crits) {
  if (crits.empty()) throw std::invalid_argument("iterated_sawtooth: need at least one criterion");
  const Grid& g = mu.grid();
  IteratedDecomposition out;
  out.root = q;
  std::vector<SawtoothPiece> pieces{{{}, {}}};
  {
    // Level 0 piece: the whole box, topped by q.
    g.for_each_subcube(q, [&](const DyadicCube& r) { pieces[0].cubes.push_back(r); });
    pieces[0].chain = {q};
  }
  std::vector<unsigned char> member(g.cube_count(), 0);
  for (std::size_t k = 0; k < crits.size(); ++k) {
    std::vector<SawtoothPiece> next;
    for (const SawtoothPiece& p : pieces) {
      for (const DyadicCube& r : p.cubes) member[g.id(r)] = 1;
      const Region region = [&](const DyadicCube& r) { return member[g.id(r)] != 0; };
      StoppingResult run = run_stopping(g, p.chain.back(), crits[k], k == 0 ? Region{} : region);
      for (const DyadicCube& r : p.cubes) member[g.id(r)] = 0;
      for (std::size_t i = 0; i < run.all.size(); ++i) {
        SawtoothPiece np;
        np.chain = k == 0 ? std::vector<DyadicCube>{} : p.chain;
        np.chain.push_back(run.all[i]);
        np.cubes = run.sawtooth[i];
        next.push_back(std::move(np));
      }
      out.runs.push_back(std::move(run));
    }
    pieces = std::move(next);
  }
  out.pieces = std::move(pieces);
  std::vector<const std::vector<DyadicCube>*> ptrs;
  for (const auto& p : out.pieces) ptrs.push_back(&p.cubes);
  out.residual = pieces_residual(g, q, ptrs, [&](const DyadicCube& r) { return mu.measure(r); }, nullptr);
  if (!(out.residual <= 1e-9)) {
    std::ostringstream os;
    os << "iterated sawtooth pieces do not partition the box (residual " << out.residual << ")";
    throw std::logic_error(os.str());
  }
  return out;
}

StoppingCriterion volberg_criterion(const WeightedSpace& space, double lambda) {
  if (!(lambda > 1.0)) throw std::invalid_argument("volberg: lambda must exceed 1");
  auto value = [&space](const DyadicCube& s, const DyadicCube& r) {
    return op_norm(space.average(s).matrix() * space.average_inverse(r).matrix());
  };
  return {"volberg", [value, lambda](const DyadicCube& s, const DyadicCube& r) { return value(s, r) >= lambda; },
          [value, lambda](const DyadicCube& s, const DyadicCube& r) { return std::abs(value(s, r) - lambda); }};
}

namespace {

double corona_value(const WeightedSpace& space, const DyadicCube& s, const DyadicCube& r) {
  Matrix d = space.average_inverse(s).matrix() * space.average(r).matrix();
  for (std::size_t i = 0; i < d.rows(); ++i) d(i, i) -= 1.0;
  return op_norm(d);
}

}  // namespace

StoppingCriterion corona_criterion(const WeightedSpace& space, double eps3) {
  if (!(eps3 > 0.0)) throw std::invalid_argument("corona: eps3 must be positive");
  return {"corona",
          [&space, eps3](const DyadicCube& s, const DyadicCube& r) { return corona_value(space, s, r) > eps3; },
          [&space, eps3](const DyadicCube& s, const DyadicCube& r) {
            return std::abs(corona_value(space, s, r) - eps3);
          }};
}

StoppingCriterion kato_criterion(const WeightedSpace& space, Vec v0, double eps2, ExpectationFn expectation) {
  if (!(eps2 > 0.0 && eps2 < 1.0)) throw std::invalid_argument("kato: eps2 must lie in (0,1)");
  auto values = [&space, v0, expectation](const DyadicCube& s, const DyadicCube& r) {
    const Vec e = expectation(s, r);
    const Vec t = space.average_inverse(s).matrix() * (space.average(r).matrix() * e);
    return std::pair<double, double>{norm(e), dot(v0, t)};
  };
  return {"kato",
          [values, eps2](const DyadicCube& s, const DyadicCube& r) {
            const auto [len, proj] = values(s, r);
            return len > 1.0 / eps2 || proj < eps2;
          },
          [values, eps2](const DyadicCube& s, const DyadicCube& r) {
            const auto [len, proj] = values(s, r);
            return std::min(std::abs(len - 1.0 / eps2), std::abs(proj - eps2));
          }};
}

StoppingCriterion random_criterion(std::uint64_t seed, double p) {
  auto draw = [seed](const DyadicCube& s, const DyadicCube& r) {
    std::uint64_t h = mix_seed(seed, static_cast<std::uint64_t>(s.level));
    h = mix_seed(h, s.index);
    h = mix_seed(h, static_cast<std::uint64_t>(r.level));
    h = mix_seed(h, r.index);
    return static_cast<double>(h >> 11) * 0x1.0p-53;
  };
  return {"random", [draw, p](const DyadicCube& s, const DyadicCube& r) { return draw(s, r) < p; },
          [draw, p](const DyadicCube& s, const DyadicCube& r) { return std::abs(draw(s, r) - p); }};
}

namespace {

StopReport make_report(const WeightedSpace& space, StoppingResult res, const StoppingCriterion& crit) {
  StopReport rep;
  rep.packing = packing_constant(res, space.mu());
  rep.first_generation = first_generation_ratio(res, space.mu());
  rep.max_first_generation = max_first_generation_ratio(res, space.mu());
  double m = std::numeric_limits<double>::infinity();
  if (crit.margin)
    for (std::size_t i = 0; i < res.all.size(); ++i) {
      const DyadicCube& s = res.all[i];
      for (std::size_t k = 1; k < res.sawtooth[i].size(); ++k) m = std::min(m, crit.margin(s, res.sawtooth[i][k]));
      for (const std::size_t c : res.children_of[i]) m = std::min(m, crit.margin(s, res.all[c]));
    }
  rep.margin = std::isfinite(m) ? m : 0.0;
  rep.result = std::move(res);
  return rep;
}

}  // namespace

StopReport volberg_stop(const WeightedSpace& space, const DyadicCube& q, double lambda) {
  const StoppingCriterion c = volberg_criterion(space, lambda);
  return make_report(space, run_stopping(space.grid(), q, c), c);
}

StopReport corona_stop(const WeightedSpace& space, const DyadicCube& q, double eps3) {
  const StoppingCriterion c = corona_criterion(space, eps3);
  StopReport rep = make_report(space, run_stopping(space.grid(), q, c), c);
  const double dev = corona_sawtooth_deviation(space, rep.result);
  if (dev > eps3 * (1.0 + 1e-12)) throw std::logic_error("corona sawtooth contains a cube beyond eps3");
  return rep;
}

StopReport kato_stop(const WeightedSpace& space, const DyadicCube& q, const CellField& b, const Vec& v0, double eps2) {
  if (b.components() != space.dim()) throw std::invalid_argument("kato_stop: b has wrong number of components");
  auto cache = std::make_shared<std::map<DyadicCube, std::shared_ptr<SubtreeAverages>>>();
  ExpectationFn e = [&space, &b, cache](const DyadicCube& s, const DyadicCube& r) {
    auto it = cache->find(s);
    if (it == cache->end()) {
      std::vector<Vec> vals;
      space.grid().for_each_cell(s, [&](std::uint64_t c) {
        const auto v = b.at(c);
        vals.emplace_back(v.begin(), v.end());
      });
      it = cache->emplace(s, std::make_shared<SubtreeAverages>(space, s, vals)).first;
    }
    return it->second->at(r);
  };
  const StoppingCriterion c = kato_criterion(space, v0, eps2, e);
  return make_report(space, run_stopping(space.grid(), q, c), c);
}

double corona_sawtooth_deviation(const WeightedSpace& space, const StoppingResult& res) {
  double best = 0.0;
  for (std::size_t i = 0; i < res.all.size(); ++i)
    for (const DyadicCube& r : res.sawtooth[i]) best = std::max(best, corona_value(space, res.all[i], r));
  return best;
}

MartingaleCheck martingale_square_check(const WeightedSpace& space, const StoppingResult& res) {
  const std::size_t n = space.dim();
  const DyadicCube& q = res.root;
  const double mq = space.measure(q);
  MartingaleCheck out;
  out.lhs = Matrix(n, n);
  for (std::size_t i = 1; i < res.all.size(); ++i) {
    const Matrix d = space.average(res.all[i]).matrix() - space.average(res.all[res.parent[i]]).matrix();
    out.lhs += (d * d) * space.measure(res.all[i]);
  }
  Matrix w2(n, n);
  space.grid().for_each_cell(q, [&](std::uint64_t c) {
    const Matrix& w = space.weight().at(c).matrix();
    w2 += (w * w) * space.mu().cell_mass(c);
  });
  const Matrix& wq = space.average(q).matrix();
  out.rhs = w2 - (wq * wq) * mq;
  out.lhs = symmetrize(out.lhs);
  out.rhs = symmetrize(out.rhs);
  const double tol = 1e-9 * op_norm(w2);
  out.min_gap_eigenvalue = min_eigenvalue(out.rhs - out.lhs);
  out.ok = out.min_gap_eigenvalue >= -tol;
  return out;
}

}  // namespace dwlab
