// dwlab: command line driver. Exit 0 when every checked invariant holds, 2
// when one fails (the report is still written), 1 on usage or IO errors.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "dwlab/config.hpp"
#include "dwlab/cone.hpp"
#include "dwlab/field_io.hpp"
#include "dwlab/haar.hpp"
#include "dwlab/random.hpp"
#include "dwlab/rrt.hpp"
#include "dwlab/search.hpp"
#include "dwlab/stopping.hpp"
#include "dwlab/tb.hpp"
#include "dwlab/weight_classes.hpp"

using namespace dwlab;
using json = nlohmann::ordered_json;

namespace {

constexpr int kOk = 0, kUsage = 1, kViolation = 2;

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Collects failed invariants; the run still writes its report.
struct Checks {
  std::vector<std::string> failed;
  void require(bool ok, const std::string& what) {
    if (!ok) failed.push_back(what);
  }
  int code() const {
    for (const auto& f : failed) std::cerr << "invariant violated: " << f << "\n";
    return failed.empty() ? kOk : kViolation;
  }
};

void emit(const json& j, const std::string& path) {
  const std::string text = j.dump(2) + "\n";
  std::cout << text;
  if (path.empty()) return;
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << text;
}

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (std::size_t j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(r);
  }
  return rows;
}

json class_json(const ClassReport& r, const Grid& g) {
  json j;
  j["b2_i"] = r.b2_i;
  j["b2_ii"] = r.b2_ii;
  j["b2_iii"] = r.b2_iii;
  j["b2_iv"] = r.b2_iv;
  j["ainf_i"] = r.ainf_i;
  j["ainf_ii"] = r.ainf_ii;
  j["a2"] = r.a2;
  j["thewest"] = r.thewest;
  json worst = json::object();
  for (const auto& [k, b] : r.worst) worst[k] = g.describe(b);
  j["worst_cubes"] = worst;
  return j;
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream in(s);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    std::size_t used = 0;
    out.push_back(std::stod(tok, &used));
    if (used != tok.size()) throw std::invalid_argument("bad number '" + tok + "'");
  }
  return out;
}

std::string root_text(int n) {
  std::string s = "0";
  for (int i = 0; i < n; ++i) s += ",0";
  return s;
}

bool close(double a, double b, double tol) { return std::abs(a - b) <= tol * std::max(1.0, std::abs(b)); }

// --- check-weight -----------------------------------------------------------

struct CheckWeightArgs {
  std::string field, report;
  int shifts = 0;
};

int check_weight(RunConfig cfg, const CheckWeightArgs& a) {
  const WeightedSpace space = make_space(read_field(a.field), a.field);
  const int shifts = a.shifts > 0 ? a.shifts : default_shifts(space.grid().dim());
  cfg.shifts = a.shifts;
  const ClassReport r = class_constants(space, shifts);
  const double dbl = doubling_check(space.mu(), shifts).constant;
  json j = class_json(r, space.grid());
  json worst = j["worst_cubes"];
  j.erase("worst_cubes");
  j["doubling"] = dbl;
  j["worst_cubes"] = worst;
  std::cerr << "config_hash " << config_hash(cfg) << "\n";
  emit(j, a.report);

  Checks c;
  const double s = cfg.slack;
  for (double x : {r.b2_i, r.b2_ii, r.b2_iii, r.b2_iv, r.ainf_i, r.ainf_ii, r.a2, r.thewest, dbl})
    c.require(x >= 1 - s, "class constants >= 1");
  c.require(close(r.b2_iii, r.b2_ii * r.b2_ii, 1e-10), "b2_iii = b2_ii^2");
  c.require(close(r.b2_i, r.b2_ii, 1e-10), "b2_i = b2_ii");
  c.require(r.b2_ii <= r.b2_iv * (1 + s), "b2_ii <= b2_iv");
  c.require(r.b2_iv <= std::pow(r.b2_ii, static_cast<double>(space.dim())) * (1 + s), "b2_iv <= b2_ii^N");
  return c.code();
}

// --- corona -------------------------------------------------------------------

struct CoronaArgs {
  std::string field, criterion = "volberg", root, report, v0;
  double param = 0;
};

int corona(RunConfig cfg, const CoronaArgs& a) {
  const WeightedSpace space = make_space(read_field(a.field), a.field);
  const Grid& g = space.grid();
  const DyadicCube q = g.parse_cube(a.root.empty() ? root_text(g.dim()) : a.root);
  double param = a.param;
  StopReport rep;
  Checks c;
  json j;
  j["config_hash"] = "";
  j["seed"] = cfg.seed;
  j["criterion"] = a.criterion;
  if (a.criterion == "volberg") {
    if (param == 0) param = cfg.lambda;
    if (!(param > 1)) throw std::invalid_argument("volberg needs --param > 1");
    cfg.lambda = param;
    rep = volberg_stop(space, q, param);
  } else if (a.criterion == "corona") {
    if (param == 0) param = cfg.eps3;
    if (!(param > 0)) throw std::invalid_argument("corona needs --param > 0");
    cfg.eps3 = param;
    rep = corona_stop(space, q, param);
    const double dev = corona_sawtooth_deviation(space, rep.result);
    j["sawtooth_deviation"] = dev;
    c.require(dev <= param * (1 + cfg.slack), "corona sawtooth deviation <= eps3");
  } else if (a.criterion == "kato") {
    if (param == 0) param = cfg.eps2;
    if (!(param > 0 && param < 1)) throw std::invalid_argument("kato needs --param in (0,1)");
    cfg.eps2 = param;
    Vec v0(space.dim(), 0.0);
    v0[0] = 1;
    if (!a.v0.empty()) v0 = parse_list(a.v0);
    if (v0.size() != space.dim()) throw std::invalid_argument("--v0 needs N components");
    const double len = norm(v0);
    if (!(len > 0)) throw std::invalid_argument("--v0 must be nonzero");
    for (double& x : v0) x /= len;
    // b = canonical test function of the root for v0, zero outside.
    const TestFamily fam = canonical_family(space);
    const std::vector<Vec> vals = fam.cells(q, v0);
    CellField b(g, space.dim());
    std::size_t k = 0;
    g.for_each_cell(q, [&](std::uint64_t cell) {
      auto dst = b.at(cell);
      std::copy(vals[k].begin(), vals[k].end(), dst.begin());
      ++k;
    });
    rep = kato_stop(space, q, b, v0, param);
    j["v0"] = v0;
  } else {
    throw std::invalid_argument("--criterion must be volberg, kato or corona");
  }
  j["config_hash"] = config_hash(cfg);
  j["param"] = param;
  j["root"] = g.describe(q);
  json gens = json::array();
  for (const auto& gen : rep.result.generations) {
    json level = json::array();
    for (const DyadicCube& s : gen) level.push_back(g.describe(s));
    gens.push_back(level);
  }
  j["generation_sizes"] = json::array();
  for (const auto& gen : rep.result.generations) j["generation_sizes"].push_back(gen.size());
  j["generations"] = gens;
  j["packing"] = rep.packing;
  j["first_generation"] = rep.first_generation;
  j["max_first_generation"] = rep.max_first_generation;
  j["margin"] = rep.margin;
  const double resid =
      partition_residual(rep.result, g, [&](const DyadicCube& r) { return space.measure(r); });
  const MartingaleCheck m = martingale_square_check(space, rep.result);
  j["partition_residual"] = resid;
  j["martingale_min_gap"] = m.min_gap_eigenvalue;
  emit(j, a.report);
  c.require(resid <= cfg.partition, "sawtooth partition residual");
  c.require(m.ok, "martingale matrix estimate");
  return c.code();
}

// --- cone-net -------------------------------------------------------------------

struct ConeArgs {
  std::size_t N = 2;
  double eps1 = 0.3;
  std::size_t trials = 10000;
  std::string report;
};

int cone_net(RunConfig cfg, const ConeArgs& a) {
  cfg.N = a.N;
  cfg.eps1 = a.eps1;
  const ConeNet net = build_net(a.N, a.eps1, cfg.seed);
  const CoverageResult cov = coverage_check(net, a.trials, cfg.seed);
  json j;
  j["config_hash"] = config_hash(cfg);
  j["seed"] = cfg.seed;
  j["N"] = a.N;
  j["eps1"] = a.eps1;
  j["net_size"] = net.size();
  j["resolution"] = net.resolution();
  j["threshold"] = net.threshold();
  j["certificate"] = net.certificate;
  j["certificate_probes"] = net.probes;
  j["trials"] = cov.trials;
  j["failures"] = cov.failures;
  j["min_first_step"] = cov.min_first_step;
  j["min_second_step"] = cov.min_second_step;
  j["proof_violations"] = cov.proof_violations;
  emit(j, a.report);
  Checks c;
  c.require(cov.failures == 0, "coverage failures");
  c.require(cov.proof_violations == 0, "coverage proof steps");
  return c.code();
}

// --- tb-run --------------------------------------------------------------------

struct TbArgs {
  std::string field, gamma = "martingale", report;
  double rate = 1.0;
  bool free_eps = false;
  bool eps1_set = false, eps3_set = false, lambda_set = false, eps2_set = false;
  double eps1 = 0, eps2 = 0, eps3 = 0, lambda = 0;
};

int tb_cmd(RunConfig cfg, const TbArgs& a) {
  if (a.eps2_set) {
    cfg.eps2 = a.eps2;
    // Flags left out follow the proof order from the new eps2.
    const TbParams po = proof_order_params(a.eps2);
    cfg.eps1 = po.eps1;
    cfg.eps3 = po.eps3;
    cfg.lambda = po.lambda;
  }
  if (a.eps1_set) cfg.eps1 = a.eps1;
  if (a.eps3_set) cfg.eps3 = a.eps3;
  if (a.lambda_set) cfg.lambda = a.lambda;
  validate(cfg, !a.free_eps);

  const WeightedSpace space = make_space(read_field(a.field), a.field);
  const Grid& g = space.grid();
  const std::size_t N = space.dim();
  CarlesonField gamma = zero_gamma(g, 1, N);
  if (a.gamma == "zero") {
  } else if (a.gamma == "constant") {
    gamma = constant_gamma(g, Matrix::identity(N));
  } else if (a.gamma == "martingale") {
    gamma = martingale_gamma(space);
  } else if (a.gamma == "random") {
    gamma = random_gamma_field(g, N, N, cfg.seed);
  } else if (a.gamma == "damped") {
    gamma = damped_gamma(g, Vec(N, 1.0 / std::sqrt(static_cast<double>(N))), a.rate);
  } else {
    throw std::invalid_argument("--gamma must be zero, constant, martingale, random or damped");
  }
  const int shifts = cfg.shifts > 0 ? cfg.shifts : default_shifts(g.dim());
  const TestFamily fam = canonical_family(space);
  const Hypotheses h = verify_hypotheses(space, gamma, fam, 64, cfg.seed, shifts);
  TbParams p;
  p.eps1 = cfg.eps1;
  p.eps2 = cfg.eps2;
  p.eps3 = cfg.eps3;
  p.lambda = cfg.lambda;
  p.seed = cfg.seed;
  const TbReport r = tb_run(space, gamma, fam, p);

  json j;
  j["config_hash"] = config_hash(cfg);
  j["seed"] = cfg.seed;
  j["gamma"] = a.gamma;
  j["eps"] = {{"eps1", p.eps1}, {"eps2", p.eps2}, {"eps3", p.eps3}, {"lambda", p.lambda}};
  j["carleson_norm"] = r.carleson_norm;
  j["argmax"] = g.describe(r.argmax);
  j["assembled_bound"] = r.assembled_bound;
  json viol = json::array();
  for (const ChainViolation& v : r.violations)
    viol.push_back({{"sector", v.sector},
                    {"root", g.describe(v.root)},
                    {"s1", g.describe(v.s1)},
                    {"s2", g.describe(v.s2)},
                    {"r", g.describe(v.r)},
                    {"what", v.what},
                    {"value", v.value},
                    {"bound", v.bound}});
  j["violations"] = viol;
  json roots = json::array();
  for (const RootReport& rr : r.roots) {
    json sectors = json::array();
    for (const SectorReport& s : rr.sectors)
      sectors.push_back({{"net_index", s.net_index},
                         {"v0", s.v0},
                         {"cubes", s.cubes},
                         {"corona_packing", s.corona_packing},
                         {"kato_max_first_generation", s.kato_max_first_generation},
                         {"pieces", s.pieces},
                         {"direct", s.direct},
                         {"assembled", s.assembled},
                         {"max_piece_ratio", s.max_piece_ratio},
                         {"decomposition_residual", s.decomposition_residual}});
    roots.push_back({{"root", g.describe(rr.root)},
                     {"mu", rr.mu},
                     {"direct", rr.direct},
                     {"assembled", rr.assembled},
                     {"partition_residual", rr.partition_residual},
                     {"volberg_packing", rr.volberg_packing},
                     {"uncovered", rr.uncovered},
                     {"sectors", sectors}});
  }
  j["per_sector"] = roots;
  j["partition_residual"] = r.partition_residual;
  j["net_size"] = r.net_size;
  j["net_certificate"] = r.net_certificate;
  j["constants"] = {{"C1", h.c1}, {"C2", h.c2}, {"C3", h.c3}, {"C4", h.c4}};
  emit(j, a.report);

  Checks c;
  c.require(r.violations.empty(), "proof chain");
  c.require(r.assembled_bound >= r.carleson_norm * (1 - cfg.slack), "assembled bound >= Carleson norm");
  c.require(r.partition_residual <= cfg.partition, "sawtooth partition residual");
  for (const RootReport& rr : r.roots) c.require(rr.uncovered == 0, "every active cube has a sector");
  return c.code();
}

// --- rrt-search ----------------------------------------------------------------

struct RrtArgs {
  std::size_t m = 2;
  double delta = 0.1;
  std::uint64_t budget = 10000;
  std::string curve, csv, report;
};

int rrt_cmd(RunConfig cfg, const RrtArgs& a) {
  cfg.N = a.m;
  const RrtInstance r = worst_case_search(a.m, a.delta, a.budget, cfg.seed);
  json j;
  j["config_hash"] = config_hash(cfg);
  j["seed"] = cfg.seed;
  j["m"] = a.m;
  j["delta"] = a.delta;
  j["budget"] = a.budget;
  j["delta_measured"] = r.delta_measured;
  j["epsilon_measured"] = r.epsilon_measured;
  j["A"] = matrix_json(r.a);
  j["B"] = matrix_json(r.b);
  Checks c;
  c.require(r.delta_measured <= a.delta + cfg.slack, "reported pair satisfies the hypothesis");
  if (!a.curve.empty()) {
    const auto grid = parse_list(a.curve);
    const auto pts = delta_of_eps_curve(a.m, grid, a.budget, cfg.seed);
    json curve = json::array();
    std::string csv = "eps,delta,worst_eps\n";
    for (const CurvePoint& p : pts) {
      curve.push_back({{"eps", p.eps}, {"delta", p.delta}, {"worst_eps", p.worst_eps}});
      csv += format_double(p.eps) + "," + format_double(p.delta) + "," + format_double(p.worst_eps) + "\n";
      c.require(p.worst_eps <= p.eps + cfg.slack, "curve worst case within eps");
    }
    j["curve"] = curve;
    if (!a.csv.empty()) {
      std::ofstream out(a.csv);
      if (!out) throw IoError("cannot write " + a.csv);
      out << csv;
    }
  }
  emit(j, a.report);
  return c.code();
}

// --- inclusion-search ----------------------------------------------------------

struct InclusionArgs {
  int n = 1, L = 4, L_min = 1;
  std::size_t N = 2;
  double cap = 4;
  std::uint64_t budget = 1000;
  std::string out = "inclusion_out", family = "all";
  int chains = 4;
};

int inclusion_cmd(RunConfig cfg, const InclusionArgs& a) {
  cfg.n = a.n;
  cfg.N = a.N;
  cfg.L = a.L;
  cfg.out_dir = a.out;
  if (a.L_min < 0 || a.L_min > a.L) throw std::invalid_argument("--L-min must lie in 0..L");
  std::vector<SearchFamily> fams;
  if (a.family == "all")
    fams = {SearchFamily::log_cell, SearchFamily::log_multiscale, SearchFamily::rotated_diagonal};
  else
    fams = {parse_search_family(a.family)};
  std::error_code ec;
  std::filesystem::create_directories(a.out, ec);
  if (ec) throw IoError("cannot create " + a.out + ": " + ec.message());

  json j;
  j["config_hash"] = config_hash(cfg);
  j["seed"] = cfg.seed;
  j["status"] = "empirical";
  j["note"] = "largest ainf_ii found on finite grids under the b2_iv cap; not a counterexample";
  j["b2_cap"] = a.cap;
  j["budget"] = a.budget;
  json runs = json::array();
  std::string csv = "family,L,ainf_ii,b2_iv,evaluations\n";
  Checks c;
  const int shifts = cfg.shifts > 0 ? cfg.shifts : default_shifts(a.n);
  for (SearchFamily f : fams) {
    for (int L = a.L_min; L <= a.L; ++L) {
      InclusionOptions opt;
      opt.family = f;
      opt.chains = a.chains;
      opt.shifts = shifts;
      const InclusionResult r = inclusion_search(a.n, a.N, L, a.cap, a.budget, mix_seed(cfg.seed, L), opt);
      const std::string name = search_family_name(f) + "_L" + std::to_string(L) + ".wf";
      const std::string path = (std::filesystem::path(a.out) / name).string();
      write_field(path, r.best);
      // Re-validate from the written file.
      const ClassReport again = class_constants(make_space(read_field(path), path), shifts);
      c.require(close(again.ainf_ii, r.ainf_ii, cfg.revalidate) && close(again.b2_iv, r.b2_iv, cfg.revalidate),
                "re-validated constants of " + name);
      c.require(r.b2_iv <= a.cap * (1 + cfg.slack), "b2_iv within cap for " + name);
      json trail = json::array();
      for (const TrailPoint& t : r.trail) trail.push_back({t.step, t.ainf_ii, t.b2_iv});
      runs.push_back({{"family", search_family_name(f)},
                      {"L", L},
                      {"field", name},
                      {"ainf_ii", r.ainf_ii},
                      {"b2_iv", r.b2_iv},
                      {"evaluations", r.evaluations},
                      {"constants", class_json(r.report, Grid(a.n, L))},
                      {"trail", trail}});
      csv += search_family_name(f) + "," + std::to_string(L) + "," + format_double(r.ainf_ii) + "," +
             format_double(r.b2_iv) + "," + std::to_string(r.evaluations) + "\n";
    }
  }
  j["runs"] = runs;
  const std::string csv_path = (std::filesystem::path(a.out) / "trend.csv").string();
  std::ofstream out(csv_path);
  if (!out) throw IoError("cannot write " + csv_path);
  out << csv;
  emit(j, (std::filesystem::path(a.out) / "report.json").string());
  return c.code();
}

// --- paraproduct-demo ----------------------------------------------------------

struct ParaArgs {
  int depth = 8;
  std::string report;
};

int paraproduct_cmd(RunConfig cfg, const ParaArgs& a) {
  if (a.depth < 0 || a.depth > 24) throw std::invalid_argument("--depth must lie in 0..24");
  Rng rng(cfg.seed);
  const std::size_t cells = std::size_t{1} << a.depth;
  const Vec b = random_gaussian(rng, cells), f = random_gaussian(rng, cells);
  const Paraproduct p = paraproduct_plus(b, f);
  const double ident = product_identity_residual(b, f);
  const double parseval = haar_parseval_residual(b);
  const double energy_res = std::abs(p.norm_sq - p.energy) / std::max(1.0, p.norm_sq);
  json j;
  j["config_hash"] = config_hash(cfg);
  j["seed"] = cfg.seed;
  j["depth"] = a.depth;
  j["product_identity_residual"] = ident;
  j["norm_sq"] = p.norm_sq;
  j["energy"] = p.energy;
  j["energy_residual"] = energy_res;
  j["bmo_sq"] = p.bmo_sq;
  j["f_norm_sq"] = p.f_norm_sq;
  j["ratio"] = p.ratio;
  j["parseval_residual"] = parseval;
  emit(j, a.report);
  Checks c;
  c.require(ident <= 1e-10, "Haar product identity");
  c.require(energy_res <= 1e-10, "paraproduct norm equals Haar energy");
  c.require(parseval <= 1e-10, "Parseval");
  return c.code();
}

// --- generate ------------------------------------------------------------------

struct GenArgs {
  std::string kind = "log-gaussian", out;
  int n = 1, L = 4;
  std::size_t N = 2;
  GeneratorParams p;
};

int generate_cmd(RunConfig cfg, GenArgs a) {
  cfg.n = a.n;
  cfg.N = a.N;
  cfg.L = a.L;
  a.p.kind = parse_generator_kind(a.kind);
  a.p.seed = cfg.seed;
  const GeneratedField f = generate(a.p, a.n, a.N, a.L);
  if (a.out.empty()) throw std::invalid_argument("--out is required");
  write_field(a.out, f.field);
  json j;
  j["config_hash"] = config_hash(cfg);
  j["seed"] = cfg.seed;
  j["kind"] = generator_name(a.p.kind);
  j["amplitude"] = a.p.amplitude;
  j["correlation"] = a.p.correlation;
  j["mu_amplitude"] = a.p.mu_amplitude;
  j["attempts"] = f.attempts;
  j["doubling"] = f.doubling;
  j["field"] = a.out;
  emit(j, "");
  return kOk;
}

// --config is read before CLI11 so its values can serve as flag defaults.
RunConfig preload_config(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string s = argv[i];
    if (s == "--config" && i + 1 < argc) return read_config(argv[i + 1]);
    if (s.rfind("--config=", 0) == 0) return read_config(s.substr(9));
  }
  return RunConfig{};
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig cfg;
  try {
    cfg = preload_config(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return kUsage;
  }

  CLI::App app{"dwlab: dyadic matrix weight laboratory"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path;
  int jobs_flag = 0;
  app.add_option("--config", config_path, "INI config ([grid] [epsilons] [seeds] [tolerances] [output])");
  app.add_option("--jobs", jobs_flag, "worker threads (DWLAB_JOBS overrides)")->check(CLI::PositiveNumber);

  auto seed_opt = [&](CLI::App* sub) { sub->add_option("--seed", cfg.seed, "random seed")->capture_default_str(); };

  CheckWeightArgs cw;
  auto* s_cw = app.add_subcommand("check-weight", "class constants of a field file");
  s_cw->add_option("--field", cw.field, "field file")->required();
  cw.shifts = cfg.shifts;
  s_cw->add_option("--shifts", cw.shifts, "translated grids (0: 3^n)")->capture_default_str();
  s_cw->add_option("--report", cw.report, "JSON report path");

  CoronaArgs co;
  auto* s_co = app.add_subcommand("corona", "one stopping-time run");
  s_co->add_option("--field", co.field, "field file")->required();
  s_co->add_option("--criterion", co.criterion, "volberg | kato | corona")->capture_default_str();
  s_co->add_option("--param", co.param, "lambda, eps2 or eps3 (default from config)");
  s_co->add_option("--root", co.root, "level,c0[,c1[,c2]] (default unit cube)");
  s_co->add_option("--v0", co.v0, "kato direction, comma separated (default e1)");
  s_co->add_option("--report", co.report, "JSON report path");
  seed_opt(s_co);

  ConeArgs cn;
  cn.N = cfg.N;
  auto* s_cn = app.add_subcommand("cone-net", "build the sector net and test coverage");
  s_cn->add_option("--N", cn.N, "dimension")->capture_default_str();
  s_cn->add_option("--eps1", cn.eps1, "sector aperture")->capture_default_str();
  s_cn->add_option("--trials", cn.trials, "random matrices")->capture_default_str();
  s_cn->add_option("--report", cn.report, "JSON report path");
  seed_opt(s_cn);

  TbArgs tb;
  auto* s_tb = app.add_subcommand("tb-run", "sector / corona / Kato run for a Carleson field");
  s_tb->add_option("--field", tb.field, "field file")->required();
  s_tb->add_option("--gamma", tb.gamma, "zero | constant | martingale | random | damped")->capture_default_str();
  s_tb->add_option("--rate", tb.rate, "decay rate for --gamma damped")->capture_default_str();
  auto* o_e1 = s_tb->add_option("--eps1", tb.eps1, "sector aperture");
  auto* o_e2 = s_tb->add_option("--eps2", tb.eps2, "Kato threshold");
  auto* o_e3 = s_tb->add_option("--eps3", tb.eps3, "corona threshold");
  auto* o_la = s_tb->add_option("--lambda", tb.lambda, "Volberg threshold");
  s_tb->add_flag("--free-eps", tb.free_eps, "skip the proof-order checks on eps");
  s_tb->add_option("--report", tb.report, "JSON report path");
  seed_opt(s_tb);

  RrtArgs rr;
  rr.m = cfg.N;
  auto* s_rr = app.add_subcommand("rrt-search", "worst case of the reverse triangle converse");
  s_rr->add_option("--m", rr.m, "matrix size")->capture_default_str();
  s_rr->add_option("--delta", rr.delta, "hypothesis margin")->capture_default_str();
  s_rr->add_option("--budget", rr.budget, "objective evaluations")->capture_default_str();
  s_rr->add_option("--curve", rr.curve, "eps grid, comma separated");
  s_rr->add_option("--csv", rr.csv, "CSV path for the curve");
  s_rr->add_option("--report", rr.report, "JSON report path");
  seed_opt(s_rr);

  InclusionArgs in;
  in.n = cfg.n;
  in.N = cfg.N;
  in.L = cfg.L;
  if (!cfg.out_dir.empty()) in.out = cfg.out_dir;
  auto* s_in = app.add_subcommand("inclusion-search", "search for large A-infinity under a B2 cap (empirical)");
  s_in->add_option("--n", in.n, "space dimension")->capture_default_str();
  s_in->add_option("--N", in.N, "matrix size")->capture_default_str();
  s_in->add_option("--L", in.L, "finest level")->capture_default_str();
  s_in->add_option("--L-min", in.L_min, "smallest level of the trend")->capture_default_str();
  s_in->add_option("--b2-cap", in.cap, "cap on b2_iv")->capture_default_str();
  s_in->add_option("--budget", in.budget, "proposals per chain")->capture_default_str();
  s_in->add_option("--chains", in.chains, "annealing chains")->capture_default_str();
  s_in->add_option("--family", in.family, "all | log-cell | log-multiscale | rotated-diagonal")->capture_default_str();
  s_in->add_option("--out", in.out, "output directory")->capture_default_str();
  seed_opt(s_in);

  ParaArgs pa;
  auto* s_pa = app.add_subcommand("paraproduct-demo", "Haar identity and paraproduct energy on random data");
  s_pa->add_option("--depth", pa.depth, "levels")->capture_default_str();
  s_pa->add_option("--report", pa.report, "JSON report path");
  seed_opt(s_pa);

  GenArgs ge;
  ge.n = cfg.n;
  ge.N = cfg.N;
  ge.L = cfg.L;
  auto* s_ge = app.add_subcommand("generate", "write a random weight field");
  s_ge->add_option("--kind", ge.kind, "constant | diagonal | rotated-diagonal | log-gaussian | two-scale")
      ->capture_default_str();
  s_ge->add_option("--n", ge.n, "space dimension")->capture_default_str();
  s_ge->add_option("--N", ge.N, "matrix size")->capture_default_str();
  s_ge->add_option("--L", ge.L, "finest level")->capture_default_str();
  s_ge->add_option("--amplitude", ge.p.amplitude, "log-eigenvalue amplitude")->capture_default_str();
  s_ge->add_option("--correlation", ge.p.correlation, "per-level decay exponent")->capture_default_str();
  s_ge->add_option("--mu-amplitude", ge.p.mu_amplitude, "log-density amplitude")->capture_default_str();
  s_ge->add_option("--doubling-cap", ge.p.doubling_cap, "largest accepted doubling constant")->capture_default_str();
  s_ge->add_option("--out", ge.out, "field file")->required();
  seed_opt(s_ge);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    std::cerr << app.help();
    return kUsage;
  }
  if (jobs_flag > 0) set_jobs(jobs_flag);
  tb.eps1_set = o_e1->count() > 0;
  tb.eps2_set = o_e2->count() > 0;
  tb.eps3_set = o_e3->count() > 0;
  tb.lambda_set = o_la->count() > 0;

  try {
    if (*s_cw) return check_weight(cfg, cw);
    if (*s_co) return corona(cfg, co);
    if (*s_cn) return cone_net(cfg, cn);
    if (*s_tb) return tb_cmd(cfg, tb);
    if (*s_rr) return rrt_cmd(cfg, rr);
    if (*s_in) return inclusion_cmd(cfg, in);
    if (*s_pa) return paraproduct_cmd(cfg, pa);
    if (*s_ge) return generate_cmd(cfg, ge);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::logic_error& e) {
    // Internal consistency checks of the library.
    std::cerr << "invariant violated: " << e.what() << "\n";
    return kViolation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
