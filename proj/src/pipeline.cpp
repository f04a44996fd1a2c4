#include "fslab/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <random>
#include <sstream>

#include "fslab/errors.hpp"
#include "fslab/io.hpp"

namespace fslab {

namespace {

using nlohmann::json;
using ojson = nlohmann::ordered_json;

template <class T> void read(const json &j, const char *key, T &dst) {
  if (j.contains(key)) dst = j.at(key).get<T>();
}

double sup_abs(const Vec &f, const Vec &eta, double cap, int p = 0) {
  double s = 0;
  for (size_t j = 0; j < f.size() && eta[j] <= cap; ++j)
    s = std::max(s, std::abs(f[j]) * std::pow(1.0 + eta[j] * eta[j], 0.5 * p));
  return s;
}

const WeightSet &report_weights() {
  static const WeightSet w = WeightSet::ladder(0.5);
  return w;
}

} // namespace

double RunConfig::m_value() const { return m ? *m : m_from_beta(*beta); }
double RunConfig::beta_value() const { return beta ? *beta : beta_from_m(*m); }

void RunConfig::validate() const {
  if (m.has_value() == beta.has_value())
    throw Error(ErrorKind::InvalidParams, "give exactly one of m and beta");
  if (beta && !(*beta >= 0.0 && *beta < 2.0))
    throw Error(ErrorKind::InvalidBeta, "beta must lie in [0, 2)");
  if (m && !(*m >= 0.0)) throw Error(ErrorKind::InvalidParams, "m must be >= 0");
  if (!(epsilon > 0.0)) throw Error(ErrorKind::InvalidParams, "epsilon must be positive");
  if (stations < 2 && station_list.empty())
    throw Error(ErrorKind::InvalidParams, "need at least two stations");
  if (data.family != "gaussian" && data.family != "zero" && data.family != "csv")
    throw Error(ErrorKind::InvalidParams, "unknown initial-data family " + data.family);
  if (data.family == "csv" && data.csv.empty())
    throw Error(ErrorKind::InvalidParams, "csv initial data needs a path");
  if (stack_k_max < 1 || stack_k_max > 4 || project_k_max < 0 || project_k_max > 4)
    throw Error(ErrorKind::InvalidParams, "orders out of range");
  if (!sweep.is_array()) throw Error(ErrorKind::InvalidParams, "sweep must be a list");
  march_config().validate();
}

MarchConfig RunConfig::march_config() const {
  MarchConfig c;
  c.m = m_value();
  c.epsilon = epsilon;
  c.x_start = x_start;
  c.x_end = x_end;
  c.dx_init = dx_init;
  c.dx_max = dx_max;
  c.grid = grid;
  c.nonlinear_tol = nonlinear_tol;
  c.max_picard_iters = max_picard_iters;
  c.scheme = scheme;
  c.station_schedule =
      station_list.empty() ? log_schedule(x_start, x_end, stations) : station_list;
  return c;
}

RunConfig RunConfig::from_json(const json &j) {
  RunConfig c;
  try {
    if (!j.is_object()) throw Error(ErrorKind::InvalidParams, "config must be an object");
    if (j.contains("m")) c.m = j.at("m").get<double>();
    if (j.contains("beta")) c.beta = j.at("beta").get<double>();
    read(j, "epsilon", c.epsilon);
    read(j, "seed", c.seed);
    if (j.contains("grid")) {
      const auto &g = j.at("grid");
      read(g, "first_spacing", c.grid.first_spacing);
      read(g, "ratio", c.grid.ratio);
      read(g, "eta_cap", c.grid.eta_cap);
    }
    if (j.contains("march")) {
      const auto &g = j.at("march");
      read(g, "x_start", c.x_start);
      read(g, "x_end", c.x_end);
      read(g, "dx_init", c.dx_init);
      read(g, "dx_max", c.dx_max);
      read(g, "nonlinear_tol", c.nonlinear_tol);
      read(g, "max_picard_iters", c.max_picard_iters);
      read(g, "stations", c.stations);
      read(g, "station_list", c.station_list);
      if (g.contains("scheme")) {
        auto s = g.at("scheme").get<std::string>();
        if (s == "backward_euler")
          c.scheme = Scheme::BackwardEuler;
        else if (s == "bdf2")
          c.scheme = Scheme::BDF2;
        else
          throw Error(ErrorKind::InvalidParams, "unknown scheme " + s);
      }
    }
    if (j.contains("initial_data")) {
      const auto &g = j.at("initial_data");
      read(g, "family", c.data.family);
      read(g, "amplitude", c.data.amplitude);
      read(g, "width", c.data.width);
      read(g, "csv", c.data.csv);
    }
    if (j.contains("functionals")) {
      const auto &g = j.at("functionals");
      read(g, "project_k_max", c.project_k_max);
      read(g, "stack_k_max", c.stack_k_max);
      read(g, "sigma_ratios", c.sigma_ratios);
    }
    if (j.contains("diagnostics")) {
      const auto &g = j.at("diagnostics");
      read(g, "energy", c.diag.energy);
      read(g, "corpus", c.diag.corpus);
      read(g, "ode", c.diag.ode);
      read(g, "corpus_size", c.diag.corpus_size);
      read(g, "calibration_runs", c.diag.calibration_runs);
      read(g, "x_transient", c.diag.x_transient);
      read(g, "lambdas", c.diag.lambdas);
      read(g, "max_violation", c.diag.max_violation);
      read(g, "calibration", c.diag.calibration);
    }
    if (j.contains("rates")) {
      const auto &g = j.at("rates");
      read(g, "x_lo", c.rates.x_lo);
      read(g, "x_hi", c.rates.x_hi);
      read(g, "tolerance", c.rates.tolerance);
    }
    if (j.contains("output")) {
      const auto &g = j.at("output");
      read(g, "dir", c.out_dir);
      read(g, "svg", c.svg);
    }
    if (j.contains("sweep")) c.sweep = j.at("sweep");
  } catch (const json::exception &e) {
    throw Error(ErrorKind::InvalidParams, std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

RunConfig RunConfig::load(const std::string &path) {
  const std::string text = read_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception &e) {
    throw Error(ErrorKind::InvalidParams, std::string("config is not valid JSON: ") + e.what());
  }
  return from_json(j);
}

json RunConfig::to_json() const {
  json j;
  if (m) j["m"] = *m;
  if (beta) j["beta"] = *beta;
  j["epsilon"] = epsilon;
  j["seed"] = seed;
  j["grid"] = {{"first_spacing", grid.first_spacing}, {"ratio", grid.ratio},
               {"eta_cap", grid.eta_cap}};
  j["march"] = {{"x_start", x_start},
                {"x_end", x_end},
                {"dx_init", dx_init},
                {"dx_max", dx_max},
                {"nonlinear_tol", nonlinear_tol},
                {"max_picard_iters", max_picard_iters},
                {"stations", stations},
                {"station_list", station_list},
                {"scheme", scheme == Scheme::BDF2 ? "bdf2" : "backward_euler"}};
  j["initial_data"] = {{"family", data.family},
                       {"amplitude", data.amplitude},
                       {"width", data.width},
                       {"csv", data.csv}};
  j["functionals"] = {{"project_k_max", project_k_max},
                      {"stack_k_max", stack_k_max},
                      {"sigma_ratios", sigma_ratios}};
  j["diagnostics"] = {{"energy", diag.energy},
                      {"corpus", diag.corpus},
                      {"ode", diag.ode},
                      {"corpus_size", diag.corpus_size},
                      {"calibration_runs", diag.calibration_runs},
                      {"x_transient", diag.x_transient},
                      {"lambdas", diag.lambdas},
                      {"max_violation", diag.max_violation},
                      {"calibration", diag.calibration}};
  j["rates"] = {{"x_lo", rates.x_lo}, {"x_hi", rates.x_hi}, {"tolerance", rates.tolerance}};
  j["output"] = {{"dir", out_dir}, {"svg", svg}};
  j["sweep"] = sweep;
  return j;
}

std::string resolve_out_dir(const RunConfig &cfg, const std::string &flag) {
  if (!flag.empty()) return flag;
  if (const char *e = std::getenv("FSLAB_OUT_DIR"); e && *e) return e;
  return cfg.out_dir;
}

Vec initial_data(const RunConfig &cfg, const Vec &y) {
  if (cfg.data.family == "zero") return Vec(y.size(), 0.0);
  if (cfg.data.family == "gaussian") return gaussian_data(y, cfg.data.amplitude, cfg.data.width);
  // csv: y,u pairs, linear interpolation, zero beyond the last sample
  std::istringstream in(read_file(cfg.data.csv));
  std::string line;
  Vec ys, us;
  while (std::getline(in, line)) {
    if (line.empty() || !(std::isdigit(static_cast<unsigned char>(line[0])) || line[0] == '-' ||
                          line[0] == '.'))
      continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    double a, b;
    if (ls >> a >> b) {
      ys.push_back(a);
      us.push_back(b);
    }
  }
  if (ys.size() < 2) throw Error(ErrorKind::InvalidParams, "initial-data csv has < 2 rows");
  Vec u(y.size(), 0.0);
  for (size_t j = 0; j < y.size(); ++j) {
    if (y[j] > ys.back()) continue;
    auto it = std::upper_bound(ys.begin(), ys.end(), y[j]);
    size_t i = std::clamp<size_t>(it - ys.begin(), 1, ys.size() - 1);
    const double t = (y[j] - ys[i - 1]) / (ys[i] - ys[i - 1]);
    u[j] = (1 - t) * us[i - 1] + t * us[i];
  }
  u[0] = 0.0;
  return u;
}

RunResult run_march(const RunConfig &cfg, const BackgroundModel &model, bool keep_stacks,
                    std::vector<GoodUnknownStack> *stacks) {
  RunResult r;
  const MarchConfig mc = cfg.march_config();
  r.y = march_grid(mc);
  const auto bg0 = build_background(model, cfg.x_start, r.y);
  const Vec u_in = initial_data(cfg, r.y);
  if (cfg.project_k_max > 0) {
    ProjectionOptions po;
    po.cauchy.epsilon = cfg.epsilon;
    r.projection = project_compatible(u_in, bg0, cfg.project_k_max, po);
  } else {
    r.projection.u = u_in;
  }
  PerturbationState s = init_perturbation(mc, r.y, r.projection.u);
  r.snapshots = march_to(s, cfg.x_end, mc, coefficient_provider(model, r.y));
  r.stats = s.stats;
  const int K = cfg.stack_k_max;
  const double cap = cfg.grid.eta_cap;
  for (const auto &sn : r.snapshots) {
    if (available_order(sn) < K + 1) continue;
    const auto bg = build_background(model, sn.x, r.y);
    auto st = build_stack(sn, bg, K, cfg.epsilon);
    r.reports.push_back(evaluate_all(st, bg, report_weights(), cap));
    StationSummary ss;
    ss.x = sn.x;
    ss.sup_u = sup_abs(sn.u, bg.eta, cap);
    ss.sup_uy = sup_abs(DiffOp(r.y, 1, 5).apply(sn.u), bg.eta, cap);
    ss.sup_u_eta3 = sup_abs(sn.u, bg.eta, cap, 3);
    ss.sup_ux = sup_abs(st.uk[1], bg.eta, cap);
    ss.linf = linf_quantities(st, bg, cap);
    r.summaries.push_back(std::move(ss));
    if (keep_stacks && stacks) stacks->push_back(std::move(st));
  }
  return r;
}

Manifest::Manifest(std::string dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

void Manifest::write(const std::string &name, const std::string &bytes) {
  files_.emplace_back(name, write_file((std::filesystem::path(dir_) / name).string(), bytes));
  sizes_.push_back(bytes.size());
}

void Manifest::finish(const ojson &extra) {
  ojson j;
  j["files"] = ojson::array();
  for (size_t i = 0; i < files_.size(); ++i)
    j["files"].push_back({{"name", files_[i].first}, {"sha256", files_[i].second},
                          {"bytes", sizes_[i]}});
  for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
  write_file((std::filesystem::path(dir_) / "manifest.json").string(), j.dump(2) + "\n");
}

std::string snapshots_csv(const RunResult &r) {
  std::string s = "x,y,u,v\n";
  for (const auto &sn : r.snapshots)
    for (size_t j = 0; j < sn.y.size(); ++j)
      s += num(sn.x) + "," + num(sn.y[j]) + "," + num(sn.u[j]) + "," + num(sn.v[j]) + "\n";
  return s;
}

std::string summaries_csv(const RunResult &r) {
  CsvTable t;
  t.header = {"x", "sup_u", "sup_uy", "sup_u_eta3", "sup_ux"};
  if (r.summaries.empty()) return t.str();
  for (const auto &[n, v] : r.summaries.front().linf) t.header.push_back(n);
  for (const auto &ss : r.summaries) {
    std::vector<double> row = {ss.x, ss.sup_u, ss.sup_uy, ss.sup_u_eta3, ss.sup_ux};
    for (const auto &[n, v] : ss.linf) row.push_back(v);
    t.rows.push_back(std::move(row));
  }
  return t.str();
}

RatesOutcome compute_rates(const RunConfig &cfg, const RunResult &r) {
  const double m = cfg.m_value();
  const double hi = cfg.rates.x_hi > 0 ? cfg.rates.x_hi : cfg.x_end;
  const double lo = cfg.rates.x_lo > 0 ? cfg.rates.x_lo : hi / 10.0;
  Vec x, su, suy, su3, sux, e;
  for (size_t i = 0; i < r.summaries.size(); ++i) {
    const auto &ss = r.summaries[i];
    x.push_back(ss.x);
    su.push_back(ss.sup_u);
    suy.push_back(ss.sup_uy);
    su3.push_back(ss.sup_u_eta3);
    sux.push_back(ss.sup_ux);
    e.push_back(r.reports[i].E[0][0]);
  }
  const double tol = cfg.rates.tolerance;
  RatesOutcome o;
  o.fits.push_back(fit_decay(x, su, "sup_u", theorem1_rate(m, 0, 0), lo, hi, tol));
  o.fits.push_back(fit_decay(x, suy, "sup_uy", theorem1_rate(m, 0, 1), lo, hi, tol));
  o.fits.push_back(fit_decay(x, su3, "sup_u_eta3", theorem1_rate(m, 0, 0), lo, hi, tol));
  o.fits.push_back(fit_decay(x, sux, "sup_ux", theorem1_rate(m, 1, 0), lo, hi, tol));
  o.fits.push_back(fit_decay(x, su, "sup_u_enhanced", theorem2_rate(m, 0, 0), lo, hi, tol));
  // E_00 ~ sup|u|^2 times the layer thickness x^{(1-m)/2}
  o.fits.push_back(fit_decay(x, e, "E_0_0", 2 * theorem1_rate(m, 0, 0) + 0.5 * (1 - m) - 0.01,
                             lo, hi, tol));
  double prev = -1;
  for (const auto &rep : r.reports) {
    if (rep.x < cfg.diag.x_transient) continue;
    const double v = std::pow(rep.x, 3 * m) * rep.quasi_E;
    if (prev > 0) {
      const double inc = (v - prev) / prev;
      o.weighted_energy_worst = std::max(o.weighted_energy_worst, inc);
      if (inc > 1e-9) o.weighted_energy_monotone = false;
    }
    prev = v;
  }
  o.ok = o.weighted_energy_monotone;
  for (const auto &f : o.fits) o.ok = o.ok && f.pass;
  return o;
}

std::string rates_json(const RatesOutcome &o) {
  ojson j;
  j["ok"] = o.ok;
  j["weighted_energy_monotone"] = o.weighted_energy_monotone;
  j["weighted_energy_worst_increase"] = o.weighted_energy_worst;
  j["fits"] = ojson::array();
  for (const auto &f : o.fits)
    j["fits"].push_back({{"quantity", f.quantity},
                         {"x_lo", f.x_lo},
                         {"x_hi", f.x_hi},
                         {"slope", f.slope},
                         {"intercept", f.intercept},
                         {"r2", f.r2},
                         {"theorem_rate", f.theorem_rate},
                         {"stations", f.stations},
                         {"pass", f.pass}});
  return j.dump(2) + "\n";
}

std::string rates_svg(const RunResult &r, double theorem_rate) {
  const double W = 640, H = 400, L = 60, R = 20, T = 20, B = 40;
  Vec lx, ly;
  for (const auto &ss : r.summaries)
    if (ss.sup_u > 0) {
      lx.push_back(std::log10(ss.x));
      ly.push_back(std::log10(ss.sup_u));
    }
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
     << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (lx.size() >= 2) {
    const double x0 = lx.front(), x1 = lx.back();
    double y0 = *std::min_element(ly.begin(), ly.end()), y1 = *std::max_element(ly.begin(), ly.end());
    const double ref0 = ly.back() + theorem_rate * (x0 - x1);
    y1 = std::max(y1, ref0);
    if (y1 - y0 < 1e-12) y1 = y0 + 1;
    auto px = [&](double v) { return L + (v - x0) / (x1 - x0) * (W - L - R); };
    auto py = [&](double v) { return H - B - (v - y0) / (y1 - y0) * (H - T - B); };
    os << "<polyline fill=\"none\" stroke=\"black\" stroke-width=\"1.5\" points=\"";
    for (size_t i = 0; i < lx.size(); ++i) os << num(px(lx[i])) << ',' << num(py(ly[i])) << ' ';
    os << "\"/>\n<line stroke=\"red\" stroke-dasharray=\"6,4\" x1=\"" << num(px(x0)) << "\" y1=\""
       << num(py(ref0)) << "\" x2=\"" << num(px(x1)) << "\" y2=\"" << num(py(ly.back()))
       << "\"/>\n";
    os << "<text x=\"" << L << "\" y=\"" << H - 10 << "\" font-size=\"12\">log10 x: " << num(x0)
       << " .. " << num(x1) << "</text>\n";
    os << "<text x=\"" << L << "\" y=\"" << T + 4 << "\" font-size=\"12\">log10 sup|u|; dashed: x^"
       << num(theorem_rate) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::vector<InequalityCheck> corpus_checks(const RunConfig &cfg, const BackgroundModel &model) {
  std::vector<InequalityCheck> out;
  const double m = cfg.m_value(), cap = cfg.grid.eta_cap;
  const auto corpus = make_corpus(cfg.seed, cfg.diag.corpus_size);
  const size_t nf = corpus.size();
  for (double x : {1.0, 10.0}) {
    const auto bg = build_background(model, x, default_station_grid(m, x, cap));
    Vec q(bg.y.size());
    for (size_t j = 0; j < q.size(); ++j) q[j] = std::pow(x, -m) * bg.u_bar[j];
    std::vector<Vec> F;
    for (const auto &f : corpus) F.push_back(sample_eta(f, bg));
    for (size_t i = 0; i < nf; ++i) {
      for (double l : cfg.diag.lambdas) out.push_back(check_hardy(F[i], bg, l, cap));
      out.push_back(check_nash(F[i], bg, q, {}, cap));
      const auto st = linear_stack(bg, {F[i], F[(i + 1) % nf], F[(i + 2) % nf]});
      const auto rep = evaluate_all(st, bg, report_weights(), cap);
      for (double l : cfg.diag.lambdas)
        for (int n : {0, 3}) {
          for (int k = 0; k < 2; ++k) {
            out.push_back(check_interpolation(st, bg, rep, Interp::DyTrade, k, n, l, cap));
            out.push_back(check_interpolation(st, bg, rep, Interp::DxTrade, k, n, l, cap));
            out.push_back(check_interpolation(st, bg, rep, Interp::OrderDown, k + 1, n, l, cap));
          }
        }
    }
  }
  return out;
}

std::vector<InequalityCheck> station_checks(const RunConfig &cfg, const RunResult &r,
                                            const std::vector<GoodUnknownStack> &stacks,
                                            const BackgroundModel &model) {
  std::vector<InequalityCheck> out;
  const double cap = cfg.grid.eta_cap;
  for (size_t i = 0; i < stacks.size(); ++i) {
    const auto &st = stacks[i];
    const auto &rep = r.reports[i];
    const auto bg = build_background(model, rep.x, r.y);
    const int K = st.k_max;
    for (double l : cfg.diag.lambdas) {
      for (int n : {0, 3}) {
        for (int k = 0; k < K; ++k) {
          out.push_back(check_interpolation(st, bg, rep, Interp::DyTrade, k, n, l, cap));
          out.push_back(check_interpolation(st, bg, rep, Interp::DxTrade, k, n, l, cap));
          out.push_back(check_interpolation(st, bg, rep, Interp::OrderDown, k + 1, n, l, cap));
        }
      }
      out.push_back(check_interpolation(st, bg, rep, Interp::QuasiDown, K, 0, l, cap));
    }
    for (int k = 0; k <= K; ++k)
      for (auto &c : check_original_norms(st, bg, rep, k, 0, cfg.diag.lambdas.front(), cap))
        out.push_back(std::move(c));
    for (auto &c : check_quasi_equivalence(rep)) out.push_back(std::move(c));
  }
  return out;
}

Calibration calibrate(const RunConfig &cfg, const BackgroundModel &model) {
  Calibration cal;
  if (cfg.diag.corpus)
    for (const auto &c : corpus_checks(cfg, model)) cal.absorb(c);
  std::mt19937_64 g(cfg.seed + 1);
  for (int i = 0; i < cfg.diag.calibration_runs; ++i) {
    RunConfig c = cfg;
    c.data.family = "gaussian";
    c.data.amplitude = 1.0;
    c.data.width = 0.5 + 1.5 * (static_cast<double>(g() >> 11) * 0x1.0p-53);
    std::vector<GoodUnknownStack> stacks;
    const auto run = run_march(c, model, true, &stacks);
    for (const auto &ch : station_checks(c, run, stacks, model)) cal.absorb(ch);
    if (cfg.diag.energy)
      for (const auto &s : all_energy_series(run.reports))
        cal.absorb_series(s, cfg.diag.x_transient);
  }
  cal.finalize();
  return cal;
}

CheckOutcome run_checks(const RunConfig &cfg, const BackgroundModel &model, const RunResult &r,
                        const std::vector<GoodUnknownStack> &stacks, const Calibration &cal) {
  CheckOutcome o;
  if (cfg.diag.corpus) o.checks = corpus_checks(cfg, model);
  for (auto &c : station_checks(cfg, r, stacks, model)) o.checks.push_back(std::move(c));
  std::map<std::string, CheckGroup> groups;
  for (auto &c : o.checks) {
    cal.judge(c);
    auto &gr = groups[c.name];
    gr.name = c.name;
    gr.lower_bound = c.lower_bound;
    gr.constant = cal.constants.at(c.name);
    ++gr.count;
    if (!c.pass) ++gr.violations;
    gr.worst_ratio = gr.count == 1 ? c.ratio
                     : c.lower_bound ? std::min(gr.worst_ratio, c.ratio)
                                     : std::max(gr.worst_ratio, c.ratio);
  }
  o.ok = true;
  for (auto &[name, gr] : groups) {
    const double frac = static_cast<double>(gr.violations) / gr.count;
    // lower bounds (Nash) must hold everywhere
    if (gr.lower_bound ? gr.violations > 0 : frac > cfg.diag.max_violation) o.ok = false;
    o.groups.push_back(gr);
  }
  if (cfg.diag.energy)
    for (const auto &s : all_energy_series(r.reports)) {
      if (!cal.has(s.name)) throw Error(ErrorKind::InvalidParams, "no constant for " + s.name);
      auto res = energy_residual(s, cal.constants.at(s.name), cfg.diag.x_transient);
      if (res.violation_fraction > cfg.diag.max_violation) o.ok = false;
      o.energy.push_back(std::move(res));
    }
  if (cfg.diag.ode) {
    const double m = cfg.m_value();
    for (double x : {1.5, 2.0, 5.0, 10.0, 100.0, 1000.0})
      o.ode_residual = std::max(o.ode_residual, gamma_up_residual(1.0, m, 1.0, x));
    const auto t1 = ode_compare(1.0, m, 1.0, 1000.0), t2 = ode_compare(2.0, m, 1.0, 1000.0);
    o.ode_x_at_sup = t1.x_at_sup;
    bool ordered = true;
    for (size_t i = 0; i < t1.x.size() && i < t2.x.size(); ++i)
      ordered = ordered && t2.gamma[i] <= t1.gamma[i];
    o.ode_ok = o.ode_residual <= 1e-10 && t1.x_at_sup < 10.0 && t1.tail_non_increasing && ordered;
    if (!o.ode_ok) o.ok = false;
  }
  return o;
}

std::string check_summary_json(const CheckOutcome &o) {
  ojson j;
  j["ok"] = o.ok;
  j["groups"] = ojson::array();
  for (const auto &g : o.groups)
    j["groups"].push_back({{"name", g.name},
                           {"count", g.count},
                           {"violations", g.violations},
                           {"constant", std::isfinite(g.constant) ? ojson(g.constant) : ojson()},
                           {"worst_ratio", std::isfinite(g.worst_ratio) ? ojson(g.worst_ratio)
                                                                        : ojson()},
                           {"lower_bound", g.lower_bound}});
  j["energy"] = ojson::array();
  for (const auto &e : o.energy)
    j["energy"].push_back({{"name", e.name},
                           {"constant", e.constant},
                           {"stations", e.stations},
                           {"violations", e.violations},
                           {"violation_fraction", e.violation_fraction}});
  j["ode"] = {{"closed_form_residual", o.ode_residual},
              {"x_at_sup", o.ode_x_at_sup},
              {"ok", o.ode_ok}};
  return j.dump(2) + "\n";
}

std::string energy_csv(const CheckOutcome &o) {
  std::string s = "name,x,residual\n";
  for (const auto &e : o.energy)
    for (size_t i = 0; i < e.x.size(); ++i)
      s += e.name + "," + num(e.x[i]) + "," + num(e.residual[i]) + "\n";
  return s;
}

} // namespace fslab
