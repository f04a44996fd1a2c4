#include "fslab/diagnostics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "fslab/errors.hpp"
#include "fslab/io.hpp"
#include "json.hpp"

namespace fslab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Vec d1(const Vec &y, const Vec &f) { return DiffOp(y, 1, 5).apply(f); }
Vec d2(const Vec &y, const Vec &f) { return DiffOp(y, 2, 7).apply(f); }

double bracket_pow(double eta, int n) { return std::pow(1.0 + eta * eta, n); }

// int f^2 w <eta>^{2n} over eta <= cap
double wnorm2(const BackgroundFields &bg, const Vec &f, int n, size_t nc, const Vec *w = nullptr) {
  Vec g(nc);
  for (size_t j = 0; j < nc; ++j)
    g[j] = f[j] * f[j] * bracket_pow(bg.eta[j], n) * (w ? (*w)[j] : 1.0);
  return trapz_n(bg.y, g, nc);
}

std::string tag(const std::string &base, int k, int n, double lambda) {
  std::string s = base + "_k" + std::to_string(k) + "_n" + std::to_string(n);
  if (lambda > 0) s += "_l" + num(lambda);
  return s;
}

void need(bool ok, const char *what) {
  if (!ok) throw Error(ErrorKind::MissingOrder, what);
}

InequalityCheck make_check(std::string name, double lhs, double rhs, double slack, double lambda,
                           const BackgroundFields &bg) {
  InequalityCheck c;
  c.name = std::move(name);
  c.lhs = lhs;
  c.rhs = rhs;
  c.slack = slack;
  c.ratio = safe_ratio(std::max(lhs - slack, 0.0), rhs);
  c.lambda = lambda;
  c.m = bg.m;
  c.x = bg.x;
  return c;
}

InequalityCheck make_check(std::string name, double lhs, double rhs, double slack, double lambda,
                           const FunctionalReport &r) {
  InequalityCheck c;
  c.name = std::move(name);
  c.lhs = lhs;
  c.rhs = rhs;
  c.slack = slack;
  c.ratio = safe_ratio(std::max(lhs - slack, 0.0), rhs);
  c.lambda = lambda;
  c.m = r.m;
  c.x = r.x;
  return c;
}

double uniform01(std::mt19937_64 &g) { return static_cast<double>(g() >> 11) * 0x1.0p-53; }

} // namespace

double safe_ratio(double lhs, double rhs) {
  if (rhs > 0.0) return lhs / rhs;
  if (lhs == 0.0) return 0.0;
  return lhs > 0.0 ? kInf : -kInf;
}

InequalityCheck check_hardy(const Vec &f, const BackgroundFields &bg, double lambda,
                            double eta_cap) {
  if (!(lambda > 0.0 && lambda < 1.0)) throw Error(ErrorKind::InvalidParams, "lambda in (0,1)");
  const size_t nc = eta_cut(bg, eta_cap);
  const double x = bg.x, m = bg.m;
  const Vec fy = d1(bg.y, f);
  Vec ub2(nc);
  for (size_t j = 0; j < nc; ++j) ub2[j] = bg.u_bar[j] * bg.u_bar[j];
  const double lhs = std::pow(x, 2 * m - 1) * wnorm2(bg, f, 0, nc);
  const double rhs = wnorm2(bg, f, 0, nc, &ub2) / (lambda * lambda * x) +
                     lambda * wnorm2(bg, fy, 0, nc, &bg.u_bar);
  auto c = make_check("hardy_l" + num(lambda), lhs, rhs, 0.0, lambda, bg);
  return c;
}

const char *interp_name(Interp w) {
  switch (w) {
  case Interp::DyTrade: return "dy_trade";
  case Interp::DxTrade: return "dx_trade";
  case Interp::OrderDown: return "order_down";
  case Interp::QuasiDown: return "quasi_down";
  }
  return "?";
}

InequalityCheck check_interpolation(const GoodUnknownStack &st, const BackgroundFields &bg,
                                    const FunctionalReport &r, Interp which, int k, int n,
                                    double lambda, double eta_cap) {
  if (n < 0 || n > kTopWeight) throw Error(ErrorKind::InvalidParams, "weight index out of range");
  const size_t nc = eta_cut(bg, eta_cap);
  const double x = bg.x, m = bg.m;
  const int K = st.k_max;
  const Vec &y = st.y;
  switch (which) {
  case Interp::DyTrade: {
    need(k >= 0 && k < K, "d_y trade needs order k+1");
    const double lhs = std::pow(x, 2 * k + m - 0.02) * wnorm2(bg, d1(y, st.U[k]), n, nc);
    return make_check(tag(interp_name(which), k, n, lambda), lhs, r.D[k][n], lambda * r.DZ[k][0],
                      lambda, bg);
  }
  case Interp::DxTrade: {
    need(k >= 0 && k < K, "d_x trade needs order k+1");
    const auto sh = shift_ratio(bg);
    Vec ux(y.size());
    for (size_t j = 0; j < ux.size(); ++j)
      ux[j] = st.U[k + 1][j] - sh.r[j] * st.U[k][j] - sh.r_y[j] * st.Q[k][j];
    const double lhs = std::pow(x, 2 * k + 1 + 2 * m - 0.02) * wnorm2(bg, ux, n, nc);
    const double sl = lambda * (r.D[k + 1][0] + r.D[k][0] + r.CK[k][0]);
    return make_check(tag(interp_name(which), k, n, lambda), lhs, r.DY[k][n], sl, lambda, bg);
  }
  case Interp::OrderDown: {
    need(k >= 1 && k <= K, "order lowering needs 1 <= k <= k_max");
    const double lhs = std::pow(x, 2 * k - 1 + 2 * m - 0.02) * wnorm2(bg, st.U[k], n, nc);
    const double rhs = r.DY[k - 1][n] + r.CK[k - 1][0] + r.D[k - 1][0];
    return make_check(tag(interp_name(which), k, n, lambda), lhs, rhs, lambda * r.D[k][0],
                      lambda, bg);
  }
  case Interp::QuasiDown: {
    need(K >= 1, "quasilinear lowering needs k_max >= 1");
    const double lhs = std::pow(x, 2 * K - 1 + 2 * m - 0.02) * wnorm2(bg, st.calU[K], 0, nc);
    const double sl = lambda * r.D[K][0] + std::pow(st.epsilon, 0.25) * r.I_le[K];
    return make_check(tag(interp_name(which), K, 0, lambda), lhs, r.I_le_half[K - 1], sl, lambda,
                      bg);
  }
  }
  throw Error(ErrorKind::InvalidParams, "unknown interpolation");
}

std::vector<InequalityCheck> check_original_norms(const GoodUnknownStack &st,
                                                  const BackgroundFields &bg,
                                                  const FunctionalReport &r, int k, int n,
                                                  double lambda, double eta_cap) {
  need(k >= 0 && k <= st.k_max && st.has_u(k), "order not in stack");
  const size_t nc = eta_cut(bg, eta_cap);
  const double x = bg.x, m = bg.m;
  const Vec &y = st.y;
  const Vec &u = st.uk[k];
  std::vector<InequalityCheck> out;
  out.push_back(make_check(tag("u_dissipation", k, n, 0),
                           std::pow(x, -m + 2 * k - 0.01) * wnorm2(bg, d1(y, u), n, nc),
                           r.D[k][n] + r.CK[k][n], 0.0, 0.0, bg));
  out.push_back(make_check(tag("u_ck", k, n, 0),
                           std::pow(x, 2 * k - 1 - 0.01) * wnorm2(bg, u, n, nc), r.CK[k][n], 0.0,
                           0.0, bg));
  if (k < st.k_max) {
    if (st.has_u(k + 1))
      out.push_back(make_check(tag("ux_dissipation", k, n, lambda),
                               std::pow(x, 2 * k + 1 - 0.01) * wnorm2(bg, st.uk[k + 1], n, nc),
                               r.DY[k][n] + r.I_le[k], lambda * r.D[k + 1][0], lambda, bg));
    out.push_back(make_check(tag("uyy_dissipation", k, n, 0),
                             std::pow(x, 2 * k + 1 - 2 * m - 0.01) * wnorm2(bg, d2(y, u), n, nc),
                             r.DZ[k][n] + r.I_le[k], 0.0, 0.0, bg));
  }
  return out;
}

std::vector<InequalityCheck> check_quasi_equivalence(const FunctionalReport &r) {
  const int K = r.k_max;
  const double rhs = std::pow(r.epsilon, 0.25) * r.I_le[K];
  return {make_check("quasi_D", std::abs(r.D[K][0] - r.Dbar), rhs, 0.0, 0.0, r),
          make_check("quasi_CK", std::abs(r.CK[K][0] - r.CKbar), rhs, 0.0, 0.0, r),
          make_check("quasi_B", std::abs(r.B[K] - r.Bbar), rhs, 0.0, 0.0, r)};
}

InequalityCheck check_nash(const Vec &U, const BackgroundFields &bg, const Vec &q,
                           const NashBounds &qb, double eta_cap) {
  const size_t nc = eta_cut(bg, eta_cap);
  const double x = bg.x, m = bg.m;
  for (size_t j = 1; j < nc; ++j) {
    const double s = q[j] / (std::pow(x, -m) * bg.u_bar[j]);
    if (!(s >= qb.c0 && s <= qb.C0))
      throw Error(ErrorKind::BadWeight, "q / (x^{-m} u_bar) leaves [c0, C0]");
  }
  const Vec Uy = d1(bg.y, U);
  Vec ub2(nc), wa(nc);
  for (size_t j = 0; j < nc; ++j) {
    ub2[j] = bg.u_bar[j] * bg.u_bar[j];
    wa[j] = ub2[j] * bg.y[j] * q[j] * std::pow(x, m);
  }
  const double B2 = wnorm2(bg, Uy, 0, nc, &bg.u_bar);
  const double g2 = wnorm2(bg, U, 0, nc, &ub2);
  const double A2 = wnorm2(bg, U, 0, nc, &wa);
  double rhs = 0.0;
  if (A2 > 0.0) {
    const double g = std::sqrt(g2), A = std::sqrt(A2);
    rhs = std::min(std::pow(x, -0.25 + 0.75 * m) * std::pow(g, 5) / std::pow(A, 3),
                   std::pow(x, m) * std::pow(g, 6) / std::pow(A, 4));
  }
  InequalityCheck c;
  c.name = "nash";
  c.lhs = B2;
  c.rhs = rhs;
  c.ratio = safe_ratio(B2, rhs);
  c.m = m;
  c.x = x;
  c.lower_bound = true;
  return c;
}

double CorpusFunction::operator()(double eta) const {
  switch (family) {
  case Gaussian: return std::exp(-(eta / a) * (eta / a));
  case PolyExp: return std::pow(eta, b) * std::exp(-eta / a);
  case Bump: {
    const double t = (eta - c) / a;
    return std::exp(-t * t);
  }
  }
  return 0.0;
}

std::string CorpusFunction::label() const {
  switch (family) {
  case Gaussian: return "gaussian(w=" + num(a) + ")";
  case PolyExp: return "polyexp(p=" + num(b) + ",s=" + num(a) + ")";
  case Bump: return "bump(c=" + num(c) + ",w=" + num(a) + ")";
  }
  return "?";
}

std::vector<CorpusFunction> make_corpus(std::uint64_t seed, int n) {
  std::mt19937_64 g(seed);
  std::vector<CorpusFunction> out;
  for (int i = 0; i < n; ++i) {
    CorpusFunction f;
    const double r1 = uniform01(g), r2 = uniform01(g);
    switch (i % 3) {
    case 0:
      f.family = CorpusFunction::Gaussian;
      f.a = 0.3 + 2.7 * r1;
      break;
    case 1:
      f.family = CorpusFunction::PolyExp;
      f.a = 0.3 + 0.9 * r1;
      f.b = std::floor(5.0 * r2);
      break;
    default:
      f.family = CorpusFunction::Bump;
      f.a = 0.3 + 1.2 * r1;
      f.c = 0.5 + 3.5 * r2;
    }
    out.push_back(f);
  }
  return out;
}

Vec sample_eta(const CorpusFunction &f, const BackgroundFields &bg) {
  Vec out(bg.eta.size());
  for (size_t j = 0; j < out.size(); ++j) out[j] = f(bg.eta[j]);
  return out;
}

GoodUnknownStack linear_stack(const BackgroundFields &bg, const std::vector<Vec> &U) {
  GoodUnknownStack st;
  st.k_max = static_cast<int>(U.size()) - 1;
  st.x = bg.x;
  st.y = bg.y;
  for (const Vec &Uk : U) {
    st.U.push_back(Uk);
    st.calU.push_back(Uk);
    st.Q.push_back(cumtrapz(bg.y, Uk));
    st.calQ.push_back(st.Q.back());
    st.uk.push_back(rayleigh(bg, Uk));
    st.psik.push_back(cumtrapz(bg.y, st.uk.back()));
  }
  st.mu = bg.u_bar;
  st.nu = bg.v_bar;
  st.mu_y = bg.du_bar_dy[1];
  return st;
}

const char *level_name(Level l) {
  switch (l) {
  case Level::Integer: return "energy";
  case Level::Y: return "energy_Y";
  case Level::Z: return "energy_Z";
  case Level::Quasi: return "energy_quasi";
  case Level::IntegerHat: return "energy_hat";
  case Level::YHat: return "energy_Y_hat";
  case Level::ZHat: return "energy_Z_hat";
  }
  return "?";
}

EnergySeries energy_series(const std::vector<FunctionalReport> &reps, Level level, int k, int n,
                           double delta) {
  if (reps.size() < 3)
    throw Error(ErrorKind::InsufficientStations, "energy residuals need three stations");
  int K = std::numeric_limits<int>::max(), smax = K;
  for (const auto &r : reps) {
    K = std::min(K, r.k_max);
    smax = std::min(smax, r.s_max);
  }
  const bool half = level == Level::Y || level == Level::Z || level == Level::YHat ||
                    level == Level::ZHat;
  if (level == Level::Quasi) {
    need(K >= 1, "quasilinear level needs k_max >= 1");
  } else if (half) {
    need(k >= 0 && k < K && k <= smax, "half level not available");
    if (n < 0 || n >= kTopWeight) throw Error(ErrorKind::InvalidParams, "half level needs n < 10");
  } else {
    need(k >= 0 && k <= K && k <= smax, "level not available");
    if (n < 0 || n > kTopWeight) throw Error(ErrorKind::InvalidParams, "weight index out of range");
  }

  // (energy, dissipative terms, majorant) at one station
  auto terms = [&](const FunctionalReport &r) -> std::array<double, 3> {
    const bool hat = level == Level::IntegerHat || level == Level::YHat || level == Level::ZHat;
    const Table &E = hat ? r.Ehat : r.E, &CK = hat ? r.CKhat : r.CK;
    const Table &CKP = hat ? r.CKPhat : r.CKP, &D = hat ? r.Dhat : r.D;
    switch (level) {
    case Level::Integer:
    case Level::IntegerHat: {
      double maj = (n > 0 ? CK[k][n - 1] : 0.0) + (k > 0 ? CK[k - 1][n] : 0.0);
      maj += std::abs((hat ? r.Shat : r.S)[k][n]);
      return {E[k][n], CK[k][n] + CKP[k][n] + r.B[k] + D[k][n], maj};
    }
    case Level::Y:
    case Level::YHat: {
      const Table &DZ = hat ? r.DZhat : r.DZ;
      double maj = D[k][n + 1] + delta * (D[k + 1][0] + CK[k + 1][0] + DZ[k][0]);
      maj += std::abs((hat ? r.SYhat : r.SY)[k][n]);
      return {(hat ? r.EYhat : r.EY)[k][n], (hat ? r.DYhat : r.DY)[k][n], maj};
    }
    case Level::Z:
    case Level::ZHat: {
      const Table &DY = hat ? r.DYhat : r.DY;
      double maj = D[k][n + 1] + CK[k][n] + r.B[k] + delta * DY[k][0];
      maj += std::abs((hat ? r.SZhat : r.SZ)[k][n]);
      return {(hat ? r.EZhat : r.EZ)[k][n], r.BZ[k] + (hat ? r.DZhat : r.DZ)[k][n], maj};
    }
    case Level::Quasi: {
      const int Kr = r.k_max;
      double maj = r.I_le_half[Kr - 1] + delta * r.D[Kr][0] +
                   std::pow(r.epsilon, 0.25) * r.I_le[Kr] + std::abs(r.Hbar);
      return {r.Ebar, r.CKbar + r.Bbar + r.Dbar, maj};
    }
    }
    return {0, 0, 0};
  };

  EnergySeries s;
  s.name = level == Level::Quasi ? std::string(level_name(level))
                                 : tag(level_name(level), k, n, 0.0);
  std::vector<std::array<double, 3>> t;
  for (const auto &r : reps) t.push_back(terms(r));
  for (size_t i = 1; i + 1 < reps.size(); ++i) {
    const Vec nodes = {reps[i - 1].x, reps[i].x, reps[i + 1].x};
    const auto w = fd_weights(reps[i].x, nodes, 1)[1];
    const double dE = w[0] * t[i - 1][0] + w[1] * t[i][0] + w[2] * t[i + 1][0];
    const double lhs = 0.5 * dE + t[i][1];
    s.x.push_back(reps[i].x);
    s.lhs.push_back(lhs);
    s.majorant.push_back(t[i][2]);
    s.ratio.push_back(safe_ratio(lhs, t[i][2]));
  }
  return s;
}

EnergyResidual energy_residual(const EnergySeries &s, double constant, double x_min) {
  EnergyResidual out;
  out.name = s.name;
  out.constant = constant;
  for (size_t i = 0; i < s.x.size(); ++i) {
    if (s.x[i] < x_min) continue;
    const double res = s.lhs[i] - constant * s.majorant[i];
    out.x.push_back(s.x[i]);
    out.residual.push_back(res);
    ++out.stations;
    if (res > 1e-12 * (std::abs(s.lhs[i]) + std::abs(constant * s.majorant[i]))) ++out.violations;
  }
  if (out.stations == 0)
    throw Error(ErrorKind::InsufficientStations, "no stations past the transient");
  out.violation_fraction = static_cast<double>(out.violations) / out.stations;
  return out;
}

std::vector<EnergySeries> all_energy_series(const std::vector<FunctionalReport> &reps,
                                            double delta) {
  std::vector<EnergySeries> out;
  if (reps.size() < 3) throw Error(ErrorKind::InsufficientStations, "need three stations");
  int K = std::numeric_limits<int>::max(), smax = K;
  for (const auto &r : reps) {
    K = std::min(K, r.k_max);
    smax = std::min(smax, r.s_max);
  }
  for (int k = 0; k <= std::min(K, smax); ++k)
    for (int n : {0, level_weight(k)})
      for (Level l : {Level::Integer, Level::IntegerHat}) {
        out.push_back(energy_series(reps, l, k, n, delta));
        if (n == 0 && level_weight(k) == 0) break;
      }
  for (int k = 0; k < K && k <= smax; ++k)
    for (int n : {0, half_weight(k)})
      for (Level l : {Level::Y, Level::Z, Level::YHat, Level::ZHat})
        out.push_back(energy_series(reps, l, k, n, delta));
  if (K >= 1) out.push_back(energy_series(reps, Level::Quasi, K, 0, delta));
  return out;
}

void Calibration::absorb(const InequalityCheck &c) {
  if (final_) throw Error(ErrorKind::InvalidParams, "calibration already finalised");
  auto it = constants.find(c.name);
  lower[c.name] = c.lower_bound;
  if (c.lower_bound) {
    if (c.lhs == 0.0 && c.rhs == 0.0) {
      if (it == constants.end()) constants[c.name] = kInf;
      return;
    }
    constants[c.name] = it == constants.end() ? c.ratio : std::min(it->second, c.ratio);
  } else {
    constants[c.name] = it == constants.end() ? c.ratio : std::max(it->second, c.ratio);
  }
}

void Calibration::absorb_series(const EnergySeries &s, double x_min) {
  if (final_) throw Error(ErrorKind::InvalidParams, "calibration already finalised");
  double worst = constants.count(s.name) ? constants[s.name] : 0.0;
  for (size_t i = 0; i < s.x.size(); ++i)
    if (s.x[i] >= x_min) worst = std::max(worst, s.ratio[i]);
  constants[s.name] = worst;
  lower[s.name] = false;
}

void Calibration::finalize() {
  if (final_) return;
  for (auto &[name, v] : constants) v = lower[name] ? v / (1.0 + slack) : v * (1.0 + slack);
  final_ = true;
}

bool Calibration::judge(InequalityCheck &c) const {
  auto it = constants.find(c.name);
  if (it == constants.end()) throw Error(ErrorKind::InvalidParams, "no constant for " + c.name);
  if (c.lower_bound)
    c.pass = (c.lhs == 0.0 && c.rhs == 0.0) || c.ratio >= it->second;
  else
    c.pass = c.ratio <= it->second;
  return c.pass;
}

std::string Calibration::json() const {
  nlohmann::ordered_json j;
  j["slack"] = slack;
  nlohmann::ordered_json cs = nlohmann::ordered_json::object(), lb = nlohmann::ordered_json::array();
  for (const auto &[name, v] : constants) {
    // inf is not valid JSON; a lower bound nobody constrained is stored as null
    if (std::isfinite(v))
      cs[name] = v;
    else
      cs[name] = nullptr;
    auto it = lower.find(name);
    if (it != lower.end() && it->second) lb.push_back(name);
  }
  j["constants"] = cs;
  j["lower_bounds"] = lb;
  return j.dump(2) + "\n";
}

Calibration Calibration::parse(const std::string &text) {
  Calibration c;
  try {
    auto j = nlohmann::json::parse(text);
    c.slack = j.value("slack", 0.1);
    for (auto &[name, v] : j.at("constants").items()) {
      c.constants[name] = v.is_null() ? kInf : v.get<double>();
      c.lower[name] = false;
    }
    for (auto &name : j.value("lower_bounds", nlohmann::json::array()))
      c.lower[name.get<std::string>()] = true;
  } catch (const nlohmann::json::exception &e) {
    throw Error(ErrorKind::InvalidParams, std::string("bad calibration file: ") + e.what());
  }
  c.final_ = true;
  return c;
}

OdeTrajectory ode_compare(double c, double m, double gamma0, double x_end, double h) {
  if (!(c > 0.0) || gamma0 < 0.0 || !(x_end > 1.0) || !(h > 0.0))
    throw Error(ErrorKind::InvalidParams, "ode_compare needs c > 0, Gamma0 >= 0, x_end > 1");
  const double a = -0.25 + 0.75 * m, s = 0.5 + 0.5 * m;
  auto rhs = [&](double x, double g) {
    g = std::max(g, 0.0);
    return -2.0 * c * std::min(std::pow(x, a) * std::pow(g, 2.5), std::pow(x, m) * g * g * g);
  };
  OdeTrajectory t;
  double x = 1.0, g = gamma0;
  t.x.push_back(x);
  t.gamma.push_back(g);
  while (x < x_end) {
    const double dx = std::min(h * x, x_end - x);
    const double k1 = rhs(x, g), k2 = rhs(x + 0.5 * dx, g + 0.5 * dx * k1);
    const double k3 = rhs(x + 0.5 * dx, g + 0.5 * dx * k2), k4 = rhs(x + dx, g + dx * k3);
    g = std::max(g + dx * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0, 0.0);
    x += dx;
    t.x.push_back(x);
    t.gamma.push_back(g);
  }
  t.sup_scaled = -1.0;
  for (size_t i = 0; i < t.x.size(); ++i) {
    const double v = t.gamma[i] * std::pow(t.x[i], s);
    if (v > t.sup_scaled) {
      t.sup_scaled = v;
      t.x_at_sup = t.x[i];
    }
  }
  const double half = std::sqrt(x_end);
  double prev = kInf;
  for (size_t i = 0; i < t.x.size(); ++i) {
    if (t.x[i] < half) continue;
    const double v = t.gamma[i] * std::pow(t.x[i], s);
    if (v > prev * (1.0 + 1e-12)) t.tail_non_increasing = false;
    prev = v;
  }
  return t;
}

double gamma_up(double c, double m, double g0, double x) {
  const double e = 0.75 * (1.0 + m);
  return std::pow(std::pow(g0, -1.5) + 4.0 * c / (1.0 + m) * (std::pow(x, e) - 1.0), -2.0 / 3.0);
}

double gamma_up_residual(double c, double m, double g0, double x) {
  const double h = 1e-3 * x;
  auto G = [&](double z) { return gamma_up(c, m, g0, z); };
  const double dG = (-G(x + 2 * h) + 8 * G(x + h) - 8 * G(x - h) + G(x - 2 * h)) / (12 * h);
  return std::abs(0.5 * dG + c * std::pow(x, -0.25 + 0.75 * m) * std::pow(G(x), 2.5));
}

double theorem1_rate(double m, int k, int j) {
  return -(0.25 + 1.25 * m - 0.005) - k - 0.5 * j * (1.0 - m);
}

double theorem2_rate(double m, int k, int j) {
  return -(0.5 + 1.5 * m - 0.005) - k - 0.5 * j * (1.0 - m);
}

RateFit fit_decay(const Vec &x, const Vec &q, const std::string &name, double theorem_rate,
                  double x_lo, double x_hi, double tolerance) {
  if (x.size() != q.size()) throw Error(ErrorKind::InvalidParams, "x and q differ in length");
  Vec lx, lq;
  for (size_t i = 0; i < x.size(); ++i) {
    if (x[i] < x_lo * (1 - 1e-12) || x[i] > x_hi * (1 + 1e-12)) continue;
    if (!(q[i] > 0.0) || !std::isfinite(q[i]))
      throw Error(ErrorKind::NonPositiveQuantity, name + " is not positive in the window");
    lx.push_back(std::log(x[i]));
    lq.push_back(std::log(q[i]));
  }
  if (lx.size() < 8) throw Error(ErrorKind::InsufficientStations, "rate fits need 8 stations");
  const double n = static_cast<double>(lx.size());
  double mx = 0, my = 0;
  for (size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i] / n;
    my += lq[i] / n;
  }
  double sxx = 0, sxy = 0, syy = 0;
  for (size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (lq[i] - my);
    syy += (lq[i] - my) * (lq[i] - my);
  }
  RateFit f;
  f.quantity = name;
  f.x_lo = x_lo;
  f.x_hi = x_hi;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double sse = 0;
  for (size_t i = 0; i < lx.size(); ++i) {
    const double e = lq[i] - f.intercept - f.slope * lx[i];
    sse += e * e;
  }
  f.r2 = syy > 0 ? 1.0 - sse / syy : 1.0;
  f.theorem_rate = theorem_rate;
  f.stations = static_cast<int>(lx.size());
  f.pass = f.slope <= theorem_rate + tolerance;
  return f;
}

std::vector<std::pair<std::string, double>> linf_quantities(const GoodUnknownStack &st,
                                                            const BackgroundFields &bg,
                                                            double eta_cap) {
  const size_t nc = eta_cut(bg, eta_cap);
  const double x = bg.x, m = bg.m;
  const Vec &y = st.y;
  const double uby0 = bg.du_bar_dy[1][0];
  std::vector<std::pair<std::string, double>> out;
  auto sup = [&](const Vec &f, int p, bool over_ubar, double wall) {
    double s = 0;
    for (size_t j = 0; j < nc; ++j) {
      double v = over_ubar ? (j == 0 ? wall : f[j] / bg.u_bar[j]) : f[j];
      s = std::max(s, std::abs(v) * std::pow(1.0 + bg.eta[j] * bg.eta[j], 0.5 * p));
    }
    return s;
  };
  for (int k = 0; k <= st.k_max && st.has_u(k); ++k) {
    const Vec &u = st.uk[k];
    const Vec uy = d1(y, u);
    const std::string ks = std::to_string(k);
    const double e1 = std::pow(x, 0.25 + k - 0.25 * m - 0.005);
    const double e2 = std::pow(x, 0.75 + k - 0.75 * m - 0.005);
    const double e3 = std::pow(x, 0.25 + k + 0.75 * m - 0.005);
    out.emplace_back("sup_u_k" + ks, e1 * sup(u, 0, false, 0));
    out.emplace_back("sup_u_eta3_k" + ks, e1 * sup(u, 3, false, 0));
    out.emplace_back("sup_uy_eta3_k" + ks, e2 * sup(uy, 3, false, 0));
    out.emplace_back("sup_u_over_ubar_eta3_k" + ks, e3 * sup(u, 3, true, uy[0] / uby0));
    if (k <= 1) out.emplace_back("sup_uy_eta8_k" + ks, e2 * sup(uy, 8, false, 0));
    if (st.has_v(k)) {
      const double e4 = std::pow(x, 0.75 + k + 0.25 * m - 0.005);
      const double e5 = std::pow(x, 0.75 + k + 1.25 * m - 0.005);
      out.emplace_back("sup_v_k" + ks, e4 * sup(st.vk[k], 0, false, 0));
      out.emplace_back("sup_v_over_ubar_k" + ks, e5 * sup(st.vk[k], 0, true, 0.0));
    }
  }
  return out;
}

std::string checks_csv(const std::vector<InequalityCheck> &checks) {
  std::ostringstream os;
  os << "name,m,x,lambda,lhs,rhs,slack,ratio,pass\n";
  for (const auto &c : checks)
    os << c.name << ',' << num(c.m) << ',' << num(c.x) << ',' << num(c.lambda) << ','
       << num(c.lhs) << ',' << num(c.rhs) << ',' << num(c.slack) << ',' << num(c.ratio) << ','
       << (c.pass ? 1 : 0) << '\n';
  return os.str();
}

} // namespace fslab
