#include "fslab/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fslab/errors.hpp"
#include "fslab/io.hpp"
#include "json.hpp"

namespace fslab {

namespace {

const DiffOp &op(const Vec &y, int order) {
  thread_local Vec key[3];
  thread_local DiffOp ops[3];
  if (key[order] != y) {
    ops[order] = DiffOp(y, order, order == 1 ? 5 : 7);
    key[order] = y;
  }
  return ops[order];
}

Vec dy(const Vec &y, const Vec &f) { return op(y, 1).apply(f); }
Vec dyy(const Vec &y, const Vec &f) { return op(y, 2).apply(f); }

// trapezoid rule on [0, y[n-1]]; also tracks the share of the integral that lies
// beyond the cut, assuming the exp(-eta^2/2) decay of squared perturbations
struct Quad {
  const Vec &y;
  size_t n;
  double eta_end;
  double tail = 0.0;

  double operator()(const Vec &f) {
    const double s = trapz_n(y, f, n);
    const double a = std::abs(f[n - 1]);
    if (a > 0.0 && s != 0.0) tail = std::max(tail, a * y[n - 1] / (eta_end * eta_end * std::abs(s)));
    return s;
  }
};

Vec prod(const Vec &a, const Vec &b) {
  Vec c(a.size());
  for (size_t j = 0; j < a.size(); ++j) c[j] = a[j] * b[j];
  return c;
}

Vec prod(const Vec &a, const Vec &b, const Vec &c) {
  Vec d(a.size());
  for (size_t j = 0; j < a.size(); ++j) d[j] = a[j] * b[j] * c[j];
  return d;
}

Vec sq(const Vec &a) { return prod(a, a); }

Table table(int rows) { return Table(std::max(rows, 0), Vec(kTopWeight + 1, 0.0)); }

} // namespace

size_t eta_cut(const BackgroundFields &bg, double cap) {
  size_t n = 0;
  while (n < bg.eta.size() && bg.eta[n] <= cap * (1.0 + 1e-12)) ++n;
  if (n < 3) throw Error(ErrorKind::InvalidParams, "grid too short for the eta cap");
  return n;
}

WeightSet WeightSet::ladder(double r) {
  if (!(r > 0.0 && r < 1.0)) throw Error(ErrorKind::BadWeight, "ladder ratio must lie in (0,1)");
  WeightSet w;
  for (int k = 0; k <= kTopOrder; ++k) w.sigma.push_back(std::pow(r, 2 * k));
  for (int k = 0; k < kTopOrder; ++k) w.sigma_half.push_back(std::pow(r, 2 * k + 1));
  return w;
}

void WeightSet::validate() const {
  if (sigma.size() != kTopOrder + 1 || sigma_half.size() != kTopOrder)
    throw Error(ErrorKind::BadWeight, "weight set has the wrong size");
  for (int k = 0; k < kTopOrder; ++k)
    if (!(sigma[k] > sigma_half[k] && sigma_half[k] > sigma[k + 1]))
      throw Error(ErrorKind::BadWeight, "weights must decrease strictly");
  if (!(sigma[kTopOrder] > 0.0)) throw Error(ErrorKind::BadWeight, "weights must be positive");
}

double ck_pressure(const GoodUnknownStack &st, const BackgroundFields &bg, int k, int n,
                   double eta_cap) {
  if (k < 0 || k > st.k_max) throw Error(ErrorKind::MissingOrder, "order not in stack");
  const double p = -bg.dpdx;
  if (p == 0.0) return 0.0;
  Vec f(st.y.size());
  for (size_t j = 0; j < f.size(); ++j)
    f[j] = st.U[k][j] * st.U[k][j] * std::pow(1.0 + bg.eta[j] * bg.eta[j], n);
  return p * std::pow(bg.x, 2 * k - 0.01) * trapz_n(st.y, f, eta_cut(bg, eta_cap));
}

AlphaGamma alpha_gamma(const Vec &u, const BackgroundFields &bg, double eta_cap) {
  if (!(bg.wall_shear > 0.0)) throw Error(ErrorKind::DegenerateBackground, "u_bar_y(x,0) <= 0");
  const Vec &y = bg.y;
  const size_t n = y.size();
  Vec r(n);
  for (size_t j = 1; j < n; ++j) r[j] = u[j] / bg.u_bar[j];
  r[0] = op(y, 1).at(u, 0) / op(y, 1).at(bg.u_bar, 0);
  const Vec ry = dy(y, r), ryy = dyy(y, r);
  Vec fa(n), fg(n);
  for (size_t j = 0; j < n; ++j) {
    double w = 1.0 + bg.eta[j] * bg.eta[j];
    fa[j] = ry[j] * ry[j] * w * w;
    fg[j] = bg.u_bar[j] * bg.u_bar[j] * ryy[j] * ryy[j] * w * w;
  }
  const double x = bg.x, m = bg.m;
  const size_t nc = eta_cut(bg, eta_cap);
  return {std::pow(x, 1.0 + m - 0.01) * trapz_n(y, fa, nc),
          std::pow(x, 2.0 - 2.0 * m - 0.01) * trapz_n(y, fg, nc)};
}

FunctionalReport evaluate_all(const GoodUnknownStack &st, const BackgroundFields &bg,
                              const WeightSet &w, double eta_cap) {
  w.validate();
  if (st.y != bg.y) throw Error(ErrorKind::InvalidParams, "stack and background grids differ");
  const Vec &y = st.y;
  const size_t N = y.size();
  const int K = st.k_max;
  const double x = bg.x, m = bg.m, p = -bg.dpdx;
  const size_t nc = eta_cut(bg, eta_cap);
  Quad quad{y, nc, bg.eta[nc - 1]};

  FunctionalReport r;
  r.x = x;
  r.m = m;
  r.epsilon = st.epsilon;
  r.k_max = K;

  std::vector<Vec> wn(kTopWeight + 1, Vec(N, 1.0));
  for (int n = 1; n <= kTopWeight; ++n)
    for (size_t j = 0; j < N; ++j) wn[n][j] = wn[n - 1][j] * (1.0 + bg.eta[j] * bg.eta[j]);
  Vec psiw(N), ub2 = sq(bg.u_bar);
  for (size_t j = 0; j < N; ++j) psiw[j] = std::sqrt(1.0 + bg.psi_bar[j] * bg.psi_bar[j]);
  const double uby0 = bg.du_bar_dy[1][0];
  auto weighted = [&](const Vec &f, int n, bool hat) {
    Vec g = prod(f, wn[n]);
    return quad(hat ? prod(g, psiw) : g);
  };

  std::vector<Vec> Uy(K + 1), Uyy(K + 1), Ux(std::max(K, 0));
  for (int k = 0; k <= K; ++k) {
    Uy[k] = dy(y, st.U[k]);
    Uyy[k] = dyy(y, st.U[k]);
  }
  const auto shift = shift_ratio(bg);
  for (int k = 0; k < K; ++k) {
    Ux[k].resize(N);
    for (size_t j = 0; j < N; ++j)
      Ux[k][j] = st.U[k + 1][j] - shift.r[j] * st.U[k][j] - shift.r_y[j] * st.Q[k][j];
  }

  r.E = r.CK = r.CKP = r.D = table(K + 1);
  r.Ehat = r.CKhat = r.CKPhat = r.Dhat = table(K + 1);
  r.B.assign(K + 1, 0.0);
  for (int k = 0; k <= K; ++k) {
    const double xk = std::pow(x, 2 * k - 0.01);
    const Vec e = prod(ub2, sq(st.U[k])), c = sq(st.U[k]), d = prod(bg.u_bar, sq(Uy[k]));
    for (int n = 0; n <= kTopWeight; ++n)
      for (bool hat : {false, true}) {
        double ie = weighted(e, n, hat), ic = p == 0.0 ? 0.0 : weighted(c, n, hat);
        double id = weighted(d, n, hat);
        (hat ? r.Ehat : r.E)[k][n] = xk * ie;
        (hat ? r.CKhat : r.CK)[k][n] = xk * ie / (100.0 * x);
        (hat ? r.CKPhat : r.CKP)[k][n] = (hat ? 1.5 : 1.0) * p * xk * ic;
        (hat ? r.Dhat : r.D)[k][n] = xk * id;
      }
    r.B[k] = uby0 * st.U[k][0] * st.U[k][0] * xk;
  }

  r.EY = r.DY = r.EZ = r.DZ = table(K);
  r.EYhat = r.DYhat = r.EZhat = r.DZhat = table(K);
  r.BZ.assign(std::max(K, 0), 0.0);
  for (int k = 0; k < K; ++k) {
    const double xy = std::pow(x, 1.0 - 0.01 + 2 * k), xz = std::pow(x, 2 * k + 1.0 - m - 0.01);
    const Vec ey = prod(bg.u_bar, sq(Uy[k])), dyv = prod(ub2, sq(Ux[k]));
    const Vec ez = prod(ub2, sq(Uy[k])), dz = prod(bg.u_bar, sq(Uyy[k]));
    for (int n = 0; n <= kTopWeight; ++n)
      for (bool hat : {false, true}) {
        (hat ? r.EYhat : r.EY)[k][n] = xy * weighted(ey, n, hat);
        (hat ? r.DYhat : r.DY)[k][n] = xy * weighted(dyv, n, hat);
        (hat ? r.EZhat : r.EZ)[k][n] = xz * weighted(ez, n, hat);
        (hat ? r.DZhat : r.DZ)[k][n] = xz * weighted(dz, n, hat);
      }
    r.BZ[k] = uby0 * Uy[k][0] * Uy[k][0] * xz;
  }

  {
    const Vec &cU = st.calU[K];
    const Vec cUy = dy(y, cU);
    const double xk = std::pow(x, 2 * K - 0.01);
    const double ie = quad(prod(ub2, sq(cU)));
    r.Ebar = xk * quad(prod(sq(st.mu), sq(cU)));
    r.Dbar = xk * quad(prod(st.mu, sq(cUy)));
    r.CKbar = xk * ie / (100.0 * x);
    r.CKPbar = p == 0.0 ? 0.0 : p * xk * quad(sq(cU));
    r.Bbar = st.mu_y[0] * cU[0] * cU[0] * xk;
    if (K >= 1 && st.has_v(K - 1)) r.Hbar = xk * quad(prod(source_H(st, bg, K), cU));
  }

  while (r.s_max < K && st.has_u(r.s_max + 2) && st.has_v(r.s_max + 1)) ++r.s_max;
  r.S = r.Shat = table(r.s_max + 1);
  r.SY = r.SZ = r.SYhat = r.SZhat = table(std::min(r.s_max + 1, K));
  for (int k = 0; k <= r.s_max; ++k) {
    const Vec G = source_G(st, bg, k);
    const Vec gu = prod(G, st.U[k]);
    const double xk = std::pow(x, 2 * k - 0.01);
    for (int n = 0; n <= kTopWeight; ++n) {
      r.S[k][n] = xk * trapz_n(y, prod(gu, wn[n]), nc);
      r.Shat[k][n] = xk * trapz_n(y, prod(gu, wn[n], psiw), nc);
    }
    if (k < K) {
      const Vec gx = prod(G, Ux[k]), gz = prod(dy(y, G), Uy[k]);
      const double xy = std::pow(x, 2 * k + 1.0 - 0.01), xz = std::pow(x, 2 * k + 1.0 - m - 0.01);
      for (int n = 0; n <= kTopWeight; ++n) {
        r.SY[k][n] = xy * trapz_n(y, prod(gx, wn[n]), nc);
        r.SZ[k][n] = xz * trapz_n(y, prod(gz, wn[n]), nc);
        r.SYhat[k][n] = xy * trapz_n(y, prod(gx, wn[n], psiw), nc);
        r.SZhat[k][n] = xz * trapz_n(y, prod(gz, wn[n], psiw), nc);
      }
    }
  }

  // aggregates: sums over the orders k' <= k of the level-k' functionals
  r.I_le.assign(K + 1, 0.0);
  r.I_hat.assign(K + 1, 0.0);
  r.J_hat.assign(K + 1, 0.0);
  r.I_le_half.assign(std::max(K, 0), 0.0);
  r.I_hat_half.assign(std::max(K, 0), 0.0);
  r.J_hat_half.assign(std::max(K, 0), 0.0);
  double il = 0, ih = 0, jh = 0;   // integer levels up to k
  double hl = 0, hh = 0, hj = 0;   // half levels below k
  for (int k = 0; k <= K; ++k) {
    const int n = level_weight(k);
    il += r.D[k][0] + r.CK[k][0] + r.B[k];
    ih += r.D[k][n] + r.CK[k][n] + r.B[k];
    jh += r.Dhat[k][n] + r.CKhat[k][n] + r.B[k];
    r.I_le[k] = il + hl;
    r.I_hat[k] = ih + hh;
    r.J_hat[k] = jh + hj;
    if (k < K) {
      const int nh = half_weight(k);
      hl += r.DY[k][0] + r.DZ[k][0] + r.BZ[k];
      hh += r.DY[k][nh] + r.DZ[k][nh] + r.BZ[k];
      hj += r.DYhat[k][nh] + r.DZhat[k][nh] + r.BZ[k];
      r.I_le_half[k] = il + hl;
      r.I_hat_half[k] = ih + hh;
      r.J_hat_half[k] = jh + hj;
    }
  }

  auto ag = alpha_gamma(st.uk[0], bg, eta_cap);
  r.alpha = ag.alpha;
  r.gamma = ag.gamma;

  for (int k = 0; k <= K; ++k) {
    const int n = level_weight(k);
    const double s = w.sigma[k];
    r.total_E += s * r.E[k][n];
    r.total_D += s * r.D[k][n];
    r.total_CK += s * r.CK[k][n];
    r.total_CKP += s * r.CKP[k][n];
    r.total_B += s * r.B[k];
    r.hat_E += s * r.Ehat[k][n];
    r.hat_D += s * r.Dhat[k][n];
    r.hat_CK += s * r.CKhat[k][n];
    r.hat_CKP += s * r.CKPhat[k][n];
    r.hat_B += s * r.B[k];
    if (k < K) {
      r.quasi_E += s * r.E[k][n];
      r.quasi_D += s * r.D[k][n];
      r.quasi_CK += s * r.CK[k][n];
      r.quasi_CKP += s * r.CKP[k][n];
      r.quasi_B += s * r.B[k];
    }
  }
  r.quasi_E += w.sigma[K] * r.Ebar;
  r.quasi_D += w.sigma[K] * r.Dbar;
  r.quasi_CK += w.sigma[K] * r.CKbar;
  r.quasi_CKP += w.sigma[K] * r.CKPbar;
  r.quasi_B += w.sigma[K] * r.Bbar;
  for (int k = 0; k < K; ++k) {
    const int n = half_weight(k);
    const double s = w.sigma_half[k];
    const double e = s * (r.EY[k][n] + r.EZ[k][n]), d = s * (r.DY[k][n] + r.DZ[k][n]);
    r.total_E += e;
    r.total_D += d;
    r.total_B += s * r.BZ[k];
    r.quasi_E += e;
    r.quasi_D += d;
    r.quasi_B += s * r.BZ[k];
    r.hat_E += s * (r.EYhat[k][n] + r.EZhat[k][n]);
    r.hat_D += s * (r.DYhat[k][n] + r.DZhat[k][n]);
    r.hat_B += s * r.BZ[k];
  }
  r.tail_ratio = quad.tail;
  return r;
}

double combined_energy(const FunctionalReport &r, const WeightSet &w) {
  double e = 0.0;
  for (int k = 0; k < r.k_max; ++k) {
    const int nh = half_weight(k);
    e += w.sigma[k] * r.E[k][level_weight(k)];
    e += w.sigma_half[k] * (r.EY[k][nh] + r.EZ[k][nh]);
  }
  return e + w.sigma[r.k_max] * r.Ebar;
}

SigmaCalibration calibrate_sigma(const std::vector<FunctionalReport> &reports, const Vec &ratios,
                                 double x_min, int threshold) {
  if (reports.size() < 20)
    throw Error(ErrorKind::InsufficientStations, "calibration needs at least 20 stations");
  if (ratios.empty()) throw Error(ErrorKind::InvalidParams, "no candidate ratios");
  SigmaCalibration best;
  best.violations = std::numeric_limits<int>::max();
  for (double q : ratios) {
    WeightSet w = WeightSet::ladder(q);
    int bad = 0, count = 0;
    double prev = combined_energy(reports[0], w);
    for (size_t i = 1; i < reports.size(); ++i) {
      double e = combined_energy(reports[i], w);
      if (reports[i].x >= x_min) {
        ++count;
        if (e > prev) ++bad;
      }
      prev = e;
    }
    if (bad < best.violations) {
      best.weights = w;
      best.ratio = q;
      best.violations = bad;
      best.stations = count;
    }
  }
  best.ok = best.violations <= threshold;
  return best;
}

std::vector<std::pair<std::string, double>> FunctionalReport::entries() const {
  std::vector<std::pair<std::string, double>> out;
  auto put_table = [&](const std::string &name, const Table &t) {
    for (size_t k = 0; k < t.size(); ++k)
      for (size_t n = 0; n < t[k].size(); ++n)
        out.emplace_back(name + "_" + std::to_string(k) + "_" + std::to_string(n), t[k][n]);
  };
  auto put_vec = [&](const std::string &name, const Vec &v) {
    for (size_t k = 0; k < v.size(); ++k) out.emplace_back(name + "_" + std::to_string(k), v[k]);
  };
  out.emplace_back("x", x);
  put_table("E", E);
  put_table("CK", CK);
  put_table("CKP", CKP);
  put_table("D", D);
  put_vec("B", B);
  put_table("EY", EY);
  put_table("DY", DY);
  put_table("EZ", EZ);
  put_table("DZ", DZ);
  put_vec("BZ", BZ);
  put_table("Ehat", Ehat);
  put_table("CKhat", CKhat);
  put_table("CKPhat", CKPhat);
  put_table("Dhat", Dhat);
  put_table("EYhat", EYhat);
  put_table("DYhat", DYhat);
  put_table("EZhat", EZhat);
  put_table("DZhat", DZhat);
  for (auto [n, v] : {std::pair<const char *, double>{"Ebar", Ebar}, {"Dbar", Dbar},
                      {"CKbar", CKbar}, {"CKPbar", CKPbar}, {"Bbar", Bbar}, {"Hbar", Hbar}})
    out.emplace_back(n, v);
  put_table("S", S);
  put_table("Shat", Shat);
  put_table("SY", SY);
  put_table("SZ", SZ);
  put_table("SYhat", SYhat);
  put_table("SZhat", SZhat);
  put_vec("I_le", I_le);
  put_vec("I_le_half", I_le_half);
  put_vec("I_hat", I_hat);
  put_vec("I_hat_half", I_hat_half);
  put_vec("J_hat", J_hat);
  put_vec("J_hat_half", J_hat_half);
  for (auto [n, v] : {std::pair<const char *, double>{"alpha", alpha}, {"gamma", gamma},
                      {"total_E", total_E}, {"total_D", total_D}, {"total_CK", total_CK},
                      {"total_CKP", total_CKP}, {"total_B", total_B}, {"quasi_E", quasi_E},
                      {"quasi_D", quasi_D}, {"quasi_CK", quasi_CK}, {"quasi_CKP", quasi_CKP},
                      {"quasi_B", quasi_B}, {"hat_E", hat_E}, {"hat_D", hat_D},
                      {"hat_CK", hat_CK}, {"hat_CKP", hat_CKP}, {"hat_B", hat_B},
                      {"tail_ratio", tail_ratio}})
    out.emplace_back(n, v);
  return out;
}

std::string reports_csv(const std::vector<FunctionalReport> &reports) {
  CsvTable t;
  if (reports.empty()) return t.str();
  for (const auto &[name, v] : reports.front().entries()) t.header.push_back(name);
  for (const auto &r : reports) {
    auto e = r.entries();
    if (e.size() != t.header.size())
      throw Error(ErrorKind::InvalidParams, "reports with different orders in one table");
    std::vector<double> row;
    for (const auto &[name, v] : e) row.push_back(v);
    t.rows.push_back(std::move(row));
  }
  return t.str();
}

std::string weights_json(const SigmaCalibration &c) {
  nlohmann::ordered_json j;
  j["ratio"] = c.ratio;
  j["violations"] = c.violations;
  j["stations"] = c.stations;
  j["ok"] = c.ok;
  j["sigma"] = c.weights.sigma;
  j["sigma_half"] = c.weights.sigma_half;
  return j.dump(2) + "\n";
}

} // namespace fslab
