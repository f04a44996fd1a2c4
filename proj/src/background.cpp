#include "fslab/background.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include "fslab/errors.hpp"
#include "fslab/io.hpp"

namespace fslab {

namespace {

void normalize(std::vector<SimTerm> &t) {
  std::map<std::pair<int, int>, double> acc;
  for (const auto &s : t) acc[{s.p, s.j}] += s.c;
  t.clear();
  for (const auto &[k, c] : acc)
    if (c != 0.0) t.push_back({k.first, k.second, c});
}

// d/dxi of sum c xi^p f^{(j)}
std::vector<SimTerm> dxi(const std::vector<SimTerm> &t) {
  std::vector<SimTerm> out;
  for (const auto &s : t) {
    if (s.p > 0) out.push_back({s.p - 1, s.j, s.c * s.p});
    out.push_back({s.p, s.j + 1, s.c});
  }
  normalize(out);
  return out;
}

int max_j(const SimExpr &e) {
  int J = 0;
  for (const auto &t : e.terms) J = std::max(J, t.j);
  return J;
}

int max_p(const SimExpr &e) {
  int P = 0;
  for (const auto &t : e.terms) P = std::max(P, t.p);
  return P;
}

} // namespace

BackgroundModel::BackgroundModel(FsProfile profile)
    : profile_(std::move(profile)), m_(profile_.params.m), beta_(profile_.params.beta),
      c_(std::sqrt(0.5 * (m_ + 1.0))), b_(0.5 * (m_ - 1.0)) {}

SimExpr BackgroundModel::psi_expr() const {
  return SimExpr{0.5 * (1.0 + m_), {{0, 0, 1.0 / c_}}};
}

SimExpr BackgroundModel::dy(const SimExpr &e) const {
  SimExpr out{e.xexp + b_, dxi(e.terms)};
  for (auto &t : out.terms) t.c *= c_;
  return out;
}

SimExpr BackgroundModel::dx(const SimExpr &e) const {
  std::vector<SimTerm> t;
  for (const auto &s : e.terms) {
    t.push_back({s.p, s.j, e.xexp * s.c});
    // b xi d/dxi
    if (s.p > 0) t.push_back({s.p, s.j, b_ * s.c * s.p});
    t.push_back({s.p + 1, s.j + 1, b_ * s.c});
  }
  normalize(t);
  return SimExpr{e.xexp - 1.0, t};
}

SimExpr BackgroundModel::expr(char which, int i, int j) const {
  SimExpr e = psi_expr();
  if (which == 'u') {
    e = dy(e);
  } else if (which == 'v') {
    e = dx(e);
    for (auto &t : e.terms) t.c = -t.c;
  }
  for (int a = 0; a < j; ++a) e = dy(e);
  for (int a = 0; a < i; ++a) e = dx(e);
  return e;
}

void BackgroundModel::profile_derivatives(double xi, int J, double *F) const {
  auto v = eval_profile(profile_, xi);
  F[0] = v[0];
  if (J >= 1) F[1] = v[1];
  if (J >= 2) F[2] = v[2];
  // differentiate f''' = -f f'' - beta (1 - f'^2) n times
  for (int n = 0; n + 3 <= J; ++n) {
    double s = (n == 0) ? -beta_ : 0.0;
    double binom = 1.0;
    for (int i = 0; i <= n; ++i) {
      s += binom * (-F[i] * F[n - i + 2] + beta_ * F[i + 1] * F[n - i + 1]);
      binom = binom * (n - i) / (i + 1);
    }
    F[n + 3] = s;
  }
}

Vec BackgroundModel::eval(const SimExpr &e, double x, const Vec &y) const {
  Vec out(y.size());
  const int J = max_j(e), P = max_p(e);
  std::vector<double> F(J + 1), xp(P + 1);
  const double xs = std::pow(x, e.xexp);
  const double scale = c_ * std::pow(x, b_);
  for (size_t k = 0; k < y.size(); ++k) {
    double xi = scale * y[k];
    profile_derivatives(xi, J, F.data());
    xp[0] = 1.0;
    for (int p = 1; p <= P; ++p) xp[p] = xp[p - 1] * xi;
    double s = 0.0;
    for (const auto &t : e.terms) s += t.c * xp[t.p] * F[t.j];
    out[k] = xs * s;
  }
  return out;
}

double BackgroundModel::eval_point(const SimExpr &e, double x, double y) const {
  return eval(e, x, Vec{y})[0];
}

double BackgroundFields::eta_scale() const { return std::pow(x, 0.5 * (1.0 - m)); }

BackgroundFields build_background(const BackgroundModel &model, double x, const Vec &y) {
  if (!(x >= 1.0)) throw Error(ErrorKind::StationOutOfRange, "station x < 1");
  if (y.empty() || y[0] != 0.0)
    throw Error(ErrorKind::InvalidParams, "y grid must start at 0");
  BackgroundFields bg;
  bg.m = model.m();
  bg.x = x;
  bg.y = y;
  const double s = bg.eta_scale();
  bg.eta.resize(y.size());
  for (size_t k = 0; k < y.size(); ++k) bg.eta[k] = y[k] / s;

  // shared per-point f-derivatives for all expressions
  std::vector<SimExpr> ex;
  for (int i = 0; i <= BackgroundFields::kMaxX; ++i)
    for (int j = 0; j <= BackgroundFields::kMaxY; ++j) ex.push_back(model.expr('u', i, j));
  for (int i = 0; i < BackgroundFields::kMaxX; ++i) ex.push_back(model.expr('v', i, 0));
  for (int i = 0; i < BackgroundFields::kMaxX; ++i) ex.push_back(model.expr('v', i, 1));
  ex.push_back(model.psi_expr());

  int J = 0, P = 0;
  for (const auto &e : ex) {
    J = std::max(J, max_j(e));
    P = std::max(P, max_p(e));
  }
  std::vector<Vec> vals(ex.size(), Vec(y.size()));
  std::vector<double> F(J + 1), xp(P + 1), xs(ex.size());
  for (size_t q = 0; q < ex.size(); ++q) xs[q] = std::pow(x, ex[q].xexp);
  const double scale = model.xi_scale() * std::pow(x, model.x_power());
  for (size_t k = 0; k < y.size(); ++k) {
    double xi = scale * y[k];
    model.profile_derivatives(xi, J, F.data());
    xp[0] = 1.0;
    for (int p = 1; p <= P; ++p) xp[p] = xp[p - 1] * xi;
    for (size_t q = 0; q < ex.size(); ++q) {
      double acc = 0.0;
      for (const auto &t : ex[q].terms) acc += t.c * xp[t.p] * F[t.j];
      vals[q][k] = xs[q] * acc;
    }
  }

  size_t q = 0;
  bg.du.assign(BackgroundFields::kMaxX + 1, std::vector<Vec>(BackgroundFields::kMaxY + 1));
  for (int i = 0; i <= BackgroundFields::kMaxX; ++i)
    for (int j = 0; j <= BackgroundFields::kMaxY; ++j) bg.du[i][j] = std::move(vals[q++]);
  bg.dv.resize(BackgroundFields::kMaxX);
  bg.dvy.resize(BackgroundFields::kMaxX);
  for (int i = 0; i < BackgroundFields::kMaxX; ++i) bg.dv[i] = std::move(vals[q++]);
  for (int i = 0; i < BackgroundFields::kMaxX; ++i) bg.dvy[i] = std::move(vals[q++]);
  bg.psi_bar = std::move(vals[q++]);

  bg.u_bar = bg.du[0][0];
  bg.u_bar[0] = 0.0;
  bg.du[0][0][0] = 0.0;
  bg.psi_bar[0] = 0.0;
  bg.v_bar = bg.dv[0];
  for (int j = 1; j <= BackgroundFields::kMaxY; ++j) bg.du_bar_dy[j] = bg.du[0][j];
  bg.u_bar_x = bg.du[1][0];
  bg.v_bar_y = DiffOp(y, 1, 3).apply(bg.v_bar);
  bg.dpdx = -bg.m * std::pow(x, 2.0 * bg.m - 1.0);
  bg.wall_shear = bg.du[0][1][0];
  return bg;
}

Vec default_station_grid(double m, double x, double eta_cap, double first, double ratio) {
  double s = std::pow(x, 0.5 * (1.0 - m));
  return GeometricGrid::fit(first * s, ratio, eta_cap * s).points();
}

double divergence_residual(const BackgroundFields &bg) {
  double r = 0.0;
  for (size_t k = 0; k < bg.y.size(); ++k) r = std::max(r, std::abs(bg.u_bar_x[k] + bg.v_bar_y[k]));
  return r;
}

VDecomposition decompose_v(const BackgroundFields &bg) {
  VDecomposition d;
  const double s = bg.eta_scale();
  d.eta = bg.eta;
  d.v_star.resize(bg.y.size());
  for (size_t k = 0; k < bg.y.size(); ++k) {
    d.v_star[k] = bg.v_bar[k] * s + bg.m * bg.eta[k];
    d.sup_v_star = std::max(d.sup_v_star, std::abs(d.v_star[k]));
  }
  for (size_t k = 0; k < bg.y.size(); ++k) {
    double rec = (-bg.m * d.eta[k] + d.v_star[k]) / s;
    d.reconstruction_error = std::max(d.reconstruction_error, std::abs(rec - bg.v_bar[k]));
  }
  return d;
}

WedgeFlow::WedgeFlow(double b) : beta(b) {
  if (!(b >= 0.0 && b < 2.0)) throw Error(ErrorKind::InvalidBeta, "beta outside [0,2)");
  m = m_from_beta(b);
}

double WedgeFlow::psi(double theta, double r) const {
  const double k = 2.0 / (2.0 - beta);
  return std::pow(r, k) * std::sin(k * (std::numbers::pi - theta));
}

double WedgeFlow::psi_xy(double X, double Y) const {
  double th = std::atan2(Y, X);
  if (th < -0.5 * std::numbers::pi) th += 2.0 * std::numbers::pi;
  return psi(th, std::hypot(X, Y));
}

double WedgeFlow::wall_angle() const { return 0.5 * beta * std::numbers::pi; }

WedgeTrace wedge_euler_trace(double beta, double tau, double h) {
  WedgeFlow w(beta);
  if (!(tau > 0.0)) throw Error(ErrorKind::InvalidParams, "tau must be positive");
  const double th = w.wall_angle();
  const double px = tau * std::cos(th), py = tau * std::sin(th);
  const double nx = -std::sin(th), ny = std::cos(th);
  double p0 = w.psi_xy(px, py);
  double pp = w.psi_xy(px + h * nx, py + h * ny);
  double pm = w.psi_xy(px - h * nx, py - h * ny);
  return {(1.0 + w.m) * std::pow(tau, w.m), (pp - p0) / h, (pp - pm) / (2.0 * h)};
}

double wedge_harmonicity_check(double beta, const Annulus &a, LaplaceStencil st) {
  WedgeFlow w(beta);
  const double th0 = w.wall_angle() + a.margin, th1 = std::numbers::pi - a.margin;
  if (!(th1 > th0)) throw Error(ErrorKind::InvalidParams, "annulus outside fluid sector");
  const double h = a.h;
  double res = 0.0;
  for (int i = 0; i < a.n_r; ++i) {
    double r = a.r_min + (a.r_max - a.r_min) * i / std::max(1, a.n_r - 1);
    for (int j = 0; j < a.n_theta; ++j) {
      double th = th0 + (th1 - th0) * j / std::max(1, a.n_theta - 1);
      double lap;
      if (st == LaplaceStencil::Cartesian) {
        double X = r * std::cos(th), Y = r * std::sin(th);
        lap = (w.psi_xy(X + h, Y) + w.psi_xy(X - h, Y) + w.psi_xy(X, Y + h) +
               w.psi_xy(X, Y - h) - 4.0 * w.psi_xy(X, Y)) / (h * h);
      } else {
        double c = w.psi(th, r);
        double rr = (w.psi(th, r + h) - 2 * c + w.psi(th, r - h)) / (h * h);
        double rd = (w.psi(th, r + h) - w.psi(th, r - h)) / (2 * h);
        double tt = (w.psi(th + h, r) - 2 * c + w.psi(th - h, r)) / (h * h);
        lap = rr + rd / r + tt / (r * r);
      }
      res = std::max(res, std::abs(lap));
    }
  }
  return res;
}

std::string background_csv(const BackgroundFields &bg) {
  CsvTable t;
  t.header = {"x", "y", "eta", "u_bar", "v_bar", "psi_bar", "duy1", "duy2", "duy3", "duy4"};
  for (size_t k = 0; k < bg.y.size(); ++k)
    t.rows.push_back({bg.x, bg.y[k], bg.eta[k], bg.u_bar[k], bg.v_bar[k], bg.psi_bar[k],
                      bg.du_bar_dy[1][k], bg.du_bar_dy[2][k], bg.du_bar_dy[3][k],
                      bg.du_bar_dy[4][k]});
  return t.str();
}

} // namespace fslab
