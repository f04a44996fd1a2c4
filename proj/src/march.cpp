#include "fslab/march.hpp"

#include <algorithm>
#include <cmath>

#include "fslab/errors.hpp"

namespace fslab {

void MarchConfig::validate() const {
  if (!(x_start >= 1.0 && x_end > x_start))
    throw Error(ErrorKind::InvalidParams, "need x_end > x_start >= 1");
  if (!(dx_init > 0.0 && dx_init <= dx_max))
    throw Error(ErrorKind::InvalidParams, "need 0 < dx_init <= dx_max");
  if (!(nonlinear_tol > 0.0)) throw Error(ErrorKind::InvalidParams, "nonlinear_tol <= 0");
  if (!(epsilon >= 0.0)) throw Error(ErrorKind::InvalidParams, "epsilon < 0");
  if (!(m >= 0.0)) throw Error(ErrorKind::InvalidParams, "m < 0");
  if (history_depth < 2 || max_picard_iters < 1)
    throw Error(ErrorKind::InvalidParams, "history_depth < 2 or max_picard_iters < 1");
}

Vec march_grid(const MarchConfig &cfg) {
  const double q = 0.5 * (1.0 - cfg.m);
  const double s0 = std::pow(cfg.x_start, q), s1 = std::pow(cfg.x_end, q);
  const double lo = std::min(s0, s1), hi = std::max(s0, s1);
  return GeometricGrid::fit(cfg.grid.first_spacing * lo, cfg.grid.ratio, cfg.grid.eta_cap * hi)
      .points();
}

std::vector<double> log_schedule(double a, double b, int n) {
  std::vector<double> s(n);
  for (int i = 0; i < n; ++i) s[i] = a * std::pow(b / a, static_cast<double>(i) / (n - 1));
  s.front() = a;
  s.back() = b;
  return s;
}

CoefficientProvider coefficient_provider(const BackgroundModel &model, const Vec &y) {
  auto eu = model.expr('u', 0, 0), ev = model.expr('v', 0, 0);
  auto ex = model.expr('u', 1, 0), ey = model.expr('u', 0, 1);
  return [&model, y, eu, ev, ex, ey](double x) {
    MarchCoefficients c{model.eval(eu, x, y), model.eval(ev, x, y), model.eval(ex, x, y),
                        model.eval(ey, x, y)};
    c.u_bar[0] = 0.0;
    c.v_bar[0] = 0.0;
    return c;
  };
}

PerturbationState init_perturbation(const MarchConfig &cfg, const Vec &y, const Vec &u_in) {
  cfg.validate();
  if (y.size() != u_in.size() || y.size() < 3)
    throw Error(ErrorKind::InvalidParams, "initial data does not match the grid");
  if (u_in[0] != 0.0)
    throw Error(ErrorKind::IncompatibleData, "u_IN(0) must vanish");
  PerturbationState s;
  s.x = cfg.x_start;
  s.y = y;
  s.u = u_in;
  s.v.assign(y.size(), 0.0);
  s.psi = cumtrapz(y, u_in);
  s.history.push_front({s.x, s.u});
  return s;
}

PerturbationState march_step(const PerturbationState &s, const MarchCoefficients &co, double dx,
                             const MarchConfig &cfg, const StepOptions &opt) {
  if (!(dx > 0.0)) throw Error(ErrorKind::InvalidParams, "dx must be positive");
  const Vec &y = s.y;
  const size_t n = y.size();
  const double xn = s.x + dx;
  const double eps = cfg.epsilon;

  // backward-difference weights for d_x at the new station
  Vec nodes{xn};
  int used = (cfg.scheme == Scheme::BDF2 && s.history.size() >= 2) ? 2 : 1;
  for (int i = 0; i < used; ++i) nodes.push_back(s.history[i].x);
  auto w = fd_weights(xn, nodes, 1)[1];
  const double a0 = w[0];
  Vec R(n, 0.0);
  for (int i = 0; i < used; ++i)
    for (size_t j = 0; j < n; ++j) R[j] += w[i + 1] * s.history[i].u[j];

  Vec F = opt.source ? opt.source(xn, y) : Vec(n, 0.0);
  const double u_far = opt.far_field ? opt.far_field(xn) : 0.0;

  Vec ustar = s.u, vstar = s.v, unew(n), ux(n);
  for (size_t j = 1; j < n; ++j)
    if (co.u_bar[j] + eps * ustar[j] < 0.0)
      throw Error(ErrorKind::FlowReversal, "u_bar + eps u < 0 entering x = " + std::to_string(xn));
  Vec A(n), B(n), C(n), D(n);
  int it = 0;
  bool converged = false;
  while (it < cfg.max_picard_iters) {
    ++it;
    A[0] = 0.0, B[0] = 1.0, C[0] = 0.0, D[0] = 0.0;
    for (size_t j = 1; j + 1 < n; ++j) {
      double hm = y[j] - y[j - 1], hp = y[j + 1] - y[j], hs = hm + hp;
      double mu = co.u_bar[j] + eps * ustar[j];
      double nu = co.v_bar[j] + eps * vstar[j];
      A[j] = -nu * hp / (hm * hs) - 2.0 / (hm * hs);
      B[j] = mu * a0 + nu * (hp - hm) / (hm * hp) + co.u_bar_x[j] + 2.0 / (hm * hp);
      C[j] = nu * hm / (hp * hs) - 2.0 / (hp * hs);
      D[j] = -mu * R[j] - co.u_bar_y[j] * vstar[j] + F[j];
    }
    A[n - 1] = 0.0, B[n - 1] = 1.0, C[n - 1] = 0.0, D[n - 1] = u_far;
    solve_tridiagonal(A, B, C, D, unew);
    for (size_t j = 0; j < n; ++j) ux[j] = a0 * unew[j] + R[j];
    Vec vnew = cumtrapz(y, ux);
    for (double &v : vnew) v = -v;
    double delta = 0.0;
    for (size_t j = 0; j < n; ++j) delta = std::max(delta, std::abs(unew[j] - ustar[j]));
    ustar.swap(unew);
    vstar.swap(vnew);
    if (!std::isfinite(delta)) break;
    if (delta < cfg.nonlinear_tol) {
      converged = true;
      break;
    }
  }
  if (!converged)
    throw Error(ErrorKind::PicardDivergence,
                "no convergence after " + std::to_string(it) + " iterations at x = " +
                    std::to_string(xn));
  for (size_t j = 1; j < n; ++j)
    if (co.u_bar[j] + eps * ustar[j] < 0.0)
      throw Error(ErrorKind::FlowReversal, "u_bar + eps u < 0 at x = " + std::to_string(xn));

  PerturbationState out;
  out.x = xn;
  out.y = y;
  out.u = std::move(ustar);
  out.v = std::move(vstar);
  out.psi = cumtrapz(y, out.u);
  out.history = s.history;
  out.history.push_front({xn, out.u});
  while (static_cast<int>(out.history.size()) > cfg.history_depth) out.history.pop_back();
  out.stats = s.stats;
  out.stats.steps += 1;
  out.stats.picard_total += it;
  out.stats.picard_max = std::max(out.stats.picard_max, it);
  return out;
}

std::vector<PerturbationState> march_to(PerturbationState &s, double x_target,
                                        const MarchConfig &cfg, const CoefficientProvider &prov,
                                        const StepOptions &opt) {
  if (x_target > cfg.x_end * (1.0 + 1e-12))
    throw Error(ErrorKind::InvalidParams, "x_target beyond x_end");
  std::vector<PerturbationState> snaps;
  auto tol = [](double x) { return 1e-12 * std::max(1.0, x); };
  std::vector<double> sched = cfg.station_schedule;
  std::sort(sched.begin(), sched.end());
  auto scheduled = [&](double x) {
    for (double q : sched)
      if (std::abs(q - x) <= tol(x)) return true;
    return false;
  };
  if (scheduled(s.x) || x_target <= s.x + tol(s.x)) snaps.push_back(s);
  while (s.x < x_target - tol(x_target)) {
    double land = x_target;
    for (double q : sched)
      if (q > s.x + tol(s.x)) {
        land = std::min(land, q);
        break;
      }
    const double dist = land - s.x;
    const double dx_nom = std::min(cfg.dx_max, cfg.dx_init * s.x / cfg.x_start);
    const int nsub = std::max(1, static_cast<int>(std::ceil(dist / dx_nom - 1e-9)));
    const double dx = dist / nsub;
    for (int k = 0; k < nsub; ++k) {
      double xn = (k + 1 == nsub) ? land : s.x + dx;
      s = march_step(s, prov(xn), xn - s.x, cfg, opt);
    }
    s.x = land;
    s.history.front().x = land;
    if (scheduled(land)) snaps.push_back(s);
  }
  return snaps;
}

Vec x_derivatives(const PerturbationState &s, int k) {
  if (k < 0 || k > 5) throw Error(ErrorKind::OrderUnavailable, "order must lie in [0,5]");
  if (k == 0) return s.u;
  const int have = static_cast<int>(s.history.size());
  if (have < k + 1)
    throw Error(ErrorKind::InsufficientHistory,
                "need " + std::to_string(k + 1) + " stations, have " + std::to_string(have));
  const int npts = std::min(have, k + 2);
  Vec nodes(npts);
  for (int i = 0; i < npts; ++i) nodes[i] = s.history[i].x;
  auto w = fd_weights(s.x, nodes, k)[k];
  Vec out(s.u.size(), 0.0);
  for (int i = 0; i < npts; ++i)
    for (size_t j = 0; j < out.size(); ++j) out[j] += w[i] * s.history[i].u[j];
  return out;
}

Vec gaussian_data(const Vec &y, double amplitude, double width) {
  Vec u(y.size());
  for (size_t j = 0; j < y.size(); ++j) {
    double t = y[j] / width;
    u[j] = amplitude * y[j] * std::exp(-t * t);
  }
  return u;
}

} // namespace fslab
