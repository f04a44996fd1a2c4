#include "fslab/fs_profile.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "fslab/errors.hpp"
#include "fslab/io.hpp"

namespace fslab {

double beta_from_m(double m) { return 2.0 * m / (m + 1.0); }
double m_from_beta(double beta) { return beta / (2.0 - beta); }

FsParams FsParams::from_beta(double beta) {
  if (!(beta >= 0.0 && beta < 2.0))
    throw Error(ErrorKind::InvalidParams, "beta must lie in [0,2)");
  FsParams p;
  p.beta = beta;
  p.m = m_from_beta(beta);
  return p;
}

FsParams FsParams::from_m(double m) {
  if (!(m >= 0.0 && std::isfinite(m)))
    throw Error(ErrorKind::InvalidParams, "m must be finite and >= 0");
  FsParams p;
  p.m = m;
  p.beta = beta_from_m(m);
  return p;
}

void FsParams::validate() const {
  if (!(beta >= 0.0 && beta < 2.0))
    throw Error(ErrorKind::InvalidParams, "beta must lie in [0,2)");
  if (std::abs(beta_from_m(m) - beta) > 1e-12 * (1.0 + beta))
    throw Error(ErrorKind::InvalidParams, "beta and m inconsistent");
  if (eta_max < 8.0) throw Error(ErrorKind::InvalidParams, "eta_max < 8");
  if (n_xi < 200) throw Error(ErrorKind::InvalidParams, "n_xi < 200");
  if (!(shoot_tol > 0.0)) throw Error(ErrorKind::InvalidParams, "shoot_tol <= 0");
}

double FsParams::xi_max() const { return std::sqrt(0.5 * (m + 1.0)) * eta_max; }

double fs_f3(double beta, double f, double fp, double fpp) {
  return -f * fpp - beta * (1.0 - fp * fp);
}

double fs_f4(double beta, double f, double fp, double fpp) {
  double f3 = fs_f3(beta, f, fp, fpp);
  return -fp * fpp - f * f3 + 2.0 * beta * fp * fpp;
}

double fs_f5(double beta, double f, double fp, double fpp) {
  double f3 = fs_f3(beta, f, fp, fpp);
  double f4 = fs_f4(beta, f, fp, fpp);
  return (2.0 * beta - 1.0) * fpp * fpp + (2.0 * beta - 2.0) * fp * f3 - f * f4;
}

namespace {

struct State {
  double f, fp, fpp;
};

State rhs(double beta, const State &s) {
  return {s.fp, s.fpp, fs_f3(beta, s.f, s.fp, s.fpp)};
}

State axpy(const State &a, double h, const State &k) {
  return {a.f + h * k.f, a.fp + h * k.fp, a.fpp + h * k.fpp};
}

State rk4(double beta, const State &s, double h) {
  State k1 = rhs(beta, s);
  State k2 = rhs(beta, axpy(s, 0.5 * h, k1));
  State k3 = rhs(beta, axpy(s, 0.5 * h, k2));
  State k4 = rhs(beta, axpy(s, h, k3));
  return {s.f + h / 6.0 * (k1.f + 2 * k2.f + 2 * k3.f + k4.f),
          s.fp + h / 6.0 * (k1.fp + 2 * k2.fp + 2 * k3.fp + k4.fp),
          s.fpp + h / 6.0 * (k1.fpp + 2 * k2.fpp + 2 * k3.fpp + k4.fpp)};
}

// far-field mismatch f'(xi_max) - 1; runaway trajectories are cut short
double mismatch(double beta, double s, double h, int n) {
  State st{0.0, 0.0, s};
  for (int i = 1; i < n; ++i) {
    st = rk4(beta, st, h);
    if (!std::isfinite(st.fp) || st.fp > 2.0) return 1.0;
    if (st.fp < -1.0) return -2.0;
  }
  return st.fp - 1.0;
}

} // namespace

FsProfile solve_fs(const FsParams &params) {
  params.validate();
  const int n = params.n_xi;
  const double L = params.xi_max();
  const double h = L / (n - 1);
  const double beta = params.beta;

  double lo = 0.0, hi = 3.0;
  double glo = mismatch(beta, lo, h, n);
  double ghi = mismatch(beta, hi, h, n);
  for (int widen = 0; widen < 4 && ghi < 0.0; ++widen) {
    hi *= 2.0;
    ghi = mismatch(beta, hi, h, n);
  }
  if (!(glo < 0.0 && ghi > 0.0))
    throw Error(ErrorKind::NoBracket, "far-field mismatch has no sign change");

  double s = 0.5 * (lo + hi);
  int it = 0;
  const int max_it = 200;
  for (;; ++it) {
    if (it >= max_it)
      throw Error(ErrorKind::NonConvergence, "shooting bisection cap reached");
    s = 0.5 * (lo + hi);
    double g = mismatch(beta, s, h, n);
    if (std::abs(g) < 0.1 * params.shoot_tol) break;
    if (g < 0.0) lo = s; else hi = s;
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) {
      if (std::abs(g) < params.shoot_tol) break;
      throw Error(ErrorKind::NonConvergence, "bracket collapsed above tolerance");
    }
  }

  FsProfile p;
  p.params = params;
  p.shoot_iterations = it + 1;
  p.xi.resize(n);
  p.f.resize(n);
  p.fp.resize(n);
  p.fpp.resize(n);
  p.fppp.resize(n);
  State st{0.0, 0.0, s};
  for (int i = 0; i < n; ++i) {
    if (i > 0) st = rk4(beta, st, h);
    p.xi[i] = i * h;
    p.f[i] = st.f;
    p.fp[i] = st.fp;
    p.fpp[i] = st.fpp;
    p.fppp[i] = fs_f3(beta, st.f, st.fp, st.fpp);
  }
  p.xi[n - 1] = L;
  p.f[0] = 0.0;
  p.fp[0] = 0.0;
  p.wall_shear = s;
  return p;
}

std::array<double, 3> eval_profile(const FsProfile &p, double xi) {
  const int n = static_cast<int>(p.xi.size());
  const double L = p.xi.back();
  if (xi >= L) {
    if (xi == L) return {p.f[n - 1], p.fp[n - 1], p.fpp[n - 1]};
    return {xi - p.displacement(), 1.0, 0.0};
  }
  if (xi <= 0.0) return {0.0, 0.0, p.wall_shear};
  const double h = L / (n - 1);
  int i = std::min(static_cast<int>(xi / h), n - 2);
  double t = (xi - p.xi[i]) / h;
  double t2 = t * t, t3 = t2 * t;
  double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
  double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
  auto herm = [&](const std::vector<double> &y, const std::vector<double> &dy) {
    return h00 * y[i] + h10 * h * dy[i] + h01 * y[i + 1] + h11 * h * dy[i + 1];
  };
  return {herm(p.f, p.fp), herm(p.fp, p.fpp), herm(p.fpp, p.fppp)};
}

double profile_ode_residual(const FsProfile &p) {
  double r = 0.0;
  const double beta = p.params.beta;
  for (size_t i = 1; i + 1 < p.xi.size(); ++i) {
    double h = p.xi[i + 1] - p.xi[i - 1];
    double f3 = (p.fpp[i + 1] - p.fpp[i - 1]) / h;
    double res = f3 + p.f[i] * p.fpp[i] + beta * (1.0 - p.fp[i] * p.fp[i]);
    r = std::max(r, std::abs(res));
  }
  return r;
}

void write_profile_csv(std::ostream &os, const FsProfile &p) {
  os << "# beta=" << num(p.params.beta) << " m=" << num(p.params.m)
     << " wall_shear=" << num(p.wall_shear) << "\n";
  os << "xi,f,fp,fpp\n";
  for (size_t i = 0; i < p.xi.size(); ++i)
    os << num(p.xi[i]) << ',' << num(p.f[i]) << ',' << num(p.fp[i]) << ','
       << num(p.fpp[i]) << '\n';
}

} // namespace fslab
