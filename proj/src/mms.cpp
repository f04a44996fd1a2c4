#include "fslab/mms.hpp"

#include <algorithm>
#include <cmath>

namespace fslab {

namespace {

double g(double e) { return e * std::exp(-e); }
double gp(double e) { return (1.0 - e) * std::exp(-e); }
double gpp(double e) { return (e - 2.0) * std::exp(-e); }
double G(double e) { return 1.0 - (1.0 + e) * std::exp(-e); }

} // namespace

double Manufactured::u(double x, double y) const {
  return g(y / std::pow(x, q())) / x;
}

double Manufactured::v(double x, double y) const {
  const double e = y / std::pow(x, q());
  return std::pow(x, q() - 2.0) * ((1.0 - q()) * G(e) + q() * e * g(e));
}

double Manufactured::u_x(double x, double y) const { return u_xk(1, x, y); }

double Manufactured::u_xk(int k, double x, double y) const {
  const double e = y / std::pow(x, q()), a = q();
  const double ex = std::exp(-e);
  // x^{-1} e^{-e} e, differentiated along d_x e = -a e / x
  if (k == 0) return e * ex / x;
  if (k == 1) return -(g(e) + a * e * gp(e)) / (x * x);
  // d_x of -(g + a e g') x^{-2}
  const double h = g(e) + a * e * gp(e);
  const double hp = gp(e) + a * gp(e) + a * e * gpp(e);
  return 2.0 * h / (x * x * x) + hp * a * e / (x * x * x);
}

Vec Manufactured::source(const MarchCoefficients &c, double x, const Vec &y) const {
  Vec F(y.size());
  const double a = q(), eps = epsilon;
  for (size_t j = 0; j < y.size(); ++j) {
    const double e = y[j] / std::pow(x, a);
    const double uu = g(e) / x, ux = u_x(x, y[j]), vv = v(x, y[j]);
    const double uy = gp(e) * std::pow(x, -1.0 - a), uyy = gpp(e) * std::pow(x, -1.0 - 2.0 * a);
    F[j] = (c.u_bar[j] + eps * uu) * ux + (c.v_bar[j] + eps * vv) * uy + c.u_bar_x[j] * uu +
           c.u_bar_y[j] * vv - uyy;
  }
  return F;
}

double manufactured_error(const BackgroundModel &model, double epsilon, Scheme scheme,
                          double dx, const GeometricGrid &grid, double x_end) {
  MarchConfig cfg;
  cfg.m = model.m();
  cfg.epsilon = epsilon;
  cfg.x_end = x_end;
  cfg.dx_init = dx;
  cfg.dx_max = 1.0;
  cfg.scheme = scheme;
  cfg.nonlinear_tol = 1e-13;
  const Vec y = grid.points();
  Manufactured ex{model.m(), epsilon};
  Vec u0(y.size());
  for (size_t j = 0; j < y.size(); ++j) u0[j] = ex.u(1.0, y[j]);
  auto s = init_perturbation(cfg, y, u0);
  for (size_t j = 0; j < y.size(); ++j) s.v[j] = ex.v(1.0, y[j]);
  auto prov = coefficient_provider(model, y);
  StepOptions opt;
  opt.far_field = [&](double x) { return ex.u(x, y.back()); };
  opt.source = [&](double x, const Vec &yy) { return ex.source(prov(x), x, yy); };
  march_to(s, x_end, cfg, prov, opt);
  double err = 0.0;
  for (size_t j = 0; j < y.size(); ++j) err = std::max(err, std::abs(s.u[j] - ex.u(x_end, y[j])));
  return err;
}

} // namespace fslab
