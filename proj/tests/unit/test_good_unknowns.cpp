#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <memory>

#include "doctest.h"
#include "fslab/errors.hpp"
#include "fslab/good_unknowns.hpp"
#include "fslab/mms.hpp"

using namespace fslab;

namespace {

const BackgroundModel &model_for(double m) {
  static std::map<double, std::unique_ptr<BackgroundModel>> cache;
  auto &p = cache[m];
  if (!p) p = std::make_unique<BackgroundModel>(solve_fs(FsParams::from_m(m)));
  return *p;
}

bool all_finite(const Vec &f) {
  for (double a : f)
    if (!std::isfinite(a)) return false;
  return true;
}

// manufactured fields d_x^k u (k = 0..2) and v on the grid of one station
struct Fields {
  std::vector<Vec> uk;
  Vec v;
};

Fields manufactured_fields(const Manufactured &ex, double x, const Vec &y) {
  Fields f;
  for (int k = 0; k <= 2; ++k) {
    Vec u(y.size());
    for (size_t j = 0; j < y.size(); ++j) u[j] = ex.u_xk(k, x, y[j]);
    f.uk.push_back(u);
  }
  f.v.resize(y.size());
  for (size_t j = 0; j < y.size(); ++j) f.v[j] = ex.v(x, y[j]);
  return f;
}

GoodUnknownStack stack_at(const Manufactured &ex, double x, const Vec &y, double eps = 0.0) {
  BackgroundFields bg = build_background(model_for(ex.m), x, y);
  Fields f = manufactured_fields(ex, x, y);
  return stack_from_fields(f.uk, f.v, bg, 1, eps);
}

// Truncated Taylor series in y at the wall. Unknown high coefficients are NaN,
// so a result that is finite did not depend on the truncation.
using Ser = std::vector<double>;
constexpr int kTerms = 30;
const double kNaN = std::numeric_limits<double>::quiet_NaN();

Ser s_add(const Ser &a, const Ser &b, double cb = 1.0) {
  Ser c(kTerms);
  for (int i = 0; i < kTerms; ++i) c[i] = a[i] + cb * b[i];
  return c;
}
Ser s_scale(const Ser &a, double s) {
  Ser c = a;
  for (double &v : c) v *= s;
  return c;
}
Ser s_mul(const Ser &a, const Ser &b) {
  Ser c(kTerms, 0.0);
  for (int i = 0; i < kTerms; ++i)
    for (int j = 0; i + j < kTerms; ++j)
      if (a[i] != 0.0 && b[j] != 0.0) c[i + j] += a[i] * b[j];
  return c;
}
Ser s_deriv(const Ser &a) {
  Ser c(kTerms, kNaN);
  for (int i = 0; i + 1 < kTerms; ++i) c[i] = (i + 1) * a[i + 1];
  return c;
}
Ser s_integ(const Ser &a) {
  Ser c(kTerms, 0.0);
  for (int i = 1; i < kTerms; ++i) c[i] = a[i - 1] / i;
  return c;
}
Ser s_divy(const Ser &a) {
  REQUIRE(std::abs(a[0]) < 1e-12);
  Ser c(kTerms, kNaN);
  for (int i = 0; i + 1 < kTerms; ++i) c[i] = a[i + 1];
  return c;
}
Ser s_div(const Ser &a, const Ser &b) {
  Ser c(kTerms);
  for (int k = 0; k < kTerms; ++k) {
    double s = a[k];
    for (int i = 0; i < k; ++i) s -= c[i] * b[k - i];
    c[k] = s / b[0];
  }
  return c;
}

struct WallOracle {
  double cc1[2], cc2[2];
};

// Compatibility residuals of the first two orders from exact wall series of the
// background and of u_IN(y) = y^2 e^{-y} at x = 1.
WallOracle wall_series_oracle(const BackgroundModel &mod, double eps) {
  auto bg_series = [&](char w, int i) {
    Ser s(kTerms);
    double fact = 1.0;
    for (int j = 0; j < kTerms; ++j) {
      if (j > 0) fact *= j;
      s[j] = mod.eval_point(mod.expr(w, i, j), 1.0, 0.0) / fact;
    }
    s[0] = (w == 'u' && i == 0) ? 0.0 : s[0];
    return s;
  };
  const Ser ub = bg_series('u', 0), ubx = bg_series('u', 1), ubxx = bg_series('u', 2);
  const Ser vb = bg_series('v', 0), vbx = bg_series('v', 1);
  const Ser uby = s_deriv(ub), ubyy = s_deriv(uby), ubyyy = s_deriv(ubyy);
  const Ser ubxy = s_deriv(ubx);
  const Ser A = s_divy(ub);
  auto over_ub = [&](const Ser &s) { return s_div(s_divy(s), A); };
  Ser press(kTerms, 0.0);
  press[0] = -mod.m(); // d_x p_E at x = 1

  Ser u0(kTerms, 0.0);
  double fact = 1.0;
  for (int i = 0; i + 2 < kTerms; ++i) {
    if (i > 0) fact *= i;
    u0[i + 2] = (i % 2 ? -1.0 : 1.0) / fact;
  }
  auto good = [&](const Ser &u) { return over_ub(s_add(u, s_mul(uby, over_ub(s_integ(u))), -1.0)); };
  auto lin = [&](const Ser &u, const Ser &U) {
    Ser out = s_deriv(s_deriv(u));
    out = s_add(out, s_mul(s_mul(ub, vb), s_deriv(U)), -1.0);
    out = s_add(out, s_mul(ubyyy, s_integ(U)), -1.0);
    return s_add(out, s_mul(s_add(ubyy, press, -1.0), U), -2.0);
  };
  const Ser r = over_ub(ubx), ry = s_deriv(r);
  const Ser U0 = good(u0), u0y = s_deriv(u0);

  Ser u1(kTerms, 0.0), B0;
  for (int it = 0; it < 80; ++it) {
    Ser v0 = s_scale(s_integ(u1), -1.0);
    Ser G0 = s_scale(s_add(s_mul(u0, u1), s_mul(u0y, v0)), -eps);
    B0 = s_add(G0, lin(u0, U0));
    Ser N = B0;
    N[0] = N[1] = 0.0;
    Ser U1 = s_add(s_add(over_ub(over_ub(N)), s_mul(r, U0)), s_mul(ry, s_integ(U0)));
    u1 = s_add(s_mul(ub, U1), s_mul(uby, s_integ(U1)));
  }
  const Ser U1 = good(u1), v0 = s_scale(s_integ(u1), -1.0);
  Ser F1 = s_add(s_mul(ubx, u1), s_mul(ubxx, u0));
  F1 = s_add(F1, s_mul(vbx, u0y));
  F1 = s_scale(s_add(F1, s_mul(ubxy, v0)), -1.0);
  // u^(2) enters G_1 only at O(y^3)
  Ser G1 = s_add(F1, s_add(s_mul(u1, u1), s_mul(s_deriv(u1), v0)), -eps);
  Ser B1 = s_add(G1, lin(u1, U1));
  return {{B0[0], B0[1]}, {B1[0], B1[1]}};
}

} // namespace

TEST_CASE("zero fields give a zero stack") {
  Vec y = default_station_grid(0.0, 1.0);
  BackgroundFields bg = build_background(model_for(0.0), 1.0, y);
  std::vector<Vec> uk(3, Vec(y.size(), 0.0));
  auto st = stack_from_fields(uk, Vec(y.size(), 0.0), bg, 1, 1e-2);
  for (int k = 0; k <= 1; ++k) {
    CHECK(max_abs(st.U[k]) == 0.0);
    CHECK(max_abs(st.Q[k]) == 0.0);
    CHECK(max_abs(st.calU[k]) == 0.0);
  }
  CHECK(max_abs(commutator_forcing(st, bg, 1).forcing) == 0.0);
  CHECK(max_abs(source_G(st, bg, 1)) == 0.0);
}

TEST_CASE("Rayleigh map inverts the good unknown") {
  Manufactured ex{0.5, 0.0};
  const double x = 2.0;
  Vec y = GeometricGrid::fit(2e-4, 1.01, 14.0).points();
  BackgroundFields bg = build_background(model_for(0.5), x, y);
  Fields f = manufactured_fields(ex, x, y);
  auto st = stack_from_fields(f.uk, f.v, bg, 1, 0.0);
  for (int k = 0; k <= 1; ++k) {
    CHECK(st.Q[k][0] == 0.0);
    CHECK(all_finite(st.U[k]));
    double err = 0.0;
    for (size_t j = 0; j < y.size(); ++j)
      err = std::max(err, std::abs(bg.u_bar[j] * st.U[k][j] + bg.du_bar_dy[1][j] * st.Q[k][j] -
                                   st.uk[k][j]));
    CHECK(err <= 1e-8 * max_abs(st.uk[k]));
    Vec back = rayleigh(bg, st.U[k]);
    double e2 = 0.0;
    for (size_t j = 0; j < y.size(); ++j) e2 = std::max(e2, std::abs(back[j] - st.uk[k][j]));
    CHECK(e2 <= 1e-4 * max_abs(st.uk[k]));
  }
}

TEST_CASE("quasilinear unknowns reduce to the linear ones") {
  Manufactured ex{0.0, 0.0};
  Vec y = default_station_grid(0.0, 1.5);
  auto st0 = stack_at(ex, 1.5, y, 0.0);
  for (size_t j = 0; j < y.size(); ++j) CHECK(st0.calU[0][j] == st0.U[0][j]);
  double d[3];
  const double eps[3] = {1e-2, 1e-3, 1e-4};
  for (int i = 0; i < 3; ++i) {
    auto st = stack_at(ex, 1.5, y, eps[i]);
    double e = 0.0;
    for (size_t j = 0; j < y.size(); ++j) e = std::max(e, std::abs(st.calU[0][j] - st.U[0][j]));
    d[i] = e;
  }
  CHECK(std::log10(d[0] / d[1]) == doctest::Approx(1.0).epsilon(0.1));
  CHECK(std::log10(d[1] / d[2]) == doctest::Approx(1.0).epsilon(0.1));
}

TEST_CASE("x-derivative identities hold to stencil order") {
  for (double m : {0.0, 1.0}) {
    CAPTURE(m);
    Manufactured ex{m, 0.0};
    const double x = 2.0;
    const double ymax = 12.0 * std::pow(x, 0.5 * (1.0 - m));
    // Q shift, U shift (k = 0, 1), its y-derivative, and the d_x(u_y/u) form
    auto errors = [&](const GeometricGrid &g, double h) {
      Vec y = g.points();
      BackgroundFields bg = build_background(model_for(m), x, y);
      Fields f = manufactured_fields(ex, x, y);
      auto st = stack_from_fields(f.uk, f.v, bg, 2, 0.0);
      auto sp = stack_at(ex, x + h, y), sm = stack_at(ex, x - h, y);
      auto r = shift_ratio(bg);
      DiffOp D1(y, 1, 5);
      std::array<double, 5> e{};
      for (size_t j = 1; j < y.size(); ++j) {
        if (bg.eta[j] > 8.0) break;
        double Qx = (sp.Q[0][j] - sm.Q[0][j]) / (2 * h);
        double Ux0 = (sp.U[0][j] - sm.U[0][j]) / (2 * h);
        double Ux1 = (sp.U[1][j] - sm.U[1][j]) / (2 * h);
        e[0] = std::max(e[0], std::abs(st.Q[1][j] - Qx - r.r[j] * st.Q[0][j]));
        e[1] = std::max(e[1], std::abs(st.U[1][j] - Ux0 - r.r[j] * st.U[0][j] -
                                       r.r_y[j] * st.Q[0][j]));
        e[2] = std::max(e[2], std::abs(st.U[2][j] - Ux1 - r.r[j] * st.U[1][j] -
                                       r.r_y[j] * st.Q[1][j]));
        const double ub = bg.u_bar[j];
        double dx_ratio = (bg.u(1, 1)[j] * ub - bg.u(0, 1)[j] * bg.u(1, 0)[j]) / (ub * ub);
        e[4] = std::max(e[4], std::abs(st.U[1][j] - Ux0 - r.r[j] * st.U[0][j] -
                                       dx_ratio * st.Q[0][j]));
      }
      Vec Uy0 = D1.apply(st.U[0]), Uy1 = D1.apply(st.U[1]);
      Vec Uyp = D1.apply(sp.U[0]), Uym = D1.apply(sm.U[0]);
      for (size_t j = 1; j < y.size(); ++j) {
        if (bg.eta[j] > 8.0) break;
        double Uxy = (Uyp[j] - Uym[j]) / (2 * h);
        e[3] = std::max(e[3], std::abs(Uy1[j] - Uxy - r.r[j] * Uy0[j] - 2 * r.r_y[j] * st.U[0][j] -
                                       r.r_yy[j] * st.Q[0][j]));
      }
      return e;
    };
    GeometricGrid g = GeometricGrid::fit(4e-3, 1.04, ymax);
    // central differences in x: halving h (and refining y) cuts the error by ~4
    auto e1 = errors(g, 8e-3), e2 = errors(g.refined(), 4e-3);
    for (int i = 0; i < 5; ++i) {
      CAPTURE(i);
      CHECK(e2[i] < 1e-3);
      CHECK(e1[i] / e2[i] >= 3.0);
    }
  }
}

TEST_CASE("commutator forcing: binomial weights and the first order") {
  Vec y = default_station_grid(1.0, 2.0);
  BackgroundFields bg = build_background(model_for(1.0), 2.0, y);
  Vec f(y.size()), zero(y.size(), 0.0);
  for (size_t j = 0; j < y.size(); ++j) f[j] = bg.eta[j] * std::exp(-bg.eta[j]);

  auto a = stack_from_fields({f, zero, zero}, zero, bg, 2, 0.0);
  auto b = stack_from_fields({zero, f, zero}, zero, bg, 2, 0.0);
  auto ta = commutator_forcing(a, bg, 2), tb = commutator_forcing(b, bg, 2);
  for (size_t j = 0; j < y.size(); ++j) {
    CHECK(ta.sum[1][j] == doctest::Approx(bg.u(3, 0)[j] * f[j]).epsilon(1e-14));
    CHECK(tb.sum[1][j] == doctest::Approx(2.0 * bg.u(2, 0)[j] * f[j]).epsilon(1e-14));
  }

  Manufactured ex{1.0, 0.0};
  Fields mf = manufactured_fields(ex, 2.0, y);
  auto st = stack_from_fields(mf.uk, mf.v, bg, 1, 0.0);
  auto t = commutator_forcing(st, bg, 1);
  Vec q = quadratic_lower(st, 1);
  const double dy = 1e-6;
  double err = 0.0, errq = 0.0, scale = max_abs(t.forcing), scaleq = max_abs(q);
  for (size_t j = 1; j < y.size(); ++j) {
    double u0y = (ex.u(2.0, y[j] + dy) - ex.u(2.0, y[j] - dy)) / (2 * dy);
    double u1y = (ex.u_x(2.0, y[j] + dy) - ex.u_x(2.0, y[j] - dy)) / (2 * dy);
    double hand = -(bg.u(1, 0)[j] * mf.uk[1][j] + bg.u(2, 0)[j] * mf.uk[0][j] +
                    bg.dv[1][j] * u0y + bg.u(1, 1)[j] * mf.v[j]);
    err = std::max(err, std::abs(t.forcing[j] - hand));
    double qh = mf.uk[1][j] * mf.uk[1][j] + u1y * mf.v[j];
    errq = std::max(errq, std::abs(q[j] - qh));
  }
  CHECK(err <= 1e-6 * scale);
  CHECK(errq <= 1e-6 * scaleq);
}

TEST_CASE("degenerate background and missing orders are rejected") {
  Vec y = default_station_grid(0.0, 1.0);
  BackgroundFields bg = build_background(model_for(0.0), 1.0, y);
  std::vector<Vec> uk(2, Vec(y.size(), 0.0));
  auto st = stack_from_fields(uk, Vec(y.size(), 0.0), bg, 1, 0.0);
  CHECK_THROWS_AS(source_G(st, bg, 1), Error);
  BackgroundFields flat = bg;
  flat.wall_shear = 0.0;
  try {
    stack_from_fields(uk, Vec(y.size(), 0.0), flat, 1, 0.0);
    FAIL("expected DegenerateBackground");
  } catch (const Error &e) {
    CHECK(e.kind() == ErrorKind::DegenerateBackground);
  }
  try {
    stack_csv(st, 3);
    FAIL("expected MissingOrder");
  } catch (const Error &e) {
    CHECK(e.kind() == ErrorKind::MissingOrder);
  }
}

TEST_CASE("stack from a march snapshot") {
  MarchConfig cfg;
  cfg.m = 0.0;
  cfg.x_end = 1.2;
  cfg.dx_init = 2e-3;
  Vec y = march_grid(cfg);
  auto s = init_perturbation(cfg, y, gaussian_data(y, 1.0, 1.0));
  march_to(s, cfg.x_end, cfg, coefficient_provider(model_for(0.0), y));
  BackgroundFields bg = build_background(model_for(0.0), s.x, y);
  CHECK(available_order(s) == 5);
  auto st = build_stack(s, bg, 4, cfg.epsilon);
  CHECK(st.has_u(5));
  for (int k = 0; k <= 4; ++k) {
    CHECK(all_finite(st.U[k]));
    CHECK(all_finite(st.calU[k]));
  }
  s.history.resize(3);
  CHECK_THROWS_AS(build_stack(s, bg, 3, cfg.epsilon), Error);

  std::string csv = stack_csv(st, 1);
  CHECK(csv.rfind("y,Q,U,calQ,calU\n", 0) == 0);
  size_t lines = 0;
  for (char c : csv) lines += c == '\n';
  CHECK(lines == y.size() + 1);
}

TEST_CASE("Cauchy data: wall residuals match the Taylor series oracle") {
  for (double m : {0.0, 0.5, 1.0}) {
    CAPTURE(m);
    const auto &mod = model_for(m);
    auto oracle = wall_series_oracle(mod, 1e-2);
    CHECK(oracle.cc1[0] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(oracle.cc1[1] == doctest::Approx(-6.0).epsilon(1e-12));
    REQUIRE(std::isfinite(oracle.cc2[0]));
    REQUIRE(std::isfinite(oracle.cc2[1]));

    Vec y = default_station_grid(m, 1.0);
    BackgroundFields bg = build_background(mod, 1.0, y);
    Vec u(y.size());
    for (size_t j = 0; j < y.size(); ++j) u[j] = y[j] * y[j] * std::exp(-y[j]);
    auto rep = iterate_cauchy_data(u, bg, 2);
    REQUIRE(rep.cc1.size() == 2);
    CHECK(rep.cc0_ok);
    CHECK(rep.cc1[0] == doctest::Approx(oracle.cc1[0]).epsilon(1e-4));
    CHECK(rep.cc2[0] == doctest::Approx(oracle.cc1[1]).epsilon(1e-4));
    CHECK(rep.cc1[1] == doctest::Approx(oracle.cc2[0]).epsilon(1e-3));
    CHECK(std::abs(rep.cc2[1] - oracle.cc2[1]) <= 0.1);
    for (const auto &U : rep.data_stack) CHECK(all_finite(U));
  }
}

TEST_CASE("Cauchy data: zero and incompatible inputs") {
  Vec y = default_station_grid(0.0, 1.0);
  BackgroundFields bg = build_background(model_for(0.0), 1.0, y);
  auto rep = iterate_cauchy_data(Vec(y.size(), 0.0), bg, 3);
  CHECK(rep.max_residual() == 0.0);
  CHECK(rep.pass(0.0));
  Vec u = gaussian_data(y, 1.0, 1.0);
  u[0] = 1e-6;
  try {
    iterate_cauchy_data(u, bg, 1);
    FAIL("expected IncompatibleData");
  } catch (const Error &e) {
    CHECK(e.kind() == ErrorKind::IncompatibleData);
  }
  CHECK_THROWS_AS(iterate_cauchy_data(Vec(y.size(), 0.0), bg, 5), Error);
}

TEST_CASE("projection onto compatible data") {
  for (double m : {0.0, 1.0}) {
    CAPTURE(m);
    Vec y = default_station_grid(m, 1.0);
    BackgroundFields bg = build_background(model_for(m), 1.0, y);
    Vec u(y.size());
    for (size_t j = 0; j < y.size(); ++j) u[j] = y[j] * std::exp(-y[j] * y[j]);
    ProjectionOptions opt;
    CHECK_FALSE(iterate_cauchy_data(u, bg, 2).pass(opt.tol));
    auto p = project_compatible(u, bg, 2, opt);
    CHECK(p.coeffs.size() == 4);
    CHECK(iterate_cauchy_data(p.u, bg, 2).pass(opt.tol));
    CHECK(p.correction_ratio <= 1e-2);

    auto again = project_compatible(p.u, bg, 2, opt);
    CHECK(again.newton_iters == 0);
    for (double c : again.coeffs) CHECK(c == 0.0);
    CHECK(again.u == p.u);
  }
}
