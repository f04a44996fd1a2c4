#include <boost/numeric/odeint.hpp>
#include <chrono>
#include <cmath>
#include <sstream>

#include "doctest.h"
#include "fslab/errors.hpp"
#include "fslab/fs_profile.hpp"

using namespace fslab;

namespace {

// Independent oracle: adaptive Dormand-Prince shooting with bisection on s.
double oracle_wall_shear(double beta, double eta_max) {
  using namespace boost::numeric::odeint;
  using S = std::array<double, 3>;
  const double m = beta / (2.0 - beta);
  const double L = std::sqrt(0.5 * (m + 1.0)) * eta_max;
  auto g = [&](double s) {
    S st{0.0, 0.0, s};
    auto sys = [&](const S &y, S &dy, double) {
      dy[0] = y[1];
      dy[1] = y[2];
      dy[2] = -y[0] * y[2] - beta * (1.0 - y[1] * y[1]);
    };
    auto stepper = make_controlled<runge_kutta_dopri5<S>>(1e-13, 1e-13);
    // integrate in short chunks so runaway trajectories stop early
    for (double t = 0.0; t < L; t += 0.05) {
      integrate_adaptive(stepper, sys, st, t, std::min(t + 0.05, L), 1e-3);
      if (st[1] > 2.0) return 1.0;
      if (st[1] < -1.0) return -2.0;
    }
    return st[1] - 1.0;
  };
  double a = 0.3, b = 1.5, ga = g(a);
  for (int i = 0; i < 100 && std::abs(b - a) > 1e-14; ++i) {
    double c = 0.5 * (a + b), gc = g(c);
    if ((gc < 0) == (ga < 0)) { a = c; ga = gc; } else { b = c; }
  }
  return 0.5 * (a + b);
}

} // namespace

TEST_CASE("wall shear oracle values") {
  CHECK(std::abs(oracle_wall_shear(0.0, 15.0) - 0.46960) < 1e-4);
  CHECK(std::abs(oracle_wall_shear(1.0, 15.0) - 1.23259) < 1e-4);
}

TEST_CASE("solve_fs matches the oracle") {
  for (double beta : {0.0, 1.0}) {
    auto t0 = std::chrono::steady_clock::now();
    auto p = solve_fs(FsParams::from_beta(beta));
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    double expect = beta == 0.0 ? 0.46960 : 1.23259;
    CHECK(std::abs(p.wall_shear - expect) < 1e-4);
    CHECK(std::abs(p.wall_shear - oracle_wall_shear(beta, 15.0)) < 1e-7);
    CHECK(std::abs(p.fp.back() - 1.0) <= 1e-8);
    CHECK(secs < 1.0);
  }
}

TEST_CASE("profile boundary values and evaluation") {
  auto p = solve_fs(FsParams::from_beta(0.5));
  CHECK(p.f[0] == 0.0);
  CHECK(p.fp[0] == 0.0);
  CHECK(p.wall_shear > 0.0);
  auto z = eval_profile(p, 0.0);
  CHECK(z[0] == 0.0);
  CHECK(z[1] == 0.0);
  CHECK(z[2] == p.wall_shear);
  auto e = eval_profile(p, p.xi_end());
  CHECK(e[0] == p.f.back());
  CHECK(e[1] == p.fp.back());
  auto far = eval_profile(p, 2.0 * p.xi_end());
  CHECK(far[1] == 1.0);
  CHECK(far[2] == 0.0);
  CHECK(far[0] == doctest::Approx(2.0 * p.xi_end() - p.displacement()));
  // interior node exactness
  auto mid = eval_profile(p, p.xi[1234]);
  CHECK(mid[1] == doctest::Approx(p.fp[1234]).epsilon(1e-14));
}

TEST_CASE("profile invariants across beta") {
  for (double beta : {0.0, 0.25, 0.5, 1.0, 4.0 / 3.0, 1.6}) {
    auto p = solve_fs(FsParams::from_beta(beta));
    double h = p.xi[1] - p.xi[0];
    CHECK(profile_ode_residual(p) <= 10.0 * h * h);
    bool mono = true, convex = true;
    bool reached = false;
    for (size_t i = 1; i < p.xi.size(); ++i) {
      if (p.fp[i] < p.fp[i - 1] - p.params.shoot_tol) mono = false;
      if (!reached && p.fp[i] >= 1.0 - 1e-6) reached = true;
      if (!reached && !(p.fpp[i] > 0.0)) convex = false;
    }
    CHECK(mono);
    CHECK(convex);
    CHECK(std::abs(p.fp.back() - 1.0) <= p.params.shoot_tol);
  }
}

TEST_CASE("grid refinement of the wall shear") {
  // RK4 is fourth order, so the ratio of successive differences is near 16;
  // the contract only requires at least second order.
  double s[3];
  int n = 201;
  for (int i = 0; i < 3; ++i, n = 2 * n - 1) {
    FsParams q = FsParams::from_beta(1.0);
    q.n_xi = n;
    s[i] = solve_fs(q).wall_shear;
  }
  double ratio = (s[0] - s[1]) / (s[1] - s[2]);
  CHECK(ratio >= 3.0);
  CHECK(ratio < 20.0);
}

TEST_CASE("parameter validation") {
  for (double m : {0.0, 0.5, 1.0, 2.0, 7.0}) {
    auto p = FsParams::from_m(m);
    CHECK(m_from_beta(p.beta) == doctest::Approx(m).epsilon(1e-14));
  }
  CHECK_THROWS_AS(FsParams::from_beta(2.0), Error);
  CHECK_THROWS_AS(FsParams::from_beta(-0.1), Error);
  FsParams q = FsParams::from_beta(0.0);
  q.eta_max = 5.0;
  CHECK_THROWS_AS(solve_fs(q), Error);
  q = FsParams::from_beta(0.0);
  q.n_xi = 100;
  CHECK_THROWS_AS(solve_fs(q), Error);
}

TEST_CASE("profile csv layout") {
  FsParams q = FsParams::from_beta(0.0);
  q.n_xi = 201;
  auto p = solve_fs(q);
  std::ostringstream os;
  write_profile_csv(os, p);
  std::string s = os.str();
  CHECK(s.rfind("# beta=0 m=0 wall_shear=", 0) == 0);
  int lines = 0;
  for (char c : s) lines += c == '\n';
  CHECK(lines == 201 + 2);
}

TEST_CASE("higher profile derivatives follow the ODE") {
  auto p = solve_fs(FsParams::from_beta(1.0));
  // finite differences of the stored f''' against the closed-form f''''
  size_t i = 800;
  double h = p.xi[1] - p.xi[0];
  double fd = (p.fppp[i + 1] - p.fppp[i - 1]) / (2 * h);
  CHECK(fd == doctest::Approx(fs_f4(1.0, p.f[i], p.fp[i], p.fpp[i])).epsilon(1e-5));
  double f4p = fs_f4(1.0, p.f[i + 1], p.fp[i + 1], p.fpp[i + 1]);
  double f4m = fs_f4(1.0, p.f[i - 1], p.fp[i - 1], p.fpp[i - 1]);
  CHECK((f4p - f4m) / (2 * h) ==
        doctest::Approx(fs_f5(1.0, p.f[i], p.fp[i], p.fpp[i])).epsilon(1e-5));
}
