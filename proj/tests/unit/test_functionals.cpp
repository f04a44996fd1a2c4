#include <cmath>
#include <map>
#include <memory>
#include <numbers>

#include "doctest.h"
#include "fslab/errors.hpp"
#include "fslab/functionals.hpp"
#include "json.hpp"

using namespace fslab;

namespace {

const BackgroundModel &model_for(double m) {
  static std::map<double, std::unique_ptr<BackgroundModel>> cache;
  auto &p = cache[m];
  if (!p) p = std::make_unique<BackgroundModel>(solve_fs(FsParams::from_m(m)));
  return *p;
}

Vec uniform(double top, double h) {
  Vec y;
  for (int j = 0; j * h <= top + 1e-12; ++j) y.push_back(j * h);
  return y;
}

template <class F> Vec sample(const Vec &y, F f) {
  Vec out(y.size());
  for (size_t j = 0; j < y.size(); ++j) out[j] = f(y[j]);
  return out;
}

// composite Simpson on [0, top] with n (even) panels
template <class F> double simpson(F f, double top, int n = 1000000) {
  const double h = top / n;
  double s = f(0.0) + f(top);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(i * h);
  return s * h / 3.0;
}

// Linear stack (epsilon = 0) with prescribed good unknowns U_k.
GoodUnknownStack stack_of(const BackgroundFields &bg, const std::vector<Vec> &U) {
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

std::vector<Vec> gaussians(const BackgroundFields &bg, int K) {
  std::vector<Vec> U;
  for (int k = 0; k <= K; ++k)
    U.push_back(sample(bg.eta, [k](double e) { return std::pow(1.0 + e, k) * std::exp(-e * e); }));
  return U;
}

} // namespace

TEST_CASE("zero stack gives zero functionals") {
  const auto bg = build_background(model_for(0.5), 2.0, default_station_grid(0.5, 2.0));
  Vec z(bg.y.size(), 0.0);
  auto r = evaluate_all(stack_of(bg, {z, z, z}), bg, WeightSet::ladder(0.5));
  for (const auto &[name, v] : r.entries())
    if (name != "x") CHECK_MESSAGE(v == 0.0, name);
}

TEST_CASE("E_00 of a Gaussian against a reference quadrature") {
  const auto &mod = model_for(0.0);
  const auto bg = build_background(mod, 1.0, uniform(12.0, 1e-3));
  const Vec U = sample(bg.eta, [](double e) { return std::exp(-e * e); });
  auto r = evaluate_all(stack_of(bg, {U}), bg, WeightSet::ladder(0.5));
  const auto ue = mod.expr('u', 0, 0);
  const double ref = simpson(
      [&](double y) {
        double u = mod.eval_point(ue, 1.0, y);
        return u * u * std::exp(-2.0 * y * y);
      },
      12.0);
  CHECK(std::abs(r.E[0][0] - ref) <= 1e-8 * ref);
  CHECK(r.tail_ratio < 1e-12);
  CHECK(r.CKP[0][0] == 0.0);
  CHECK(ck_pressure(stack_of(bg, {U}), bg, 0, 3) == 0.0);
}

TEST_CASE("pressure term at m = 1") {
  const auto bg = build_background(model_for(1.0), 1.0, uniform(12.0, 1e-3));
  const Vec U = sample(bg.eta, [](double e) { return std::exp(-e * e); });
  const auto st = stack_of(bg, {U});
  auto r = evaluate_all(st, bg, WeightSet::ladder(0.5));
  // -p'(1) = 1, int exp(-2y^2) = sqrt(pi/8)
  const double ref = std::sqrt(std::numbers::pi / 8.0);
  CHECK(r.CKP[0][0] > 0.0);
  CHECK(std::abs(r.CKP[0][0] - ref) <= 1e-9 * ref);
  CHECK(ck_pressure(st, bg, 0, 4) == doctest::Approx(r.CKP[0][4]).epsilon(1e-12));
  CHECK(r.CKPhat[0][4] > 1.5 * r.CKP[0][4]);
  CHECK_THROWS_AS(ck_pressure(st, bg, 1, 0), Error);
}

TEST_CASE("alpha and gamma") {
  const auto &mod = model_for(0.0);
  const auto bg = build_background(mod, 1.0, uniform(20.0, 1e-3));
  SUBCASE("a multiple of the background has none") {
    Vec u = bg.u_bar;
    for (double &a : u) a *= 0.3;
    auto ag = alpha_gamma(u, bg);
    CHECK(std::abs(ag.alpha) < 1e-12);
    CHECK(std::abs(ag.gamma) < 1e-12);
  }
  SUBCASE("u = u_bar eta exp(-eta)") {
    Vec u(bg.y.size());
    for (size_t j = 0; j < u.size(); ++j) u[j] = bg.u_bar[j] * bg.eta[j] * std::exp(-bg.eta[j]);
    auto ag = alpha_gamma(u, bg, 20.0);
    const auto ue = mod.expr('u', 0, 0);
    const double a = simpson(
        [](double y) {
          double r1 = (1.0 - y) * std::exp(-y), w = 1.0 + y * y;
          return r1 * r1 * w * w;
        },
        20.0);
    const double g = simpson(
        [&](double y) {
          double r2 = (y - 2.0) * std::exp(-y), w = 1.0 + y * y, ub = mod.eval_point(ue, 1.0, y);
          return ub * ub * r2 * r2 * w * w;
        },
        20.0);
    CHECK(ag.alpha == doctest::Approx(a).epsilon(1e-6));
    CHECK(ag.gamma == doctest::Approx(g).epsilon(1e-6));
  }
}

TEST_CASE("functional invariants") {
  for (double m : {0.0, 0.5, 1.0}) {
    CAPTURE(m);
    const double x = 3.0;
    const auto bg = build_background(model_for(m), x, default_station_grid(m, x));
    const auto U = gaussians(bg, 2);
    const auto w = WeightSet::ladder(0.5);
    auto r = evaluate_all(stack_of(bg, U), bg, w);

    SUBCASE("doubling the data scales by four") {
      auto U2 = U;
      for (auto &f : U2)
        for (double &a : f) a *= 2.0;
      auto r2 = evaluate_all(stack_of(bg, U2), bg, w);
      auto e1 = r.entries(), e2 = r2.entries();
      REQUIRE(e1.size() == e2.size());
      for (size_t i = 0; i < e1.size(); ++i) {
        const auto &name = e1[i].first;
        if (name == "x" || name == "alpha" || name == "gamma" || name == "tail_ratio") continue;
        CHECK_MESSAGE(e2[i].second == doctest::Approx(4.0 * e1[i].second).epsilon(1e-12), name);
      }
    }
    SUBCASE("CK is E / (100 x)") {
      for (int k = 0; k <= 2; ++k)
        for (int n = 0; n <= kTopWeight; ++n)
          CHECK(r.E[k][n] == doctest::Approx(100.0 * x * r.CK[k][n]).epsilon(1e-13));
    }
    SUBCASE("monotone in the weight index, and hats dominate") {
      for (int k = 0; k <= 2; ++k)
        for (int n = 0; n < kTopWeight; ++n) {
          CHECK(r.E[k][n + 1] >= r.E[k][n]);
          CHECK(r.D[k][n + 1] >= r.D[k][n]);
          CHECK(r.Ehat[k][n] >= r.E[k][n]);
          CHECK(r.Dhat[k][n] >= r.D[k][n]);
        }
      for (int k = 0; k < 2; ++k)
        for (int n = 0; n < kTopWeight; ++n) {
          CHECK(r.EY[k][n + 1] >= r.EY[k][n]);
          CHECK(r.DZ[k][n + 1] >= r.DZ[k][n]);
        }
    }
    SUBCASE("aggregates") {
      for (int k = 0; k < 2; ++k) {
        CHECK(r.I_le_half[k] >= r.I_le[k]);
        CHECK(r.I_le[k + 1] >= r.I_le_half[k]);
        CHECK(r.I_hat_half[k] >= r.I_le_half[k]);
        CHECK(r.J_hat_half[k] >= r.I_hat_half[k]);
      }
      for (int k = 0; k <= 2; ++k) CHECK(r.J_hat[k] >= r.I_hat[k]);
    }
    SUBCASE("quasilinear level equals the linear one at epsilon = 0") {
      CHECK(r.Ebar == doctest::Approx(r.E[2][0]).epsilon(1e-13));
      CHECK(r.Dbar == doctest::Approx(r.D[2][0]).epsilon(1e-13));
      CHECK(r.CKbar == doctest::Approx(r.CK[2][0]).epsilon(1e-13));
      CHECK(r.Bbar == doctest::Approx(r.B[2]).epsilon(1e-13));
    }
    SUBCASE("no sources without the next order") { CHECK(r.s_max == -1); }
  }
}

TEST_CASE("weights") {
  auto w = WeightSet::ladder(0.6);
  CHECK_NOTHROW(w.validate());
  CHECK(w.sigma.size() == 6);
  CHECK(w.sigma_half.size() == 5);
  for (int k = 0; k < kTopOrder; ++k) {
    CHECK(w.sigma[k] > w.sigma_half[k]);
    CHECK(w.sigma_half[k] > w.sigma[k + 1]);
  }
  CHECK_THROWS_AS(WeightSet::ladder(1.0), Error);
  CHECK_THROWS_AS(WeightSet::ladder(0.0), Error);
  auto bad = w;
  bad.sigma_half[2] = bad.sigma[2];
  CHECK_THROWS_AS(bad.validate(), Error);
  try {
    bad.validate();
  } catch (const Error &e) {
    CHECK(e.kind() == ErrorKind::BadWeight);
  }
  const auto bg = build_background(model_for(0.0), 1.0, default_station_grid(0.0, 1.0));
  CHECK_THROWS_AS(evaluate_all(stack_of(bg, gaussians(bg, 0)), bg, bad), Error);
}

TEST_CASE("sigma calibration") {
  std::vector<FunctionalReport> reps;
  for (int i = 0; i < 20; ++i) {
    const double x = 1.0 + 0.5 * i;
    const auto bg = build_background(model_for(0.0), x, default_station_grid(0.0, 1.0));
    auto U = gaussians(bg, 1);
    for (auto &f : U)
      for (double &a : f) a *= std::pow(x, -3.0);
    reps.push_back(evaluate_all(stack_of(bg, U), bg, WeightSet::ladder(0.5)));
  }
  auto c = calibrate_sigma(reps, {0.3, 0.5, 0.7});
  CHECK(c.ok);
  CHECK(c.violations == 0);
  CHECK(c.stations == 19);
  CHECK_NOTHROW(c.weights.validate());

  auto j = nlohmann::json::parse(weights_json(c));
  CHECK(j["ok"].get<bool>());
  CHECK(j["sigma"].size() == 6);
  CHECK(j["sigma_half"].size() == 5);

  // growing energies are flagged
  std::reverse(reps.begin(), reps.end());
  for (int i = 0; i < 20; ++i) reps[i].x = 1.0 + i;
  auto bad = calibrate_sigma(reps, {0.5});
  CHECK_FALSE(bad.ok);
  CHECK(bad.violations == 19);

  reps.pop_back();
  CHECK_THROWS_AS(calibrate_sigma(reps, {0.5}), Error);
  try {
    calibrate_sigma(reps, {0.5});
  } catch (const Error &e) {
    CHECK(e.kind() == ErrorKind::InsufficientStations);
  }
}

TEST_CASE("report table") {
  const auto bg = build_background(model_for(0.5), 2.0, default_station_grid(0.5, 2.0));
  auto r = evaluate_all(stack_of(bg, gaussians(bg, 1)), bg, WeightSet::ladder(0.5));
  const std::string csv = reports_csv({r, r});
  size_t lines = 0;
  for (char ch : csv) lines += ch == '\n';
  CHECK(lines == 3);
  CHECK(csv.rfind("x,E_0_0,", 0) == 0);
  auto e = r.entries();
  size_t commas = 0;
  for (char ch : csv.substr(0, csv.find('\n'))) commas += ch == ',';
  CHECK(commas + 1 == e.size());
}
