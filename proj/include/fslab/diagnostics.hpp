#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "fslab/background.hpp"
#include "fslab/functionals.hpp"
#include "fslab/good_unknowns.hpp"

namespace fslab {

struct InequalityCheck {
  std::string name;
  double lhs = 0, rhs = 0;
  double slack = 0; // lambda-weighted part of the majorant, not scaled by the constant
  double ratio = 0; // (lhs - slack)/rhs, clipped at 0; for lower bounds lhs/rhs
  double lambda = 0, m = 0, x = 0;
  bool lower_bound = false; // lhs >= c rhs instead of lhs <= C rhs
  bool pass = true;
};

// lhs/rhs, 0 when both vanish, inf when only rhs does
double safe_ratio(double lhs, double rhs);

InequalityCheck check_hardy(const Vec &f, const BackgroundFields &bg, double lambda,
                            double eta_cap = 12.0);

// The three trade-offs between good-unknown norms:
//   DyTrade  |d_y U_k|^2 against D_{k,n}, lambda D^Z_{k+1/2,0}
//   DxTrade  |d_x U_k|^2 against D^Y_{k+1/2,n}, lambda (D_{k+1,0} + D_{k,0} + CK_{k,0})
//   OrderDown |U_k|^2 (k >= 1) against D^Y_{k-1/2,n} + CK_{k-1,0} + D_{k-1,0}, lambda D_{k,0}
//   QuasiDown |calU_K|^2 against I_{K-1/2,0} + eps^{1/4} I_K, lambda D_{K,0}
enum class Interp { DyTrade, DxTrade, OrderDown, QuasiDown };
const char *interp_name(Interp w);

InequalityCheck check_interpolation(const GoodUnknownStack &st, const BackgroundFields &bg,
                                    const FunctionalReport &r, Interp which, int k, int n,
                                    double lambda, double eta_cap = 12.0);

// Norms of u^{(k)} itself against the good-unknown functionals.
std::vector<InequalityCheck> check_original_norms(const GoodUnknownStack &st,
                                                  const BackgroundFields &bg,
                                                  const FunctionalReport &r, int k, int n,
                                                  double lambda, double eta_cap = 12.0);

// |D_K - Dbar_K|, |CK_K - CKbar_K|, |B_K - Bbar_K| against eps^{1/4} I_K
std::vector<InequalityCheck> check_quasi_equivalence(const FunctionalReport &r);

struct NashBounds {
  double c0 = 1e-3, C0 = 1e3; // c0 <= q / (x^{-m} u_bar) <= C0
};

// B^2 = int u_bar U_y^2 >= c min{x^{-1/4+3m/4} g^5/A^3, x^m g^6/A^4}
InequalityCheck check_nash(const Vec &U, const BackgroundFields &bg, const Vec &q,
                           const NashBounds &qb = {}, double eta_cap = 12.0);

// Seeded test functions of eta.
struct CorpusFunction {
  enum Family { Gaussian, PolyExp, Bump } family = Gaussian;
  double a = 1, b = 1, c = 0;
  double operator()(double eta) const;
  std::string label() const;
};

std::vector<CorpusFunction> make_corpus(std::uint64_t seed, int n = 200);
Vec sample_eta(const CorpusFunction &f, const BackgroundFields &bg);

// Linear (epsilon = 0) stack with prescribed U_k.
GoodUnknownStack linear_stack(const BackgroundFields &bg, const std::vector<Vec> &U);

// Energy inequalities along a run.
enum class Level { Integer, Y, Z, Quasi, IntegerHat, YHat, ZHat };
const char *level_name(Level l);

struct EnergySeries {
  std::string name;
  Vec x, lhs, majorant, ratio; // interior stations only
};

// lhs = 1/2 dE/dx + the dissipative terms, centred differences on the stations;
// majorant = the right-hand side with unit constants (delta for the small ones).
EnergySeries energy_series(const std::vector<FunctionalReport> &reps, Level level, int k, int n,
                           double delta = 1.0);

struct EnergyResidual {
  std::string name;
  Vec x, residual; // lhs - C majorant
  double constant = 0;
  int stations = 0, violations = 0;
  double violation_fraction = 0;
};

EnergyResidual energy_residual(const EnergySeries &s, double constant, double x_min);

// every level the reports support; integer levels at (k, level_weight(k)) and (k, 0)
std::vector<EnergySeries> all_energy_series(const std::vector<FunctionalReport> &reps,
                                            double delta = 1.0);

// Empirical constants: upper bounds store 1.1 max ratio, lower bounds min ratio / 1.1.
struct Calibration {
  std::map<std::string, double> constants;
  std::map<std::string, bool> lower;
  double slack = 0.1;

  void absorb(const InequalityCheck &c);
  void absorb_series(const EnergySeries &s, double x_min);
  void finalize(); // applies the slack once
  bool judge(InequalityCheck &c) const;
  bool has(const std::string &name) const { return constants.count(name) > 0; }

  std::string json() const;
  static Calibration parse(const std::string &text);

private:
  bool final_ = false;
};

struct OdeTrajectory {
  Vec x, gamma;
  double sup_scaled = 0; // sup Gamma x^{1/2+m/2}
  double x_at_sup = 1;
  bool tail_non_increasing = true; // Gamma x^{1/2+m/2} over the last half of the range
};

// d_x Gamma / 2 + c min{x^{-1/4+3m/4} Gamma^{5/2}, x^m Gamma^3} = 0 from x = 1, RK4 with
// geometric steps dx = h x
OdeTrajectory ode_compare(double c, double m, double gamma0, double x_end, double h = 1e-3);

// Closed form of d_x G / 2 + c x^{-1/4+3m/4} G^{5/2} = 0, G(1) = g0.
double gamma_up(double c, double m, double g0, double x);
// Residual of the closed form in that equation, derivative by fourth-order differences.
double gamma_up_residual(double c, double m, double g0, double x);

struct RateFit {
  std::string quantity;
  double x_lo = 0, x_hi = 0;
  double slope = 0, intercept = 0, r2 = 0;
  double theorem_rate = 0;
  int stations = 0;
  bool pass = false; // slope <= theorem_rate + tolerance
};

// exponents of sup |d_x^k d_y^j u| from the two scattering theorems
double theorem1_rate(double m, int k, int j);
double theorem2_rate(double m, int k, int j);

RateFit fit_decay(const Vec &x, const Vec &q, const std::string &name, double theorem_rate,
                  double x_lo, double x_hi, double tolerance = 0.05);

// Weighted sup norms of u^{(k)}, u^{(k)}_y, v^{(k)} used by the nonlinear bounds.
std::vector<std::pair<std::string, double>> linf_quantities(const GoodUnknownStack &st,
                                                            const BackgroundFields &bg,
                                                            double eta_cap = 12.0);

std::string checks_csv(const std::vector<InequalityCheck> &checks);

} // namespace fslab
