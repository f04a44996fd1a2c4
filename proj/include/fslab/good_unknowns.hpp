#pragma once

#include <string>
#include <vector>

#include "fslab/background.hpp"
#include "fslab/march.hpp"

namespace fslab {

struct GoodUnknownStack {
  int k_max = 0;
  double x = 1.0;
  double epsilon = 0.0;
  Vec y;
  std::vector<Vec> uk;   // d_x^k u, k = 0..k_max (+1 when the history allows)
  std::vector<Vec> vk;   // d_x^k v, defined where uk[k+1] exists (vk[0] from continuity)
  std::vector<Vec> psik; // int_0^y uk
  std::vector<Vec> Q, U, calQ, calU; // k = 0..k_max
  Vec mu, nu, mu_y;
  Vec a, b, c; // quasilinear transport coefficients (empty without d_x u)

  bool has_u(int k) const { return k >= 0 && k < static_cast<int>(uk.size()); }
  bool has_v(int k) const { return k >= 0 && k < static_cast<int>(vk.size()); }
};

// Largest k_max the history of s supports.
int available_order(const PerturbationState &s);

GoodUnknownStack build_stack(const PerturbationState &s, const BackgroundFields &bg, int k_max,
                             double epsilon);

// Stack from explicit x-derivative fields (u^{(k)}, k = 0..n-1) on the grid of bg.
GoodUnknownStack stack_from_fields(const std::vector<Vec> &uk, const Vec &v0,
                                   const BackgroundFields &bg, int k_max, double epsilon);

// Good unknown of a single field: (1/d)(f - (d_y/d) int f), wall value by l'Hopital.
Vec good_unknown(const Vec &y, const Vec &f, const Vec &psi, const Vec &d, const Vec &d_y);

// Rayleigh map: U -> u_bar U + u_bar_y int U.
Vec rayleigh(const BackgroundFields &bg, const Vec &U);

// r = n/d and its first two y-derivatives, given y-derivatives of n and d (0..3),
// with wall values from the Taylor quotient.
struct RatioDerivs {
  Vec r, r_y, r_yy;
};
RatioDerivs ratio_derivatives(const std::vector<Vec> &n, const std::vector<Vec> &d);

// u_bar_x / u_bar and its y-derivatives
RatioDerivs shift_ratio(const BackgroundFields &bg);

struct CommutatorTerms {
  Vec sum[4];  // the four binomial sums
  Vec forcing; // -(sum of the four): right-hand side of the k-times differentiated equation
};

CommutatorTerms commutator_forcing(const GoodUnknownStack &st, const BackgroundFields &bg, int k);
Vec quadratic_lower(const GoodUnknownStack &st, int k);
// G_k = F_comm,k - eps d_x^k (u u_x + v u_y); needs u^{(k+1)}
Vec source_G(const GoodUnknownStack &st, const BackgroundFields &bg, int k);
// H_k = F_comm,k - eps Q_{k,lo}
Vec source_H(const GoodUnknownStack &st, const BackgroundFields &bg, int k);

std::string stack_csv(const GoodUnknownStack &st, int k);

struct CompatReport {
  bool cc0_ok = false;
  std::vector<double> cc1, cc2; // index k-1 holds CC_{k;1}, CC_{k;2}
  std::vector<Vec> data_stack;  // U_{IN;k}
  std::vector<Vec> data_u;      // u_{IN;k} = Ray[U_{IN;k}]
  double max_residual() const;
  bool pass(double tol) const { return cc0_ok && max_residual() <= tol; }
};

struct CauchyOptions {
  double epsilon = 1e-2;
  double wall_eta = 0.05; // below this the 1/u_bar^2 quotient is extrapolated
  double fit_eta = 0.6;
  int fit_degree = 4;
  double wall_fit_eta = 0.3; // B(0), B_y(0) from a least-squares fit on [0, wall_fit_eta]
  int wall_fit_degree = 6;
  int fixed_point_iters = 60;
};

CompatReport iterate_cauchy_data(const Vec &u_in, const BackgroundFields &bg, int k_max,
                                 const CauchyOptions &opt = {});

struct Projection {
  Vec u;
  std::vector<double> coeffs; // c_j for j = 2..2k_max+1
  CompatReport report;
  double correction_ratio = 0.0; // sup|correction| / sup|u_IN|
  int newton_iters = 0;
};

struct ProjectionOptions {
  CauchyOptions cauchy;
  double cutoff = 0.2; // chi(y) = exp(-(y/cutoff)^6)
  double tol = 1e-2;    // residuals below this count as satisfied
  double target = 1e-9; // Newton stops early here
  double max_condition = 1e12;
  int max_iters = 20;
};

Projection project_compatible(const Vec &u_in, const BackgroundFields &bg, int k_max,
                              const ProjectionOptions &opt = {});

} // namespace fslab
