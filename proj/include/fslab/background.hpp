#pragma once

#include <memory>
#include <string>
#include <vector>

#include "fslab/fs_profile.hpp"
#include "fslab/grid.hpp"

namespace fslab {

// x^xexp * sum_t c_t xi^{p_t} f^{(j_t)}(xi), with xi = sqrt((m+1)/2) x^{(m-1)/2} y.
// Every background quantity and all its x/y derivatives have this form.
struct SimTerm {
  int p;
  int j;
  double c;
};

struct SimExpr {
  double xexp = 0.0;
  std::vector<SimTerm> terms;
};

class BackgroundModel {
public:
  explicit BackgroundModel(FsProfile profile);

  const FsProfile &profile() const { return profile_; }
  double m() const { return m_; }
  double beta() const { return beta_; }
  double xi_scale() const { return c_; } // sqrt((m+1)/2)
  double x_power() const { return b_; }   // (m-1)/2

  SimExpr psi_expr() const;
  SimExpr dx(const SimExpr &e) const;
  SimExpr dy(const SimExpr &e) const;
  // d_x^i d_y^j of u_bar (v_bar when which = 'v', psi_bar when 'p')
  SimExpr expr(char which, int i, int j) const;

  Vec eval(const SimExpr &e, double x, const Vec &y) const;
  double eval_point(const SimExpr &e, double x, double y) const;

  // f^{(0..J)} at xi from the interpolated (f, f', f'') and the ODE
  void profile_derivatives(double xi, int J, double *out) const;

private:
  FsProfile profile_;
  double m_, beta_, c_, b_;
};

// Background on one station. Arrays of d_x^i d_y^j u_bar and d_x^i v_bar.
struct BackgroundFields {
  static constexpr int kMaxX = 6;
  static constexpr int kMaxY = 4;

  double m = 0.0;
  double x = 1.0;
  Vec y, eta;
  Vec u_bar, v_bar, psi_bar;
  Vec du_bar_dy[kMaxY + 1]; // du_bar_dy[j] = d_y^j u_bar, j = 1..4 (index 0 unused)
  Vec u_bar_x, v_bar_y;     // v_bar_y by finite differences (checks the divergence identity)
  std::vector<std::vector<Vec>> du; // du[i][j] = d_x^i d_y^j u_bar, i <= kMaxX, j <= kMaxY
  std::vector<Vec> dv;               // dv[i] = d_x^i v_bar, i <= kMaxX - 1
  std::vector<Vec> dvy;              // dvy[i] = d_x^i d_y v_bar
  double dpdx = 0.0;                 // d_x p_E = -m x^{2m-1}
  double wall_shear = 0.0;           // d_y u_bar at y = 0

  const Vec &u(int i, int j) const { return du.at(i).at(j); }
  double eta_scale() const; // x^{(1-m)/2}
};

BackgroundFields build_background(const BackgroundModel &model, double x, const Vec &y);

// Default station grid: geometric, first spacing 1e-3 x^{(1-m)/2}, ratio 1.02, to eta_cap.
Vec default_station_grid(double m, double x, double eta_cap = 12.0,
                         double first = 1e-3, double ratio = 1.02);

double divergence_residual(const BackgroundFields &bg);

struct VDecomposition {
  Vec eta, v_star;
  double sup_v_star = 0.0;
  double reconstruction_error = 0.0;
};

VDecomposition decompose_v(const BackgroundFields &bg);

// Wedge Euler flow psi_E(theta, r) = r^{1+m} sin((1+m)(pi - theta)).
struct WedgeFlow {
  double beta, m;
  explicit WedgeFlow(double beta);
  double psi(double theta, double r) const;
  double psi_xy(double X, double Y) const;
  double wall_angle() const;
};

struct WedgeTrace {
  double closed_form;
  double fd_one_sided;
  double fd_central;
};

// u_E(tau) = (1+m) tau^m with finite-difference cross-checks of d_Y psi_E at step h.
WedgeTrace wedge_euler_trace(double beta, double tau, double h = 1e-5);

struct Annulus {
  double r_min = 1.0, r_max = 2.0;
  int n_r = 11, n_theta = 11;
  double h = 1e-3;
  double margin = 0.1; // angular distance kept from both walls
};

enum class LaplaceStencil { Cartesian, Polar };

double wedge_harmonicity_check(double beta, const Annulus &ann,
                               LaplaceStencil st = LaplaceStencil::Cartesian);

std::string background_csv(const BackgroundFields &bg);

} // namespace fslab
