#pragma once

#include <array>
#include <iosfwd>
#include <vector>

namespace fslab {

// Falkner-Skan parameters. beta and m are kept consistent by the factories.
struct FsParams {
  double beta = 0.0;
  double m = 0.0;
  double eta_max = 15.0; // in eta units; converted to xi internally
  int n_xi = 4001;
  double shoot_tol = 1e-10;

  static FsParams from_beta(double beta);
  static FsParams from_m(double m);
  void validate() const;
  double xi_max() const;
};

double beta_from_m(double m);
double m_from_beta(double beta);

struct FsProfile {
  FsParams params;
  std::vector<double> xi, f, fp, fpp, fppp;
  double wall_shear = 0.0;
  int shoot_iterations = 0;

  double xi_end() const { return xi.back(); }
  // c_beta in the far-field asymptote f ~ xi - c_beta
  double displacement() const { return xi.back() - f.back(); }
};

// f''' from the ODE, and the next two derivatives obtained by differentiating it.
double fs_f3(double beta, double f, double fp, double fpp);
double fs_f4(double beta, double f, double fp, double fpp);
double fs_f5(double beta, double f, double fp, double fpp);

FsProfile solve_fs(const FsParams &params);

// (f, f', f'') at xi >= 0; cubic Hermite inside the grid, linear asymptote outside.
std::array<double, 3> eval_profile(const FsProfile &p, double xi);

// max |f''' + f f'' + beta(1 - f'^2)| at interior nodes with f''' by central differences
double profile_ode_residual(const FsProfile &p);

void write_profile_csv(std::ostream &os, const FsProfile &p);

} // namespace fslab
