#pragma once

#include <string>
#include <utility>
#include <vector>

#include "fslab/background.hpp"
#include "fslab/good_unknowns.hpp"

namespace fslab {

constexpr int kTopOrder = 5;
constexpr int kTopWeight = 10;

using Table = std::vector<Vec>; // [k][n], n = 0..kTopWeight

// sigma_k for k = 0..5 and sigma_{k+1/2} (shared by the Y and Z levels) for k = 0..4.
struct WeightSet {
  Vec sigma;
  Vec sigma_half;

  // sigma_k = r^{2k}, sigma_{k+1/2} = r^{2k+1}, 0 < r < 1
  static WeightSet ladder(double r);
  // throws BadWeight unless sigma_0 > sigma_{1/2} > sigma_1 > ... > 0
  void validate() const;
};

// Weight index paired with order k in the total functionals.
inline int level_weight(int k) { return k < kTopOrder ? kTopWeight - k : 0; }
inline int half_weight(int k) { return kTopWeight - 1 - k; }

struct FunctionalReport {
  double x = 1.0, m = 0.0, epsilon = 0.0;
  int k_max = 0;

  Table E, CK, CKP, D; // k = 0..k_max
  Vec B;
  Table EY, DY, EZ, DZ; // k + 1/2 for k = 0..k_max-1
  Vec BZ;
  Table Ehat, CKhat, CKPhat, Dhat;
  Table EYhat, DYhat, EZhat, DZhat;

  // quasilinear level at k = k_max
  double Ebar = 0, Dbar = 0, CKbar = 0, CKPbar = 0, Bbar = 0;
  double Hbar = 0; // int H_k calU_k x^{2k-1/100}

  // sources, where G_k is available (k = 0..s_max)
  int s_max = -1;
  Table S, Shat, SY, SZ, SYhat, SZhat; // the Y, Z sources need d_x U_k: k <= min(s_max, k_max-1)

  Vec I_le, I_le_half, I_hat, I_hat_half, J_hat, J_hat_half;
  double alpha = 0, gamma = 0;

  // weighted totals
  double total_E = 0, total_D = 0, total_CK = 0, total_CKP = 0, total_B = 0;
  double quasi_E = 0, quasi_D = 0, quasi_CK = 0, quasi_CKP = 0, quasi_B = 0;
  double hat_E = 0, hat_D = 0, hat_CK = 0, hat_CKP = 0, hat_B = 0;

  // largest estimated share of an integral lying beyond the grid
  double tail_ratio = 0;

  std::vector<std::pair<std::string, double>> entries() const;
};

// number of leading grid points with eta <= cap
size_t eta_cut(const BackgroundFields &bg, double cap);

// Integrals run over eta <= eta_cap; the march grid usually extends further.
FunctionalReport evaluate_all(const GoodUnknownStack &st, const BackgroundFields &bg,
                              const WeightSet &w, double eta_cap = 12.0);

double ck_pressure(const GoodUnknownStack &st, const BackgroundFields &bg, int k, int n,
                   double eta_cap = 12.0);

struct AlphaGamma {
  double alpha = 0, gamma = 0;
};
AlphaGamma alpha_gamma(const Vec &u, const BackgroundFields &bg, double eta_cap = 12.0);

// Combined energy of the weighted quasilinear form.
double combined_energy(const FunctionalReport &r, const WeightSet &w);

struct SigmaCalibration {
  WeightSet weights;
  double ratio = 0;
  int violations = 0;
  int stations = 0;
  bool ok = false; // violations <= threshold
};

// Search over ladder ratios for the weight set with the fewest stations past x_min
// where the combined energy increases.
SigmaCalibration calibrate_sigma(const std::vector<FunctionalReport> &reports, const Vec &ratios,
                                 double x_min = 1.0, int threshold = 0);

std::string reports_csv(const std::vector<FunctionalReport> &reports);
std::string weights_json(const SigmaCalibration &c);

} // namespace fslab
