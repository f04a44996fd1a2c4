#pragma once

#include <deque>
#include <functional>
#include <vector>

#include "fslab/background.hpp"
#include "fslab/grid.hpp"

namespace fslab {

enum class Scheme { BackwardEuler, BDF2 };

struct GridSpec {
  double first_spacing = 1e-3; // in eta units
  double ratio = 1.02;
  double eta_cap = 12.0;
};

struct MarchConfig {
  double m = 0.0;
  double epsilon = 1e-2;
  double x_start = 1.0;
  double x_end = 500.0;
  double dx_init = 1e-2; // dx = min(dx_max, dx_init * x / x_start)
  double dx_max = 5.0;
  GridSpec grid;
  double nonlinear_tol = 1e-10;
  int max_picard_iters = 200;
  std::vector<double> station_schedule;
  Scheme scheme = Scheme::BackwardEuler;
  int history_depth = 7;

  void validate() const;
};

// One grid for the whole march: fine enough near the wall and tall enough
// for every station in [x_start, x_end].
Vec march_grid(const MarchConfig &cfg);

// n stations log-uniform on [a, b], both ends included
std::vector<double> log_schedule(double a, double b, int n);

struct StationRecord {
  double x;
  Vec u;
};

struct SolverStats {
  long steps = 0;
  long picard_total = 0;
  int picard_max = 0;
};

struct PerturbationState {
  double x = 1.0;
  Vec y, u, v, psi;
  std::deque<StationRecord> history; // front = current station
  SolverStats stats;
};

// Coefficients of the linearised operator at one station.
struct MarchCoefficients {
  Vec u_bar, v_bar, u_bar_x, u_bar_y;
};

using CoefficientProvider = std::function<MarchCoefficients(double x)>;
// Optional source term and far-field value, used by manufactured solutions.
using SourceFn = std::function<Vec(double x, const Vec &y)>;
using FarFieldFn = std::function<double(double x)>;

CoefficientProvider coefficient_provider(const BackgroundModel &model, const Vec &y);

PerturbationState init_perturbation(const MarchConfig &cfg, const Vec &y, const Vec &u_in);

struct StepOptions {
  SourceFn source;
  FarFieldFn far_field;
};

PerturbationState march_step(const PerturbationState &s, const MarchCoefficients &co, double dx,
                             const MarchConfig &cfg, const StepOptions &opt = {});

std::vector<PerturbationState> march_to(PerturbationState &s, double x_target,
                                        const MarchConfig &cfg, const CoefficientProvider &prov,
                                        const StepOptions &opt = {});

// d_x^k u at the current station from the stored history.
Vec x_derivatives(const PerturbationState &s, int k);

// Initial-data families on the grid at x = 1 (eta = y there).
Vec gaussian_data(const Vec &y, double amplitude, double width);

} // namespace fslab
