#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fslab/diagnostics.hpp"
#include "fslab/functionals.hpp"
#include "fslab/good_unknowns.hpp"
#include "fslab/march.hpp"
#include "json.hpp"

namespace fslab {

struct RunConfig {
  std::optional<double> m, beta; // exactly one
  double epsilon = 1e-2;
  GridSpec grid;
  double x_start = 1.0, x_end = 500.0;
  double dx_init = 1e-2, dx_max = 5.0;
  Scheme scheme = Scheme::BackwardEuler;
  double nonlinear_tol = 1e-10;
  int max_picard_iters = 200;
  int stations = 121;          // log-uniform on [x_start, x_end] unless station_list is given
  std::vector<double> station_list;

  struct Data {
    std::string family = "gaussian"; // gaussian | zero | csv
    double amplitude = 1.0, width = 1.0;
    std::string csv; // two columns y,u at x = x_start
  } data;
  int project_k_max = 2;
  int stack_k_max = 2;
  std::vector<double> sigma_ratios = {0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8};

  struct Diagnostics {
    bool energy = true, corpus = true, ode = true;
    int corpus_size = 200;
    int calibration_runs = 6;
    double x_transient = 10.0;
    std::vector<double> lambdas = {0.1, 0.3, 0.5};
    double max_violation = 0.05;
    std::string calibration; // calibration file; written when missing
  } diag;

  struct Rates {
    double x_lo = 0.0, x_hi = 0.0; // 0: last decade of the run
    double tolerance = 0.05;
  } rates;

  std::string out_dir = "out";
  bool svg = false;
  std::uint64_t seed = 12345;
  nlohmann::json sweep = nlohmann::json::array(); // list of overrides for the sweep command

  double m_value() const;
  double beta_value() const;
  MarchConfig march_config() const;
  void validate() const;

  static RunConfig from_json(const nlohmann::json &j);
  static RunConfig load(const std::string &path);
  nlohmann::json to_json() const;
};

// Output directory: --out beats FSLAB_OUT_DIR beats the config.
std::string resolve_out_dir(const RunConfig &cfg, const std::string &flag);

struct StationSummary {
  double x = 0;
  double sup_u = 0, sup_uy = 0, sup_u_eta3 = 0, sup_ux = 0;
  std::vector<std::pair<std::string, double>> linf;
};

struct RunResult {
  Vec y;
  Projection projection;
  std::vector<PerturbationState> snapshots;
  std::vector<FunctionalReport> reports; // stations where the history supports stack_k_max
  std::vector<StationSummary> summaries; // same stations
  SolverStats stats;
};

RunResult run_march(const RunConfig &cfg, const BackgroundModel &model, bool keep_stacks = false,
                    std::vector<GoodUnknownStack> *stacks = nullptr);

Vec initial_data(const RunConfig &cfg, const Vec &y);

// Files of one command, hashed into manifest.json.
class Manifest {
public:
  explicit Manifest(std::string dir);
  void write(const std::string &name, const std::string &bytes);
  void finish(const nlohmann::ordered_json &extra = {});
  const std::string &dir() const { return dir_; }

private:
  std::string dir_;
  std::vector<std::pair<std::string, std::string>> files_; // name, sha256
  std::vector<size_t> sizes_;
};

std::string snapshots_csv(const RunResult &r);
std::string summaries_csv(const RunResult &r);

struct RatesOutcome {
  std::vector<RateFit> fits;
  bool weighted_energy_monotone = true; // x^{3m} E_quasi non-increasing past the transient
  double weighted_energy_worst = 0;     // largest relative increase seen
  bool ok = false;
};

RatesOutcome compute_rates(const RunConfig &cfg, const RunResult &r);
std::string rates_json(const RatesOutcome &o);
// log-log sup|u| against x with the theorem slope through the last point
std::string rates_svg(const RunResult &r, double theorem_rate);

struct CheckGroup {
  std::string name;
  int count = 0, violations = 0;
  double constant = 0, worst_ratio = 0;
  bool lower_bound = false;
};

struct CheckOutcome {
  std::vector<InequalityCheck> checks;
  std::vector<CheckGroup> groups;
  std::vector<EnergyResidual> energy;
  double ode_residual = 0;
  double ode_x_at_sup = 0;
  bool ode_ok = true;
  bool ok = false;
};

// Corpus checks at x in {1, 10} and station checks on the run stacks.
std::vector<InequalityCheck> corpus_checks(const RunConfig &cfg, const BackgroundModel &model);
std::vector<InequalityCheck> station_checks(const RunConfig &cfg, const RunResult &r,
                                            const std::vector<GoodUnknownStack> &stacks,
                                            const BackgroundModel &model);

// Constants from the corpus and from calibration runs with seeded widths.
Calibration calibrate(const RunConfig &cfg, const BackgroundModel &model);

CheckOutcome run_checks(const RunConfig &cfg, const BackgroundModel &model, const RunResult &r,
                        const std::vector<GoodUnknownStack> &stacks, const Calibration &cal);
std::string check_summary_json(const CheckOutcome &o);
std::string energy_csv(const CheckOutcome &o);

} // namespace fslab
