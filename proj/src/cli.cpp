#include "fslab/cli.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "fslab/errors.hpp"
#include "fslab/fs_profile.hpp"
#include "fslab/io.hpp"
#include "fslab/pipeline.hpp"

namespace fslab {

namespace {

using ojson = nlohmann::ordered_json;

struct Ctx {
  RunConfig cfg;
  std::string out;
  bool quiet = false;
  std::ostream *log = nullptr;
  void say(const std::string &s) const {
    if (!quiet) *log << s << "\n";
  }
};

int exit_for(ErrorKind k) {
  switch (k) {
  case ErrorKind::InvalidParams:
  case ErrorKind::InvalidBeta:
  case ErrorKind::Io:
  case ErrorKind::BadWeight:
    return kExitUsage;
  default:
    return kExitSolver;
  }
}

ojson run_info(const RunConfig &cfg) {
  return {{"m", cfg.m_value()}, {"beta", cfg.beta_value()}, {"seed", cfg.seed},
          {"config_sha256", sha256_hex(cfg.to_json().dump())}};
}

int cmd_profile(const Ctx &c) {
  const FsProfile p = solve_fs(FsParams::from_beta(c.cfg.beta_value()));
  Manifest mf(c.out);
  std::ostringstream csv;
  write_profile_csv(csv, p);
  mf.write("profile.csv", csv.str());
  const double far = std::abs(p.fp.back() - 1.0);
  ojson s = {{"beta", p.params.beta},
             {"m", p.params.m},
             {"wall_shear", p.wall_shear},
             {"shoot_iterations", p.shoot_iterations},
             {"n_xi", p.xi.size()},
             {"eta_max", p.params.eta_max},
             {"far_field_error", far},
             {"far_field_ok", far <= 1e-8},
             {"displacement", p.displacement()},
             {"ode_residual", profile_ode_residual(p)}};
  mf.write("profile_summary.json", s.dump(2) + "\n");
  mf.finish(run_info(c.cfg));
  c.say("wall shear f''(0) = " + num(p.wall_shear) + ", |f'(eta_max) - 1| = " + num(far));
  return kExitOk;
}

void write_run(Manifest &mf, const RunResult &r, bool with_snapshots) {
  if (with_snapshots) mf.write("snapshots.csv", snapshots_csv(r));
  mf.write("summaries.csv", summaries_csv(r));
  mf.write("functionals.csv", reports_csv(r.reports));
}

ojson stats_json(const RunResult &r) {
  return {{"steps", r.stats.steps},
          {"picard_total", r.stats.picard_total},
          {"picard_max", r.stats.picard_max},
          {"projection_newton_iters", r.projection.newton_iters},
          {"projection_correction_ratio", r.projection.correction_ratio}};
}

int cmd_march(const Ctx &c) {
  const BackgroundModel model(solve_fs(FsParams::from_m(c.cfg.m_value())));
  const auto r = run_march(c.cfg, model);
  Manifest mf(c.out);
  mf.write("config.json", c.cfg.to_json().dump(2) + "\n");
  write_run(mf, r, true);
  auto info = run_info(c.cfg);
  info["solver"] = stats_json(r);
  mf.finish(info);
  c.say("marched to x = " + num(r.snapshots.back().x) + " in " + std::to_string(r.stats.steps) +
        " steps");
  return kExitOk;
}

int cmd_rates(const Ctx &c) {
  const BackgroundModel model(solve_fs(FsParams::from_m(c.cfg.m_value())));
  const auto r = run_march(c.cfg, model);
  const auto o = compute_rates(c.cfg, r);
  Manifest mf(c.out);
  mf.write("config.json", c.cfg.to_json().dump(2) + "\n");
  write_run(mf, r, false);
  mf.write("rates.json", rates_json(o));
  if (c.cfg.svg) mf.write("rates.svg", rates_svg(r, theorem1_rate(c.cfg.m_value(), 0, 0)));
  mf.finish(run_info(c.cfg));
  for (const auto &f : o.fits)
    c.say(f.quantity + ": slope " + num(f.slope) + " vs " + num(f.theorem_rate) +
          (f.pass ? "  ok" : "  FAIL"));
  c.say(std::string("x^{3m} E non-increasing: ") + (o.weighted_energy_monotone ? "yes" : "no"));
  return o.ok ? kExitOk : kExitCheck;
}

int cmd_check(const Ctx &c) {
  const BackgroundModel model(solve_fs(FsParams::from_m(c.cfg.m_value())));
  Calibration cal;
  const std::string &path = c.cfg.diag.calibration;
  if (!path.empty() && std::filesystem::exists(path)) {
    cal = Calibration::parse(read_file(path));
    c.say("calibration loaded from " + path);
  } else {
    cal = calibrate(c.cfg, model);
    if (!path.empty()) write_file(path, cal.json());
    c.say("calibrated " + std::to_string(cal.constants.size()) + " constants");
  }
  std::vector<GoodUnknownStack> stacks;
  const auto r = run_march(c.cfg, model, true, &stacks);
  const auto o = run_checks(c.cfg, model, r, stacks, cal);
  Manifest mf(c.out);
  mf.write("config.json", c.cfg.to_json().dump(2) + "\n");
  mf.write("calibration.json", cal.json());
  mf.write("checks.csv", checks_csv(o.checks));
  mf.write("energy.csv", energy_csv(o));
  mf.write("check_summary.json", check_summary_json(o));
  mf.finish(run_info(c.cfg));
  int bad = 0;
  for (const auto &g : o.groups)
    if (g.violations > 0) ++bad;
  c.say(std::to_string(o.checks.size()) + " inequality checks, " + std::to_string(bad) +
        " groups with violations, " + std::to_string(o.energy.size()) + " energy series");
  return o.ok ? kExitOk : kExitCheck;
}

int dispatch(const std::string &cmd, const Ctx &c);

int cmd_sweep(const Ctx &c, const nlohmann::json &base) {
  const auto &items = c.cfg.sweep;
  if (items.empty()) throw Error(ErrorKind::InvalidParams, "sweep list is empty");
  std::vector<Ctx> jobs;
  std::vector<std::string> cmds;
  for (size_t i = 0; i < items.size(); ++i) {
    nlohmann::json j = base;
    j.erase("sweep");
    nlohmann::json patch = items[i];
    cmds.push_back(patch.value("command", std::string("rates")));
    patch.erase("command");
    // m and beta are exclusive, so an override of one drops the other
    if (patch.contains("m")) j.erase("beta");
    if (patch.contains("beta")) j.erase("m");
    j.merge_patch(patch);
    Ctx w;
    w.cfg = RunConfig::from_json(j);
    w.cfg.seed = c.cfg.seed;
    w.out = (std::filesystem::path(c.out) / ("sweep_" + std::to_string(i))).string();
    w.quiet = c.quiet;
    jobs.push_back(std::move(w));
  }
  std::vector<int> codes(jobs.size(), 0);
  std::vector<std::ostringstream> logs(jobs.size());
  std::vector<std::thread> pool;
  for (size_t i = 0; i < jobs.size(); ++i)
    pool.emplace_back([&, i] {
      jobs[i].log = &logs[i];
      try {
        codes[i] = dispatch(cmds[i], jobs[i]);
      } catch (const Error &e) {
        logs[i] << "error: " << e.what() << "\n";
        codes[i] = exit_for(e.kind());
      } catch (const std::exception &e) {
        logs[i] << "error: " << e.what() << "\n";
        codes[i] = kExitSolver;
      }
    });
  for (auto &t : pool) t.join();
  int worst = kExitOk;
  ojson runs = ojson::array();
  for (size_t i = 0; i < jobs.size(); ++i) {
    if (!c.quiet || codes[i] != 0) *c.log << "[sweep_" << i << "] " << logs[i].str();
    runs.push_back({{"dir", "sweep_" + std::to_string(i)}, {"command", cmds[i]},
                    {"m", jobs[i].cfg.m_value()}, {"exit", codes[i]}});
    worst = std::max(worst, codes[i]);
  }
  Manifest mf(c.out);
  mf.write("sweep.json", runs.dump(2) + "\n");
  mf.finish(run_info(c.cfg));
  return worst;
}

int dispatch(const std::string &cmd, const Ctx &c) {
  if (cmd == "profile") return cmd_profile(c);
  if (cmd == "march") return cmd_march(c);
  if (cmd == "rates") return cmd_rates(c);
  if (cmd == "check") return cmd_check(c);
  throw Error(ErrorKind::InvalidParams, "unknown command " + cmd);
}

} // namespace

int cli_main(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
  CLI::App app{"Falkner-Skan perturbation laboratory"};
  app.require_subcommand(1);
  std::string config, out_flag;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
  for (const char *name : {"profile", "march", "rates", "check", "sweep"}) {
    auto *sub = app.add_subcommand(name);
    sub->add_option("--config", config, "config file (JSON)")->required();
    sub->add_option("--out", out_flag, "output directory");
    sub->add_option("--seed", seed, "corpus and calibration seed");
    sub->add_flag("--quiet", quiet, "no progress output");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError &e) {
    app.exit(e, out, err);
    return kExitUsage;
  }
  const std::string cmd = app.get_subcommands().front()->get_name();
  try {
    nlohmann::json raw;
    try {
      raw = nlohmann::json::parse(read_file(config));
    } catch (const nlohmann::json::exception &e) {
      throw Error(ErrorKind::InvalidParams, std::string("config is not valid JSON: ") + e.what());
    }
    Ctx c;
    c.cfg = RunConfig::from_json(raw);
    if (seed) c.cfg.seed = *seed;
    c.out = resolve_out_dir(c.cfg, out_flag);
    c.quiet = quiet;
    c.log = &out;
    const auto t0 = std::chrono::steady_clock::now();
    const int code = cmd == "sweep" ? cmd_sweep(c, raw) : dispatch(cmd, c);
    const double dt =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    c.say(cmd + " done in " + num(std::round(dt * 100) / 100) + " s -> " + c.out);
    return code;
  } catch (const Error &e) {
    err << "fslab " << cmd << ": " << e.what() << "\n";
    return exit_for(e.kind());
  } catch (const std::exception &e) {
    err << "fslab " << cmd << ": " << e.what() << "\n";
    return kExitSolver;
  }
}

} // namespace fslab
