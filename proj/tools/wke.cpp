// Command line front end: run, convergence, fit.

#include <cmath>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "wke/errors.hpp"
#include "wke/harness.hpp"

namespace {

struct Overrides {
  std::optional<std::string> scenario, table, out, flux_scheme;
  std::optional<double> L, dk, T, rtol, atol, dt_init, dt_max;
  bool freeze = false;

  void add_to(CLI::App& app) {
    app.add_option("--scenario", scenario, "scenario name");
    app.add_option("--table", table, "k,g0 file for the tabulated scenario");
    app.add_option("--L", L, "truncation");
    app.add_option("--dk", dk, "cell width");
    app.add_option("--T", T, "final time");
    app.add_option("--out", out, "output directory");
    app.add_option("--rtol", rtol);
    app.add_option("--atol", atol);
    app.add_option("--dt-init", dt_init);
    app.add_option("--dt-max", dt_max);
    app.add_option("--flux-scheme", flux_scheme, "consistent or literal");
    app.add_flag("--freeze-jacobian", freeze, "one LU per step");
  }

  void apply(wke::RunConfig& cfg) const {
    if (scenario) cfg.scenario = *scenario;
    if (table) cfg.table = *table;
    if (out) cfg.out = *out;
    if (flux_scheme) cfg.flux_scheme = wke::flux_scheme_from_name(*flux_scheme);
    if (L) cfg.L = *L;
    if (dk) cfg.dk = *dk;
    if (T) cfg.T = *T;
    if (rtol) cfg.stepper.rtol = *rtol;
    if (atol) cfg.stepper.atol = *atol;
    if (dt_init) cfg.stepper.dt_init = *dt_init;
    if (dt_max) cfg.stepper.dt_max = *dt_max;
    if (freeze) cfg.stepper.freeze_jacobian = true;
  }
};

wke::RunConfig load(const std::string& path, const Overrides& ov) {
  wke::RunConfig cfg = path.empty() ? wke::RunConfig{} : wke::load_config(path);
  ov.apply(cfg);
  return cfg;
}

std::string cell(double v) { return std::isfinite(v) ? wke::format_double(v) : "-"; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"finite-volume solver for the isotropic 3-wave kinetic equation"};
  app.require_subcommand(1);

  std::string run_config, conv_config;
  Overrides run_ov, conv_ov;
  auto* run_cmd = app.add_subcommand("run", "integrate one scenario");
  run_cmd->add_option("--config", run_config, "JSON config (all fields optional)");
  run_ov.add_to(*run_cmd);

  auto* conv_cmd = app.add_subcommand("convergence", "self-convergence study");
  conv_cmd->add_option("--config", conv_config, "JSON config")->required();
  conv_ov.add_to(*conv_cmd);

  std::string series;
  std::optional<std::string> fit_out;
  double t_lo = 0.0, t_hi = 0.0;
  auto* fit_cmd = app.add_subcommand("fit", "log-log decay fit and phase detection");
  fit_cmd->add_option("--series", series, "series.csv")->required();
  fit_cmd->add_option("--t-lo", t_lo)->required();
  fit_cmd->add_option("--t-hi", t_hi)->required();
  fit_cmd->add_option("--out", fit_out, "fit.json path (default: next to the series)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? wke::kExitOk : wke::kExitConfig;
  }

  try {
    if (*run_cmd) {
      const auto cfg = load(run_config, run_ov);
      const auto res = wke::run(cfg);
      std::cout << "accepted " << res.stats.accepted << ", rejected " << res.stats.rejected << ", newton "
                << res.stats.newton_iterations << ", t = " << res.records.back().t << ", wall "
                << res.wall_seconds << " s\n";
      if (res.error) std::cerr << "solver abort: " << *res.error << '\n';
      return res.exit_code();
    }
    if (*conv_cmd) {
      const auto rows = wke::cmd_convergence(load(conv_config, conv_ov));
      std::cout << "dk,L1_rel,Linf_rel,order_L1,order_Linf\n";
      for (const auto& r : rows) {
        std::cout << cell(r.dk) << ',' << cell(r.l1_rel) << ',' << cell(r.linf_rel) << ',' << cell(r.order_l1)
                  << ',' << cell(r.order_linf) << '\n';
      }
      return wke::kExitOk;
    }
    std::optional<std::filesystem::path> out;
    if (fit_out) out = *fit_out;
    const auto rep = wke::cmd_fit(series, t_lo, t_hi, out);
    std::cout << "slope " << rep.fit.slope << ", intercept " << rep.fit.intercept << ", residual "
              << rep.fit.residual << " over " << rep.fit.samples << " samples\n";
    for (const auto& p : rep.phases) {
      std::cout << wke::phase_kind_name(p.kind) << " [" << p.t_start << ", " << p.t_end << "] drift " << p.drift
                << '\n';
    }
    return wke::kExitOk;
  } catch (const wke::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return wke::kExitConfig;
  } catch (const wke::InsufficientSamples& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return wke::kExitConfig;
  } catch (const wke::NonPositiveValue& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return wke::kExitConfig;
  } catch (const wke::SolverError& e) {
    std::cerr << "solver abort: " << e.what() << '\n';
    return wke::kExitSolver;
  }
}
