#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "wke/collision.hpp"
#include "wke/diagnostics.hpp"
#include "wke/scenarios.hpp"
#include "wke/stepper.hpp"

namespace wke {

/// Process exit codes of the command line tool.
enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitSolver = 3 };

/**
 * Everything a run needs. Every JSON field is optional; the defaults are
 * the member initialisers below. `stepper.T` mirrors `T` and is set by
 * resolve().
 */
struct RunConfig {
  std::string scenario = "mollifier";
  std::string table;  // "k,g0" file, required when scenario is "tabulated"
  double L = 30.0;
  double dk = 0.5;
  double T = 1e4;
  StepperConfig stepper = default_stepper();
  FluxScheme flux_scheme = FluxScheme::Consistent;
  std::vector<int> moment_orders{0, 1, 2, 3};
  std::vector<double> snapshot_times;
  std::string out = "out";
  std::uint64_t seed = 0;  // reserved; the solver is deterministic
  std::size_t max_series_rows = 5000;

  // convergence subcommand
  std::vector<double> conv_dks{0.5, 0.25, 0.125, 0.0625};
  double conv_dk_ref = 0.05;

  static StepperConfig default_stepper() {
    StepperConfig s;
    s.dt_init = 1e-7;  // the early conserved phase lasts ~1e-6
    return s;
  }
};

/// Throws ConfigError on unknown keys, wrong types or invalid values.
/// Output-only keys of run.json ("stats", "snapshots", "error") are ignored.
RunConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const RunConfig& cfg);
RunConfig load_config(const std::filesystem::path& path);

/// Checks cross-field constraints and copies T into the stepper config.
void resolve(RunConfig& cfg);

struct SnapshotRecord {
  double requested = 0.0;
  double t = 0.0;  // time of the accepted step actually stored
  std::string file;
};

struct RunResult {
  std::vector<DiagnosticsRecord> records;  // every accepted step, t = 0 first
  std::vector<std::size_t> sampled;        // rows written to series.csv
  std::vector<SnapshotRecord> snapshots;
  AdvanceStats stats;
  State final_state;
  double wall_seconds = 0.0;
  std::optional<std::string> error;  // set when the solver aborted
  int exit_code() const { return error ? kExitSolver : kExitOk; }
};

/**
 * Integrates the configured scenario and writes series.csv,
 * snapshot_<t>.csv and run.json into cfg.out. Solver failures are
 * caught: the partial series and an error record in run.json are still
 * written. Throws ConfigError before any output for invalid configs.
 */
RunResult run(RunConfig cfg);

/// Writes convergence.csv into cfg.out and returns the table.
std::vector<ConvergenceRow> cmd_convergence(RunConfig cfg);

struct FitReport {
  DecayFit fit;
  std::vector<Phase> phases;
};

/**
 * Reads a series file (needs columns t and E), fits the decay over
 * [t_lo, t_hi], detects phases over the whole series and writes fit.json
 * next to the series unless out is given.
 */
FitReport cmd_fit(const std::filesystem::path& series, double t_lo, double t_hi,
                  const std::optional<std::filesystem::path>& out = std::nullopt);

/// Shortest decimal string that reads back to the same binary64.
std::string format_double(double v);

struct SeriesTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  /// Throws ConfigError if the column is absent.
  std::vector<double> column(const std::string& name) const;
};
SeriesTable read_series(const std::filesystem::path& path);

}  // namespace wke
