#include "wke/harness.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "wke/errors.hpp"
#include "wke/grid.hpp"

namespace wke {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys{
      "scenario", "table",           "L",          "dk",          "T",          "rtol",
      "atol",     "dt_init",         "dt_min",     "dt_max",      "newton_tol", "newton_max_iter",
      "safety",   "freeze_jacobian", "flux_scheme", "moment_orders", "snapshot_times", "out",
      "seed",     "max_series_rows", "convergence"};
  return keys;
}

const std::set<std::string>& output_keys() {
  static const std::set<std::string> keys{"stats", "snapshots", "error"};
  return keys;
}

template <typename T>
void read(const json& j, const char* key, T& into) {
  if (!j.contains(key)) return;
  try {
    into = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: field '") + key + "': " + e.what());
  }
}

Scenario make_scenario(const RunConfig& cfg) {
  if (cfg.scenario == "tabulated") {
    if (cfg.table.empty()) throw ConfigError("config: scenario 'tabulated' needs a 'table' file");
    return Scenario::load_table(cfg.table);
  }
  return Scenario::from_name(cfg.scenario);
}

std::string moment_column(int r) { return r == 0 ? "E" : "M" + std::to_string(r); }

std::ofstream open_out(const fs::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write " + path.string());
  return f;
}

void write_series(const fs::path& path, const RunConfig& cfg, const std::vector<DiagnosticsRecord>& records,
                  const std::vector<std::size_t>& rows) {
  auto f = open_out(path);
  f << "t,dt";
  for (int r : cfg.moment_orders) f << ',' << moment_column(r);
  f << ",min_u\n";
  for (std::size_t idx : rows) {
    const auto& rec = records[idx];
    f << format_double(rec.t) << ',' << format_double(rec.dt);
    for (double m : rec.moments) f << ',' << format_double(m);
    f << ',' << format_double(rec.min_u) << '\n';
  }
}

void write_snapshot(const fs::path& path, const Grid& grid, std::span<const double> u) {
  auto f = open_out(path);
  f << "k,u\n";
  for (std::size_t i = 0; i < u.size(); ++i) f << format_double(grid.midpoint(i)) << ',' << format_double(u[i]) << '\n';
}

void write_json(const fs::path& path, const json& j) {
  auto f = open_out(path);
  f << j.dump(2) << '\n';
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

RunConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config: top level must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!known_keys().contains(key) && !output_keys().contains(key)) {
      throw ConfigError("config: unknown field '" + key + "'");
    }
  }
  RunConfig cfg;
  read(j, "scenario", cfg.scenario);
  read(j, "table", cfg.table);
  read(j, "L", cfg.L);
  read(j, "dk", cfg.dk);
  read(j, "T", cfg.T);
  auto& s = cfg.stepper;
  read(j, "rtol", s.rtol);
  read(j, "atol", s.atol);
  read(j, "dt_init", s.dt_init);
  read(j, "dt_min", s.dt_min);
  read(j, "dt_max", s.dt_max);
  read(j, "newton_tol", s.newton_tol);
  read(j, "newton_max_iter", s.newton_max_iter);
  read(j, "safety", s.safety);
  read(j, "freeze_jacobian", s.freeze_jacobian);
  std::string scheme = flux_scheme_name(cfg.flux_scheme);
  read(j, "flux_scheme", scheme);
  cfg.flux_scheme = flux_scheme_from_name(scheme);
  read(j, "moment_orders", cfg.moment_orders);
  read(j, "snapshot_times", cfg.snapshot_times);
  read(j, "out", cfg.out);
  read(j, "seed", cfg.seed);
  read(j, "max_series_rows", cfg.max_series_rows);
  if (j.contains("convergence")) {
    const auto& c = j.at("convergence");
    if (!c.is_object()) throw ConfigError("config: 'convergence' must be an object");
    for (const auto& [key, value] : c.items()) {
      if (key != "dks" && key != "dk_ref") throw ConfigError("config: unknown field 'convergence." + key + "'");
    }
    read(c, "dks", cfg.conv_dks);
    read(c, "dk_ref", cfg.conv_dk_ref);
  }
  return cfg;
}

json config_to_json(const RunConfig& cfg) {
  const auto& s = cfg.stepper;
  return json{
      {"scenario", cfg.scenario},
      {"table", cfg.table},
      {"L", cfg.L},
      {"dk", cfg.dk},
      {"T", cfg.T},
      {"rtol", s.rtol},
      {"atol", s.atol},
      {"dt_init", s.dt_init},
      {"dt_min", s.dt_min},
      {"dt_max", s.dt_max},
      {"newton_tol", s.newton_tol},
      {"newton_max_iter", s.newton_max_iter},
      {"safety", s.safety},
      {"freeze_jacobian", s.freeze_jacobian},
      {"flux_scheme", flux_scheme_name(cfg.flux_scheme)},
      {"moment_orders", cfg.moment_orders},
      {"snapshot_times", cfg.snapshot_times},
      {"out", cfg.out},
      {"seed", cfg.seed},
      {"max_series_rows", cfg.max_series_rows},
      {"convergence", {{"dks", cfg.conv_dks}, {"dk_ref", cfg.conv_dk_ref}}},
  };
}

RunConfig load_config(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config " + path.string());
  json j;
  try {
    j = json::parse(f);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

void resolve(RunConfig& cfg) {
  if (!(cfg.T >= 0.0) || !std::isfinite(cfg.T)) throw ConfigError("config: T must be finite and non-negative");
  cfg.stepper.T = cfg.T;
  cfg.stepper.validate();
  build_grid(cfg.L, cfg.dk);
  make_scenario(cfg);
  for (int r : cfg.moment_orders) {
    if (r < 0) throw ConfigError("config: moment orders must be non-negative");
  }
  for (double t : cfg.snapshot_times) {
    if (!(t >= 0.0 && t <= cfg.T)) throw ConfigError("config: snapshot time " + format_double(t) + " outside [0, T]");
  }
  if (cfg.max_series_rows < 2) throw ConfigError("config: max_series_rows must be >= 2");
  if (cfg.out.empty()) throw ConfigError("config: out must not be empty");
}

RunResult run(RunConfig cfg) {
  resolve(cfg);
  const Grid grid = build_grid(cfg.L, cfg.dk);
  const Scenario scenario = make_scenario(cfg);
  const fs::path out(cfg.out);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw ConfigError("cannot create " + out.string() + ": " + ec.message());

  RunResult result;
  std::vector<double> snap_times = cfg.snapshot_times;
  std::sort(snap_times.begin(), snap_times.end());
  std::size_t next_snap = 0;
  auto observe = [&](double t, std::span<const double> u, double dt) {
    result.records.push_back(make_record(t, dt, u, grid, cfg.moment_orders));
    while (next_snap < snap_times.size() && t >= snap_times[next_snap]) {
      const double req = snap_times[next_snap++];
      SnapshotRecord snap{req, t, "snapshot_" + format_double(req) + ".csv"};
      write_snapshot(out / snap.file, grid, u);
      result.snapshots.push_back(std::move(snap));
    }
  };

  const auto start = std::chrono::steady_clock::now();
  State u0 = project_initial(scenario, grid);
  observe(0.0, u0.u, 0.0);
  result.final_state = u0;
  try {
    auto adv = advance(u0, collision_system(grid, cfg.flux_scheme), cfg.stepper, observe);
    result.stats = std::move(adv.stats);
    result.final_state = std::move(adv.state);
  } catch (const SolverError& e) {
    result.error = e.what();
    result.stats.accepted = result.records.size() - 1;
  }
  result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  std::vector<double> times;
  times.reserve(result.records.size());
  for (const auto& rec : result.records) times.push_back(rec.t);
  result.sampled = log_spaced_indices(times, cfg.max_series_rows);
  write_series(out / "series.csv", cfg, result.records, result.sampled);

  double min_u = 0.0;
  for (const auto& rec : result.records) min_u = std::min(min_u, rec.min_u);
  json j = config_to_json(cfg);
  j["stats"] = {
      {"accepted_steps", result.stats.accepted},
      {"rejected_steps", result.stats.rejected},
      {"newton_failures", result.stats.nonconverged},
      {"newton_iterations", result.stats.newton_iterations},
      {"positivity_warnings", result.stats.positivity_warnings.size()},
      {"min_u", min_u},
      {"t_final", result.records.back().t},
      {"series_rows", result.sampled.size()},
      {"wall_seconds", result.wall_seconds},
  };
  json snaps = json::array();
  for (const auto& s : result.snapshots) snaps.push_back({{"requested", s.requested}, {"t", s.t}, {"file", s.file}});
  j["snapshots"] = std::move(snaps);
  if (result.error) {
    j["error"] = {{"kind", "solver_abort"}, {"message", *result.error}, {"t", result.records.back().t}};
  }
  write_json(out / "run.json", j);
  return result;
}

std::vector<ConvergenceRow> cmd_convergence(RunConfig cfg) {
  resolve(cfg);
  for (double dk : cfg.conv_dks) build_grid(cfg.L, dk);
  build_grid(cfg.L, cfg.conv_dk_ref);
  const fs::path out(cfg.out);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw ConfigError("cannot create " + out.string() + ": " + ec.message());

  const auto rows = convergence_study(make_scenario(cfg), cfg.L, cfg.T, cfg.conv_dks, cfg.conv_dk_ref, cfg.stepper,
                                      cfg.flux_scheme);
  auto f = open_out(out / "convergence.csv");
  f << "dk,L1_rel,Linf_rel,order_L1,order_Linf\n";
  auto cell = [](double v) { return std::isfinite(v) ? format_double(v) : std::string(); };
  for (const auto& r : rows) {
    f << format_double(r.dk) << ',' << format_double(r.l1_rel) << ',' << format_double(r.linf_rel) << ','
      << cell(r.order_l1) << ',' << cell(r.order_linf) << '\n';
  }
  return rows;
}

std::vector<double> SeriesTable::column(const std::string& name) const {
  const auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw ConfigError("series: missing column '" + name + "'");
  const auto c = static_cast<std::size_t>(it - columns.begin());
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& row : rows) out.push_back(row[c]);
  return out;
}

SeriesTable read_series(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read series " + path.string());
  SeriesTable table;
  std::string line;
  if (!std::getline(f, line)) throw ConfigError("series " + path.string() + " is empty");
  {
    std::stringstream ss(line);
    std::string name;
    while (std::getline(ss, name, ',')) table.columns.push_back(name);
  }
  std::size_t lineno = 1;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) {
      double v = 0.0;
      const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
      if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
        throw ConfigError("series line " + std::to_string(lineno) + ": bad number '" + field + "'");
      }
      row.push_back(v);
    }
    if (row.size() != table.columns.size()) {
      throw ConfigError("series line " + std::to_string(lineno) + ": expected " +
                        std::to_string(table.columns.size()) + " fields");
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

FitReport cmd_fit(const fs::path& series, double t_lo, double t_hi, const std::optional<fs::path>& out) {
  if (!(t_lo < t_hi)) throw ConfigError("fit: need t_lo < t_hi");
  const auto table = read_series(series);
  const auto t = table.column("t");
  const auto E = table.column("E");
  FitReport report{fit_decay(t, E, t_lo, t_hi), detect_phases(t, E)};

  json phases = json::array();
  for (const auto& p : report.phases) {
    phases.push_back({{"kind", phase_kind_name(p.kind)},
                      {"t_start", p.t_start},
                      {"t_end", p.t_end},
                      {"first_row", p.first},
                      {"last_row", p.last},
                      {"drift", p.drift}});
  }
  const auto& fit = report.fit;
  const json j{{"series", series.string()},
               {"t_lo", fit.t_lo},
               {"t_hi", fit.t_hi},
               {"samples", fit.samples},
               {"slope", fit.slope},
               {"intercept", number_or_null(fit.intercept)},
               {"residual", fit.residual},
               {"phases", std::move(phases)}};
  write_json(out.value_or(series.parent_path() / "fit.json"), j);
  return report;
}

}  // namespace wke
