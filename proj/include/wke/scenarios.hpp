#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "wke/collision.hpp"
#include "wke/grid.hpp"

namespace wke {

enum class ScenarioKind { Mollifier, DiscLine, TripleBump, Tabulated };

/**
 * Initial energy density g0(k) together with the truncations and final
 * time it is normally run with.
 *
 *  - mollifier:   exp(1/(10(|k-15|^2 - 1))) for |k-15| < 1, else 0
 *  - disc_line:   1 - (k-20)/130 on [20, 150], else 0
 *  - triple_bump: three Gaussians of width 10 centred at 50, 75, 100
 *  - tabulated:   piecewise-linear through (k, g0) pairs, 0 outside
 */
class Scenario {
 public:
  /// Throws ConfigError for unknown names; "tabulated" needs from_table.
  static Scenario from_name(const std::string& name);
  /// Points must have strictly increasing k >= 0 and g0 >= 0.
  static Scenario from_table(std::vector<std::pair<double, double>> points);
  /// Reads "k,g0" lines; a non-numeric first line is taken as a header.
  static Scenario load_table(const std::filesystem::path& path);

  ScenarioKind kind() const { return kind_; }
  const std::string& name() const { return name_; }
  const std::vector<double>& recommended_L() const { return recommended_L_; }
  double recommended_T() const { return 1e4; }
  double recommended_dk() const { return 0.5; }

  double g0(double k) const;

 private:
  Scenario(ScenarioKind kind, std::string name, std::vector<double> Ls)
      : kind_(kind), name_(std::move(name)), recommended_L_(std::move(Ls)) {}

  ScenarioKind kind_;
  std::string name_;
  std::vector<double> recommended_L_;
  std::vector<std::pair<double, double>> table_;
};

/// Names accepted by Scenario::from_name.
const std::vector<std::string>& scenario_names();

double eval_g0(const Scenario& scenario, double k);

/// Cell averages of g0 at t = 0: 5-point Gauss-Legendre on each of 32 equal
/// panels of every cell.
State project_initial(const Scenario& scenario, const Grid& grid);

}  // namespace wke
