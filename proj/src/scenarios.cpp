#include "wke/scenarios.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <sstream>

#include "wke/errors.hpp"

namespace wke {

namespace {

// Gauss-Legendre nodes and weights on [-1, 1]
constexpr std::array<double, 5> kGaussNodes{
    -0.9061798459386639927976269, -0.5384693101056830910363144, 0.0,
    0.5384693101056830910363144, 0.9061798459386639927976269};
constexpr std::array<double, 5> kGaussWeights{
    0.2369268850561890875142640, 0.4786286704993664680412915, 0.5688888888888888888888889,
    0.4786286704993664680412915, 0.2369268850561890875142640};

double mollifier(double k) {
  const double r = std::abs(k - 15.0);
  if (r >= 1.0) return 0.0;
  return std::exp(1.0 / (10.0 * (r * r - 1.0)));
}

double disc_line(double k) {
  if (k < 20.0 || k > 150.0) return 0.0;
  return 1.0 - (k - 20.0) / 130.0;
}

double triple_bump(double k) {
  auto bump = [k](double centre) {
    const double x = k - centre;
    return std::exp(-x * x / 100.0);
  };
  return 0.1 * (bump(50.0) + 0.5 * bump(75.0) + bump(100.0));
}

}  // namespace

const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names{"mollifier", "disc_line", "triple_bump", "tabulated"};
  return names;
}

Scenario Scenario::from_name(const std::string& name) {
  if (name == "mollifier") return {ScenarioKind::Mollifier, name, {30.0, 100.0}};
  if (name == "disc_line") return {ScenarioKind::DiscLine, name, {200.0, 300.0}};
  if (name == "triple_bump") return {ScenarioKind::TripleBump, name, {200.0, 300.0}};
  if (name == "tabulated") throw ConfigError("scenario: 'tabulated' requires a table file");
  throw ConfigError("scenario: unknown name '" + name + "'");
}

Scenario Scenario::from_table(std::vector<std::pair<double, double>> points) {
  if (points.size() < 2) throw ConfigError("scenario: table needs at least two points");
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto [k, g] = points[i];
    if (!std::isfinite(k) || !std::isfinite(g) || k < 0.0 || g < 0.0) {
      throw ConfigError("scenario: table entries must be finite with k >= 0 and g0 >= 0");
    }
    if (i > 0 && !(k > points[i - 1].first)) throw ConfigError("scenario: table k must be strictly increasing");
  }
  Scenario s(ScenarioKind::Tabulated, "tabulated", {});
  s.table_ = std::move(points);
  return s;
}

Scenario Scenario::load_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("scenario: cannot open table " + path.string());
  std::vector<std::pair<double, double>> points;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream fields(line);
    double k = 0.0, g = 0.0;
    if (!(fields >> k >> g)) {
      if (first) {
        first = false;
        continue;
      }
      throw ConfigError("scenario: malformed table line '" + line + "'");
    }
    first = false;
    points.emplace_back(k, g);
  }
  return from_table(std::move(points));
}

double Scenario::g0(double k) const {
  switch (kind_) {
    case ScenarioKind::Mollifier: return mollifier(k);
    case ScenarioKind::DiscLine: return disc_line(k);
    case ScenarioKind::TripleBump: return triple_bump(k);
    case ScenarioKind::Tabulated: {
      if (k < table_.front().first || k > table_.back().first) return 0.0;
      auto hi = std::upper_bound(table_.begin(), table_.end(), k,
                                 [](double x, const auto& p) { return x < p.first; });
      if (hi == table_.end()) return table_.back().second;
      auto lo = hi - 1;
      const double s = (k - lo->first) / (hi->first - lo->first);
      return lo->second + s * (hi->second - lo->second);
    }
  }
  return 0.0;
}

double eval_g0(const Scenario& scenario, double k) { return scenario.g0(k); }

State project_initial(const Scenario& scenario, const Grid& grid) {
  State state;
  state.u.resize(grid.size());
  // the mollifier is flat to all orders at the ends of its support but very
  // steep just inside them; one 5-point panel per cell is off by 2e-3 there
  constexpr int panels = 32;
  const double h = grid.dk() / panels;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double avg = 0.0;
    for (int p = 0; p < panels; ++p) {
      const double centre = grid.edge(i) + (p + 0.5) * h;
      for (std::size_t q = 0; q < kGaussNodes.size(); ++q) {
        avg += kGaussWeights[q] * scenario.g0(centre + 0.5 * h * kGaussNodes[q]);
      }
    }
    state.u[i] = 0.5 * avg / panels;
  }
  return state;
}

}  // namespace wke
