#include "wke/grid.hpp"

#include <cmath>
#include <string>

#include "wke/errors.hpp"

namespace wke {

Grid::Grid(double L, double dk) {
  if (!(L > 0.0) || !(dk > 0.0) || !std::isfinite(L) || !std::isfinite(dk)) {
    throw ConfigError("grid: L and dk must be positive and finite (L=" + std::to_string(L) +
                      ", dk=" + std::to_string(dk) + ")");
  }
  const double ratio = L / dk;
  const double cells = std::round(ratio);
  if (std::abs(ratio - cells) > 1e-9 * ratio) {
    throw ConfigError("grid: L=" + std::to_string(L) + " is not an integer multiple of dk=" +
                      std::to_string(dk));
  }
  if (cells < 2.0) {
    throw ConfigError("grid: need at least 2 cells (L/dk=" + std::to_string(ratio) + ")");
  }

  const auto n = static_cast<std::size_t>(cells);
  L_ = L;
  dk_ = L / cells;
  midpoints_.resize(n);
  edges_.resize(n + 1);
  for (std::size_t i = 0; i <= n; ++i) edges_[i] = static_cast<double>(i) * dk_;
  for (std::size_t i = 0; i < n; ++i) midpoints_[i] = (static_cast<double>(i) + 0.5) * dk_;
}

Grid build_grid(double L, double dk) { return Grid(L, dk); }

}  // namespace wke
