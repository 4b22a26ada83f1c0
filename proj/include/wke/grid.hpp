#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace wke {

/**
 * Uniform finite-volume mesh of the truncated wavenumber domain [0, L].
 *
 * Cells K_i = [i*dk, (i+1)*dk) are indexed 0..M with midpoints
 * k_i = (i + 1/2)*dk, so (M+1)*dk = L. The collision sums identify
 * k_j + k_l with a midpoint index, which is why the mesh must be uniform.
 */
class Grid {
 public:
  /// Throws ConfigError unless L, dk > 0 and L/dk is an integer >= 2
  /// (relative tolerance 1e-9 on the ratio).
  Grid(double L, double dk);

  double L() const { return L_; }
  double dk() const { return dk_; }
  /// Largest cell index.
  std::size_t M() const { return midpoints_.size() - 1; }
  /// Number of cells, M + 1.
  std::size_t size() const { return midpoints_.size(); }

  double midpoint(std::size_t i) const { return midpoints_[i]; }
  /// Left edge of cell i, i*dk; edge(M+1) == L.
  double edge(std::size_t i) const { return edges_[i]; }

  std::span<const double> midpoints() const { return midpoints_; }
  std::span<const double> edges() const { return edges_; }

 private:
  double L_;
  double dk_;
  std::vector<double> midpoints_;
  std::vector<double> edges_;
};

Grid build_grid(double L, double dk);

}  // namespace wke
