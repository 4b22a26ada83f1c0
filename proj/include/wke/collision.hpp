#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wke/grid.hpp"

namespace wke {

/// Cell values u_i of the solved variable k*g(t, k) at time t.
struct State {
  double t = 0.0;
  std::vector<double> u;
};

/**
 * Pairwise kernel weights of the quadratic collision flux over grid
 * midpoints: (k_j - k_l)^2, (k_j + k_l)^2 and k_j*k_l.
 *
 * Weights are evaluated on the fly from the midpoints; a full table would
 * cost 3*(M+1)^2 doubles, which is prohibitive for the finest grids used
 * in convergence studies.
 */
class CollisionKernel {
 public:
  explicit CollisionKernel(const Grid& grid) : k_(grid.midpoints()) {}

  double diff2(std::size_t j, std::size_t l) const {
    const double d = k_[j] - k_[l];
    return d * d;
  }
  double sum2(std::size_t j, std::size_t l) const {
    const double s = k_[j] + k_[l];
    return s * s;
  }
  double prod(std::size_t j, std::size_t l) const { return k_[j] * k_[l]; }

 private:
  std::span<const double> k_;
};

/**
 * Quadrature of the collision flux at the cell edges.
 *
 * Consistent: midpoint rule over the exact integration domains at the edge
 * c = k_{i+1/2}. Cells cut by a domain boundary get the covered fraction
 * (1/2 or 1/4); the half cell at c/2 uses a linearly interpolated value,
 * limited so both halves stay non-negative. Second order, and every loss
 * term of cell i is proportional to u_i.
 *
 * Literal: the six-term sum with inner bounds l >= i and j >= floor(i/2)
 * taken literally. Not consistent (the c/2 term lands on even cells only)
 * and not positivity preserving; kept for reproduction.
 */
enum class FluxScheme { Consistent, Literal };

/// "consistent" or "literal"; throws ConfigError otherwise.
FluxScheme flux_scheme_from_name(const std::string& name);
std::string flux_scheme_name(FluxScheme scheme);

/**
 * Discrete collision flux Q_{i+1/2} through the right edge of cell i,
 * evaluated term by term as a six-term double sum. O(M^2) per call.
 *
 * Valid for -1 <= i <= M. Indices outside 0..M contribute zero, which
 * truncates the semi-infinite integrals at L. i = -1 gives the left ghost
 * flux Q_{-1/2}.
 */
double flux_half(std::span<const double> u, std::ptrdiff_t i, const Grid& grid,
                 FluxScheme scheme = FluxScheme::Consistent);

/**
 * Telescoped difference d_i = Q_{i+1/2} - Q_{i-1/2} for every cell, in
 * closed form. O(M^2) total.
 */
std::vector<double> flux_divergence(std::span<const double> u, const Grid& grid,
                                    FluxScheme scheme = FluxScheme::Consistent);
void flux_divergence(std::span<const double> u, const Grid& grid, std::span<double> out,
                     FluxScheme scheme = FluxScheme::Consistent);

/// Semi-discrete time derivative du_i/dt = d_i / dk.
std::vector<double> rhs(std::span<const double> u, const Grid& grid, FluxScheme scheme = FluxScheme::Consistent);
void rhs(std::span<const double> u, const Grid& grid, std::span<double> out,
         FluxScheme scheme = FluxScheme::Consistent);

/// Exact Jacobian of rhs at u, dense (M+1)x(M+1), assembled in O(M^2).
Eigen::MatrixXd rhs_jacobian(std::span<const double> u, const Grid& grid,
                             FluxScheme scheme = FluxScheme::Consistent);

}  // namespace wke
