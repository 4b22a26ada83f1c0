#pragma once

// Shared helpers for the unit and acceptance suites.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "wke/collision.hpp"

namespace wke::testing {

inline std::vector<double> random_state(std::mt19937_64& rng, std::size_t n, double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> u(n);
  for (double& v : u) v = dist(rng);
  return u;
}

inline double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

inline double norm2(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

/// Relative mismatch between J(u)*v and the central difference
/// (rhs(u + h v) - rhs(u - h v)) / 2h with h = 1e-6 * |u| / |v|.
inline double jacobian_fd_mismatch(const std::vector<double>& u, const std::vector<double>& v, const Grid& g,
                                   FluxScheme scheme = FluxScheme::Consistent) {
  const double h = 1e-6 * norm2(u) / norm2(v);
  std::vector<double> up(u), um(u);
  for (std::size_t i = 0; i < u.size(); ++i) {
    up[i] += h * v[i];
    um[i] -= h * v[i];
  }
  const auto rp = rhs(up, g, scheme);
  const auto rm = rhs(um, g, scheme);
  const Eigen::MatrixXd J = rhs_jacobian(u, g, scheme);
  const Eigen::VectorXd Jv = J * Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  double diff = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double fd = (rp[i] - rm[i]) / (2.0 * h);
    diff = std::max(diff, std::abs(fd - Jv[static_cast<Eigen::Index>(i)]));
    scale = std::max(scale, std::abs(Jv[static_cast<Eigen::Index>(i)]));
  }
  return diff / scale;
}

// Direct-form differences Q_{i+1/2} - Q_{i-1/2}, plus the largest |Q| seen,
// which sets the roundoff scale of the comparison.
struct DirectDifference {
  std::vector<double> d;
  std::vector<double> flux;  // Q_{-1/2} .. Q_{M+1/2}
  double scale = 0.0;
};

inline DirectDifference direct_difference(std::span<const double> u, const Grid& g, FluxScheme scheme) {
  DirectDifference out;
  for (std::ptrdiff_t i = -1; i <= static_cast<std::ptrdiff_t>(g.M()); ++i) {
    out.flux.push_back(flux_half(u, i, g, scheme));
    out.scale = std::max(out.scale, std::abs(out.flux.back()));
  }
  for (std::size_t i = 0; i < u.size(); ++i) out.d.push_back(out.flux[i + 1] - out.flux[i]);
  return out;
}

}  // namespace wke::testing
