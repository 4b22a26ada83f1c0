#include "wke/collision.hpp"

#include <algorithm>
#include <cassert>

#include "wke/errors.hpp"

namespace wke {

namespace {

using Index = std::ptrdiff_t;

// Per-cell quantities shared by the closed-form difference and the Jacobian.
struct CellSums {
  std::vector<double> a;       // dk * u_j
  std::vector<double> p;       // dk * u_j * k_j
  std::vector<double> prefix;  // sum_{j <= i} p_j
  std::vector<double> suffix;  // sum_{j >= i} p_j
};

CellSums cell_sums(std::span<const double> u, const Grid& grid) {
  const auto n = u.size();
  const double dk = grid.dk();
  const auto k = grid.midpoints();
  CellSums c;
  c.a.resize(n);
  c.p.resize(n);
  c.prefix.resize(n);
  c.suffix.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    c.a[j] = dk * u[j];
    c.p[j] = c.a[j] * k[j];
  }
  double acc = 0.0;
  for (std::size_t j = 0; j < n; ++j) c.prefix[j] = (acc += c.p[j]);
  acc = 0.0;
  for (std::size_t j = n; j-- > 0;) c.suffix[j] = (acc += c.p[j]);
  return c;
}

// Literal scheme, index bounds taken literally.

double literal_flux_half(std::span<const double> u, Index i, const Grid& grid) {
  const auto M = static_cast<Index>(grid.M());
  assert(static_cast<Index>(u.size()) == M + 1);
  assert(i >= -1 && i <= M);

  const CollisionKernel kernel(grid);
  const double dk = grid.dk();
  const auto k = grid.midpoints();
  auto a = [&](Index j) { return dk * u[static_cast<std::size_t>(j)]; };

  // forward transfer across the edge; l runs i..min(i+j, M)
  double t1 = 0.0;
  for (Index j = 0; j <= M; ++j) {
    double inner = 0.0;
    for (Index l = std::max<Index>(i, 0); l <= std::min(i + j, M); ++l) {
      inner += a(l) * kernel.diff2(j, l);
    }
    t1 += a(j) * inner;
  }

  // merging pairs with l in [i-j, j]; empty when i-j > j
  double t2 = 0.0;
  for (Index j = 0; j <= i; ++j) {
    double inner = 0.0;
    for (Index l = i - j; l <= j; ++l) inner += a(l) * kernel.sum2(j, l);
    t2 += a(j) * inner;
  }

  double t3 = 0.0;
  for (Index j = 0; j <= i; ++j) {
    double inner = 0.0;
    for (Index l = i; l <= M; ++l) inner += a(l) * kernel.prod(j, l);
    t3 += a(j) * inner;
  }

  double t4 = 0.0;
  for (Index j = 0; j <= i; ++j) {
    double inner = 0.0;
    for (Index l = 0; l <= j; ++l) inner += a(l) * kernel.prod(j, l);
    t4 += a(j) * inner;
  }

  auto self = [&](Index j) {
    const double v = u[static_cast<std::size_t>(j)];
    const double kj = k[static_cast<std::size_t>(j)];
    return dk * v * v * kj * kj;
  };
  double t5 = 0.0;
  for (Index j = 0; j <= i; ++j) t5 += self(j);

  // floor(i/2), with floor(-1/2) = -1
  const Index zeta = (i >= 0) ? i / 2 : -1;
  double t6 = 0.0;
  for (Index j = std::max<Index>(zeta, 0); j <= i; ++j) t6 += self(j);

  return 2.0 * (t1 - t2 - 4.0 * t3 - 4.0 * t4 - 2.0 * t5 - 2.0 * t6);
}

void literal_divergence(std::span<const double> u, const Grid& grid, std::span<double> out) {
  const auto n = static_cast<Index>(u.size());
  assert(u.size() == grid.size() && out.size() == u.size());

  const double dk = grid.dk();
  const auto k = grid.midpoints();
  const CellSums c = cell_sums(u, grid);
  const auto& a = c.a;

  for (Index i = 0; i < n; ++i) {
    const double edge2 = static_cast<double>(i) * dk * static_cast<double>(i) * dk;

    // d(t1): gain from l = i+j, loss from l = i-1; (k_j - k_{i+j})^2 = (i*dk)^2
    double gain = 0.0;
    for (Index j = 0; i + j < n; ++j) gain += a[j] * a[i + j];
    double loss = 0.0;
    if (i >= 1) {
      const double km = k[i - 1];
      for (Index j = 0; j < n; ++j) {
        const double d = k[j] - km;
        loss += a[j] * d * d;
      }
      loss *= a[i - 1];
    }
    const double d1 = edge2 * gain - loss;

    // d(t2): new row j = i minus the anti-diagonal j + l = i-1 with l <= j;
    // (k_j + k_{i-1-j})^2 = (i*dk)^2
    double row = 0.0;
    for (Index l = 0; l <= i; ++l) {
      const double s = k[i] + k[l];
      row += a[l] * s * s;
    }
    row *= a[i];
    double anti = 0.0;
    if (i >= 1) {
      const Index last = i - 1;
      for (Index j = (last + 1) / 2; j <= last; ++j) anti += a[j] * a[last - j];
    }
    const double d2 = row - edge2 * anti;

    const double d3 = c.prefix[i] * c.suffix[i] - (i >= 1 ? c.prefix[i - 1] * c.suffix[i - 1] : 0.0);
    const double d4 = c.p[i] * c.prefix[i];

    const double self_i = dk * u[i] * u[i] * k[i] * k[i];
    double self_dropped = 0.0;  // lower bound floor(i/2) moves up on even i
    if (i >= 2 && i % 2 == 0) {
      const auto m = static_cast<std::size_t>(i / 2 - 1);
      self_dropped = dk * u[m] * u[m] * k[m] * k[m];
    }
    const double d5 = self_i;
    const double d6 = self_i - self_dropped;

    out[i] = 2.0 * (d1 - d2 - 4.0 * d3 - 4.0 * d4 - 2.0 * d5 - 2.0 * d6);
  }
}

Eigen::MatrixXd literal_jacobian(std::span<const double> u, const Grid& grid) {
  const auto n = static_cast<Index>(u.size());
  assert(u.size() == grid.size());

  const double dk = grid.dk();
  const auto k = grid.midpoints();
  const CellSums c = cell_sums(u, grid);
  const auto& a = c.a;
  const auto& A = c.prefix;
  const auto& B = c.suffix;

  // rhs = d(a)/dk with a = dk*u, so d(rhs)/du = d(d)/da. Each row is
  // filled with the partials of the closed-form difference; the overall
  // factor 2 and the term multipliers are folded in.
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    const double edge2 = static_cast<double>(i) * dk * static_cast<double>(i) * dk;

    if (i >= 1) {
      for (Index m = 0; m < n; ++m) {
        double v = 0.0;
        if (i + m < n) v += a[i + m];
        if (m - i >= 0) v += a[m - i];
        J(i, m) += 2.0 * edge2 * v;
      }
      const double km = k[i - 1];
      double moment = 0.0;
      for (Index m = 0; m < n; ++m) {
        const double d = k[m] - km;
        moment += a[m] * d * d;
        J(i, m) -= 2.0 * a[i - 1] * d * d;
      }
      J(i, i - 1) -= 2.0 * moment;
    }

    double row = 0.0;
    for (Index m = 0; m <= i; ++m) {
      const double s = k[i] + k[m];
      row += a[m] * s * s;
      J(i, m) -= 2.0 * a[i] * s * s;
    }
    J(i, i) -= 2.0 * row;
    if (i >= 1) {
      const Index last = i - 1;
      for (Index m = 0; m <= last; ++m) {
        const double mult = (2 * m == last) ? 2.0 : 1.0;
        J(i, m) += 2.0 * edge2 * mult * a[last - m];
      }
    }

    const double Ai = A[i];
    const double Bi = B[i];
    const double Aprev = i >= 1 ? A[i - 1] : 0.0;
    const double Bprev = i >= 1 ? B[i - 1] : 0.0;
    for (Index m = 0; m < n; ++m) {
      double v = 0.0;
      if (m <= i) v += Bi;
      if (m >= i) v += Ai;
      if (m <= i - 1) v -= Bprev;
      if (m >= i - 1) v -= Aprev;
      if (m <= i) v += c.p[i];  // from the lower-triangle product term
      J(i, m) -= 8.0 * k[m] * v;
    }
    J(i, i) -= 8.0 * k[i] * Ai;

    J(i, i) -= 16.0 * a[i] * k[i] * k[i] / dk;
    if (i >= 2 && i % 2 == 0) {
      const Index m = i / 2 - 1;
      J(i, m) += 8.0 * a[m] * k[m] * k[m] / dk;
    }
  }
  return J;
}

// Edge-centred scheme. The flux at c = (i+1)*dk integrates over cells with
// the fraction of each cell that lies inside the exact domain.

std::vector<double> self_terms(std::span<const double> u, const Grid& grid) {
  const double dk = grid.dk();
  const auto k = grid.midpoints();
  std::vector<double> s(u.size());
  for (std::size_t j = 0; j < u.size(); ++j) s[j] = dk * u[j] * u[j] * k[j] * k[j];
  return s;
}

// The c/2 edge cuts cell m in half on every other flux. The value of each
// half is s_m/2 -/+ delta with delta from linear interpolation,
// (s_{m+1} - s_{m-1})/16, clamped to |delta| <= s_m/2 so both halves stay
// non-negative.
struct HalfSplit {
  double delta;
  int clamped;  // 0, or the sign of the active bound
};

HalfSplit half_split(std::span<const double> s, Index m) {
  const auto n = static_cast<Index>(s.size());
  const double left = m >= 1 ? s[m - 1] : 0.0;
  const double right = m + 1 < n ? s[m + 1] : 0.0;
  const double d = (right - left) / 16.0;
  const double bound = 0.5 * s[m];
  if (d >= bound) return {bound, 1};
  if (d <= -bound) return {-bound, -1};
  return {d, 0};
}

double consistent_flux_half(std::span<const double> u, Index i, const Grid& grid) {
  const auto M = static_cast<Index>(grid.M());
  const CollisionKernel kernel(grid);
  const double dk = grid.dk();
  const double c = static_cast<double>(i + 1) * dk;
  auto a = [&](Index j) { return (j >= 0 && j <= M) ? dk * u[static_cast<std::size_t>(j)] : 0.0; };
  const Index top = std::min(i, M);

  // c <= k2 <= c + k1; the line k2 = c + k1 halves cell l = i+1+j
  double t1 = 0.0;
  for (Index j = 0; j <= M; ++j) {
    double inner = 0.0;
    for (Index l = std::max<Index>(i + 1, 0); l <= std::min(i + j, M); ++l) inner += a(l) * kernel.diff2(j, l);
    inner += 0.5 * a(i + 1 + j) * c * c;
    t1 += a(j) * inner;
  }

  // k1 <= c, c - k1 <= k2 <= k1: half weight on l = j and on j + l = i
  double t2 = 0.0;
  for (Index j = 0; j <= top; ++j) {
    for (Index l = std::max<Index>(i - j, 0); l <= j; ++l) {
      double w = (l == j) ? 0.5 : 1.0;
      if (j + l == i) w *= 0.5;
      t2 += w * a(j) * a(l) * kernel.sum2(j, l);
    }
  }

  double t3 = 0.0;
  for (Index j = 0; j <= top; ++j) {
    for (Index l = i + 1; l <= M; ++l) t3 += a(j) * a(l) * kernel.prod(j, l);
  }

  double t4 = 0.0;
  for (Index j = 0; j <= top; ++j) {
    for (Index l = 0; l <= j; ++l) t4 += (l == j ? 0.5 : 1.0) * a(j) * a(l) * kernel.prod(j, l);
  }

  const auto s = self_terms(u, grid);
  double t5 = 0.0;
  for (Index j = 0; j <= top; ++j) t5 += s[static_cast<std::size_t>(j)];

  // [c/2, c]: c/2 is an edge for odd i and the middle of cell i/2 for even i
  double t6 = 0.0;
  if (i >= 0) {
    Index first = (i + 1) / 2;
    if (i % 2 == 0) {
      const Index m = i / 2;
      t6 += 0.5 * s[static_cast<std::size_t>(m)] + half_split(s, m).delta;
      first = m + 1;
    }
    for (Index j = first; j <= top; ++j) t6 += s[static_cast<std::size_t>(j)];
  }

  return 2.0 * (t1 - t2 - 4.0 * t3 - 4.0 * t4 - 2.0 * t5 - 2.0 * t6);
}

struct ConsistentSums {
  std::vector<double> a;
  std::vector<double> p;
  std::vector<double> s;
  std::vector<double> suffix;  // sum_{j >= i} p_j, with a trailing zero
  std::vector<double> corr;    // sum_j a_j a_{j+r}, with a trailing zero
  std::vector<double> conv;    // sum_{j <= r} a_j a_{r-j}
};

ConsistentSums consistent_sums(std::span<const double> u, const Grid& grid) {
  const auto n = static_cast<Index>(u.size());
  const double dk = grid.dk();
  const auto k = grid.midpoints();
  ConsistentSums c;
  c.a.resize(n);
  c.p.resize(n);
  c.s = self_terms(u, grid);
  c.suffix.assign(n + 1, 0.0);
  c.corr.assign(n + 1, 0.0);
  c.conv.assign(n, 0.0);
  for (Index j = 0; j < n; ++j) {
    c.a[j] = dk * u[j];
    c.p[j] = c.a[j] * k[j];
  }
  for (Index j = n; j-- > 0;) c.suffix[j] = c.suffix[j + 1] + c.p[j];
  for (Index r = 0; r < n; ++r) {
    double acc = 0.0;
    for (Index j = 0; j + r < n; ++j) acc += c.a[j] * c.a[j + r];
    c.corr[r] = acc;
    acc = 0.0;
    for (Index j = 0; j <= r; ++j) acc += c.a[j] * c.a[r - j];
    c.conv[r] = acc;
  }
  return c;
}

void consistent_divergence(std::span<const double> u, const Grid& grid, std::span<double> out) {
  const auto n = static_cast<Index>(u.size());
  const double dk = grid.dk();
  const auto k = grid.midpoints();
  const ConsistentSums c = consistent_sums(u, grid);
  const auto& a = c.a;

  for (Index i = 0; i < n; ++i) {
    const double e0 = static_cast<double>(i) * dk;
    const double e1 = static_cast<double>(i + 1) * dk;

    // t1: both halved cells move along the edge; loss from cell i only
    double moment = 0.0;
    for (Index j = 0; j < n; ++j) {
      const double d = k[j] - k[i];
      moment += a[j] * d * d;
    }
    const double d1 = 0.5 * e0 * e0 * c.corr[i] + 0.5 * e1 * e1 * c.corr[i + 1] - a[i] * moment;

    // t2: new column j = i minus the strip between the anti-diagonals
    // j + l = i - 1 and j + l = i, where (k_j + k_l)^2 is constant
    double row = 0.0;
    for (Index l = 0; l <= i; ++l) {
      const double sk = k[i] + k[l];
      row += (l < i ? 1.0 : 0.5) * a[l] * sk * sk;
    }
    const double strip = 0.25 * e0 * e0 * (i >= 1 ? c.conv[i - 1] : 0.0) + 0.25 * e1 * e1 * c.conv[i];
    const double d2 = a[i] * row - strip;

    // t3 + t4 telescope to cell i alone
    const double d34 = c.p[i] * (c.suffix[i] - 0.5 * c.p[i]);

    // t5 + t6: cell i enters both, and half of cell i/2 leaves t6
    const Index m = i / 2;
    const double delta = half_split(c.s, m).delta;
    const double half = 0.5 * c.s[m] + (i % 2 == 1 ? delta : -delta);

    out[i] = 2.0 * (d1 - d2 - 4.0 * d34 - 4.0 * c.s[i] + 2.0 * half);
  }
}

Eigen::MatrixXd consistent_jacobian(std::span<const double> u, const Grid& grid) {
  const auto n = static_cast<Index>(u.size());
  const double dk = grid.dk();
  const auto k = grid.midpoints();
  const ConsistentSums c = consistent_sums(u, grid);
  const auto& a = c.a;
  auto at = [&](Index j) { return (j >= 0 && j < n) ? a[j] : 0.0; };
  // d s_j / d a_j
  auto ds = [&](Index j) { return 2.0 * a[j] * k[j] * k[j] / dk; };

  Eigen::MatrixXd J(n, n);
  for (Index i = 0; i < n; ++i) {
    const double e0 = static_cast<double>(i) * dk;
    const double e1 = static_cast<double>(i + 1) * dk;
    double moment = 0.0;
    double row = 0.0;
    for (Index m = 0; m < n; ++m) {
      const double d = k[m] - k[i];
      moment += a[m] * d * d;
      double v = 0.5 * e0 * e0 * (at(m + i) + at(m - i)) + 0.5 * e1 * e1 * (at(m + i + 1) + at(m - i - 1)) -
                 a[i] * d * d;
      if (m <= i) {
        const double sk = k[i] + k[m];
        const double w = m < i ? 1.0 : 0.5;
        row += w * a[m] * sk * sk;
        v -= a[i] * w * sk * sk;
        v += 0.5 * e1 * e1 * a[i - m];
      }
      if (m <= i - 1) v += 0.5 * e0 * e0 * a[i - 1 - m];
      if (m >= i) v -= 4.0 * c.p[i] * k[m];
      J(i, m) = 2.0 * v;
    }
    J(i, i) += 2.0 * (-moment - row - 4.0 * k[i] * (c.suffix[i] - c.p[i]) - 4.0 * ds(i));

    const Index m = i / 2;
    const double sign = (i % 2 == 1) ? 1.0 : -1.0;
    J(i, m) += 2.0 * ds(m);
    const HalfSplit split = half_split(c.s, m);
    if (split.clamped == 0) {
      if (m + 1 < n) J(i, m + 1) += 4.0 * sign * ds(m + 1) / 16.0;
      if (m >= 1) J(i, m - 1) -= 4.0 * sign * ds(m - 1) / 16.0;
    } else {
      J(i, m) += 4.0 * sign * split.clamped * 0.5 * ds(m);
    }
  }
  return J;
}

}  // namespace

FluxScheme flux_scheme_from_name(const std::string& name) {
  if (name == "consistent") return FluxScheme::Consistent;
  if (name == "literal") return FluxScheme::Literal;
  throw ConfigError("unknown flux scheme '" + name + "' (expected consistent or literal)");
}

std::string flux_scheme_name(FluxScheme scheme) {
  return scheme == FluxScheme::Literal ? "literal" : "consistent";
}

double flux_half(std::span<const double> u, std::ptrdiff_t i, const Grid& grid, FluxScheme scheme) {
  assert(u.size() == grid.size());
  assert(i >= -1 && i <= static_cast<Index>(grid.M()));
  return scheme == FluxScheme::Literal ? literal_flux_half(u, i, grid) : consistent_flux_half(u, i, grid);
}

void flux_divergence(std::span<const double> u, const Grid& grid, std::span<double> out, FluxScheme scheme) {
  assert(u.size() == grid.size() && out.size() == u.size());
  if (scheme == FluxScheme::Literal) {
    literal_divergence(u, grid, out);
  } else {
    consistent_divergence(u, grid, out);
  }
}

std::vector<double> flux_divergence(std::span<const double> u, const Grid& grid, FluxScheme scheme) {
  std::vector<double> out(u.size());
  flux_divergence(u, grid, out, scheme);
  return out;
}

void rhs(std::span<const double> u, const Grid& grid, std::span<double> out, FluxScheme scheme) {
  flux_divergence(u, grid, out, scheme);
  const double inv_dk = 1.0 / grid.dk();
  for (double& v : out) v *= inv_dk;
}

std::vector<double> rhs(std::span<const double> u, const Grid& grid, FluxScheme scheme) {
  std::vector<double> out(u.size());
  rhs(u, grid, out, scheme);
  return out;
}

Eigen::MatrixXd rhs_jacobian(std::span<const double> u, const Grid& grid, FluxScheme scheme) {
  assert(u.size() == grid.size());
  return scheme == FluxScheme::Literal ? literal_jacobian(u, grid) : consistent_jacobian(u, grid);
}

}  // namespace wke
