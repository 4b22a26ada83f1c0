#include "wke/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <thread>
#include <limits>
#include <stdexcept>
#include <string>

#include "wke/errors.hpp"

namespace wke {

namespace {

struct Line {
  double slope = 0.0;
  double intercept = 0.0;
  double ssr = 0.0;
};

// Least squares on centred data; a single point (or identical x) gives a
// flat line through the mean.
Line fit_line(std::span<const double> x, std::span<const double> y) {
  const auto n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  Line l;
  l.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  l.intercept = my - l.slope * mx;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (l.intercept + l.slope * x[i]);
    l.ssr += r * r;
  }
  return l;
}

}  // namespace

double moment(std::span<const double> u, const Grid& grid, int r) {
  const double dk = grid.dk();
  double m = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) m += dk * u[j] * std::pow(grid.midpoint(j), r + 1);
  return m;
}

DiagnosticsRecord make_record(double t, double dt, std::span<const double> u, const Grid& grid,
                              std::span<const int> orders) {
  DiagnosticsRecord rec;
  rec.t = t;
  rec.dt = dt;
  for (int r : orders) rec.moments.push_back(moment(u, grid, r));
  rec.min_u = u.empty() ? 0.0 : *std::min_element(u.begin(), u.end());
  return rec;
}

namespace {

// Unique indices picked by `targets` log-spaced times, plus the fixed ends.
std::vector<std::size_t> pick_log_spaced(std::span<const double> t, std::size_t first_pos, std::size_t targets) {
  const std::size_t n = t.size();
  std::vector<std::size_t> out{0, n - 1, first_pos};
  const double lo = std::log(t[first_pos]);
  const double hi = std::log(t[n - 1]);
  for (std::size_t q = 1; q <= targets; ++q) {
    const double target = lo + (hi - lo) * static_cast<double>(q) / static_cast<double>(targets + 1);
    auto it = std::lower_bound(t.begin() + static_cast<std::ptrdiff_t>(first_pos), t.end(), std::exp(target));
    auto idx = static_cast<std::size_t>(it - t.begin());
    if (idx > first_pos && (idx == n || target - std::log(t[idx - 1]) < std::log(t[idx]) - target)) --idx;
    out.push_back(idx);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace

std::vector<std::size_t> log_spaced_indices(std::span<const double> t, std::size_t max_rows) {
  const std::size_t n = t.size();
  std::vector<std::size_t> out;
  if (n <= max_rows) {
    for (std::size_t i = 0; i < n; ++i) out.push_back(i);
    return out;
  }
  if (max_rows == 0) return out;
  const auto first_pos = static_cast<std::size_t>(std::upper_bound(t.begin(), t.end(), 0.0) - t.begin());
  if (max_rows < 3 || first_pos + 1 >= n) {
    out = {0, n - 1};
    if (max_rows == 1) out.pop_back();
    return out;
  }
  // Where samples are sparse several targets land on one sample, so the
  // number of targets is raised until the unique picks fill the budget.
  std::size_t lo = 0, hi = n;
  out = pick_log_spaced(t, first_pos, lo);
  while (lo + 1 < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    auto picked = pick_log_spaced(t, first_pos, mid);
    if (picked.size() <= max_rows) {
      lo = mid;
      out = std::move(picked);
    } else {
      hi = mid;
    }
  }
  return out;
}

DecayFit fit_decay(std::span<const double> t, std::span<const double> E, double t_lo, double t_hi) {
  std::vector<double> x, y;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] < t_lo || t[i] > t_hi) continue;
    if (!(t[i] > 0.0) || !(E[i] > 0.0)) {
      throw NonPositiveValue("fit_decay: t and E must be positive inside the window");
    }
    x.push_back(std::log(t[i]));
    y.push_back(std::log(E[i]));
  }
  if (x.size() < 10) {
    throw InsufficientSamples("fit_decay: " + std::to_string(x.size()) + " samples in [" + std::to_string(t_lo) +
                              ", " + std::to_string(t_hi) + "], need 10");
  }
  const Line l = fit_line(x, y);
  return {t_lo, t_hi, l.slope, l.intercept, std::sqrt(l.ssr), x.size()};
}

std::string phase_kind_name(PhaseKind kind) { return kind == PhaseKind::Conserved ? "CONSERVED" : "DECAYING"; }

std::vector<Phase> detect_phases(std::span<const double> t, std::span<const double> E, double flat_tol) {
  constexpr std::size_t window = 7;
  constexpr std::ptrdiff_t reach = 3;  // boundary search radius
  constexpr std::ptrdiff_t context = 10;

  std::vector<std::size_t> src;
  std::vector<double> x, y;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!(t[i] > 0.0)) continue;
    if (!(E[i] > 0.0)) throw NonPositiveValue("detect_phases: E must be positive");
    src.push_back(i);
    x.push_back(std::log(t[i]));
    y.push_back(std::log(E[i]));
  }
  const std::size_t n = x.size();
  if (n < window) {
    throw InsufficientSamples("detect_phases: " + std::to_string(n) + " samples with t > 0, need " +
                              std::to_string(window));
  }

  std::vector<PhaseKind> kind(n);
  for (std::size_t p = 0; p < n; ++p) {
    const std::size_t w0 = std::min(p >= window / 2 ? p - window / 2 : 0, n - window);
    const std::span<const double> xs(x.data() + w0, window), ys(y.data() + w0, window);
    kind[p] = std::abs(fit_line(xs, ys).slope) < flat_tol ? PhaseKind::Conserved : PhaseKind::Decaying;
  }

  // run starts, in usable-sample indices
  std::vector<std::ptrdiff_t> starts{0};
  for (std::size_t p = 1; p < n; ++p) {
    if (kind[p] != kind[p - 1]) starts.push_back(static_cast<std::ptrdiff_t>(p));
  }
  std::vector<PhaseKind> run_kind;
  for (auto s : starts) run_kind.push_back(kind[static_cast<std::size_t>(s)]);
  const auto total = static_cast<std::ptrdiff_t>(n);
  for (std::size_t r = 1; r < starts.size(); ++r) {
    const std::ptrdiff_t b = starts[r];
    const std::ptrdiff_t prev = starts[r - 1];
    const std::ptrdiff_t next = r + 1 < starts.size() ? starts[r + 1] : total;
    const std::ptrdiff_t lo = std::max(prev, b - context);
    const std::ptrdiff_t hi = std::min(next, b + context + 1);  // exclusive
    double best = std::numeric_limits<double>::infinity();
    std::ptrdiff_t best_c = b;
    // nearest candidates first so ties stay close to the threshold crossing
    for (std::ptrdiff_t off = 0; off <= reach; ++off) {
      for (std::ptrdiff_t c : {b - off, b + off}) {
        if (off == 0 && c != b - off) continue;
        if (c <= prev || c >= next) continue;
        const auto left = fit_line(std::span<const double>(x.data() + lo, static_cast<std::size_t>(c - lo)),
                                   std::span<const double>(y.data() + lo, static_cast<std::size_t>(c - lo)));
        const auto right = fit_line(std::span<const double>(x.data() + c, static_cast<std::size_t>(hi - c)),
                                    std::span<const double>(y.data() + c, static_cast<std::size_t>(hi - c)));
        const double ssr = left.ssr + right.ssr;
        if (!std::isfinite(best) || ssr < best - 1e-14 * (1.0 + best)) {
          best = ssr;
          best_c = c;
        }
      }
    }
    starts[r] = best_c;
  }

  std::vector<Phase> phases;
  for (std::size_t r = 0; r < starts.size(); ++r) {
    const auto a = static_cast<std::size_t>(starts[r]);
    const auto z = static_cast<std::size_t>((r + 1 < starts.size() ? starts[r + 1] : total) - 1);
    Phase ph{run_kind[r]};
    ph.first = src[a];
    ph.last = src[z];
    ph.t_start = t[ph.first];
    ph.t_end = t[ph.last];
    for (std::size_t p = a; p <= z; ++p) {
      ph.drift = std::max(ph.drift, std::abs(E[src[p]] - E[src[a]]) / E[src[a]]);
    }
    phases.push_back(ph);
  }
  return phases;
}

std::vector<double> interpolate_linear(std::span<const double> x, std::span<const double> y,
                                       std::span<const double> at) {
  if (x.size() < 2 || x.size() != y.size()) throw std::invalid_argument("interpolate_linear: need >= 2 nodes");
  std::vector<double> out(at.size());
  for (std::size_t q = 0; q < at.size(); ++q) {
    auto it = std::upper_bound(x.begin(), x.end(), at[q]);
    auto j = static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - x.begin() - 1, 0));
    j = std::min(j, x.size() - 2);
    const double th = (at[q] - x[j]) / (x[j + 1] - x[j]);
    out[q] = (1.0 - th) * y[j] + th * y[j + 1];
  }
  return out;
}

std::vector<ConvergenceRow> convergence_table(const GridSolution& reference, std::span<const GridSolution> runs) {
  const auto kref = reference.grid.midpoints();
  double ref_l1 = 0.0, ref_max = 0.0;
  for (double v : reference.u) {
    ref_l1 += std::abs(v);
    ref_max = std::max(ref_max, std::abs(v));
  }
  std::vector<ConvergenceRow> rows;
  for (const auto& run : runs) {
    const auto interp = interpolate_linear(run.grid.midpoints(), run.u, kref);
    double e1 = 0.0, emax = 0.0;
    for (std::size_t i = 0; i < interp.size(); ++i) {
      const double d = std::abs(interp[i] - reference.u[i]);
      e1 += d;
      emax = std::max(emax, d);
    }
    ConvergenceRow row{run.grid.dk(), e1 / ref_l1, emax / ref_max};
    if (rows.empty()) {
      row.order_l1 = row.order_linf = std::numeric_limits<double>::quiet_NaN();
    } else {
      const auto& p = rows.back();
      const double h = std::log(p.dk / row.dk);
      row.order_l1 = std::log(p.l1_rel / row.l1_rel) / h;
      row.order_linf = std::log(p.linf_rel / row.linf_rel) / h;
    }
    rows.push_back(row);
  }
  return rows;
}

std::vector<ConvergenceRow> convergence_study(const Scenario& scenario, double L, double T, std::span<const double> dks,
                                              double dk_ref, const StepperConfig& cfg, FluxScheme scheme) {
  if (dks.size() < 2) throw ConfigError("convergence: need at least two cell widths");
  for (std::size_t i = 1; i < dks.size(); ++i) {
    if (!(dks[i] < dks[i - 1])) throw ConfigError("convergence: cell widths must be strictly decreasing");
  }
  if (!(dk_ref <= dks.back())) throw ConfigError("convergence: reference width must not exceed the finest width");

  StepperConfig c = cfg;
  c.T = T;
  auto solve = [&](double dk) {
    Grid grid(L, dk);
    auto u = advance(project_initial(scenario, grid), collision_system(grid, scheme), c).state.u;
    return GridSolution{std::move(grid), std::move(u)};
  };
  // validate every grid before the expensive solves
  for (double dk : dks) Grid(L, dk);
  // Independent solves, each owning its state, so results do not depend on
  // scheduling. At most one solve per hardware thread: the dense matrices
  // of the finest grids are large.
  std::vector<double> widths{dk_ref};
  widths.insert(widths.end(), dks.begin(), dks.end());
  const std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
  std::vector<GridSolution> solved;
  for (std::size_t start = 0; start < widths.size(); start += workers) {
    std::vector<std::future<GridSolution>> batch;
    for (std::size_t i = start; i < std::min(widths.size(), start + workers); ++i) {
      batch.push_back(std::async(std::launch::async, solve, widths[i]));
    }
    for (auto& f : batch) solved.push_back(f.get());
  }
  const std::vector<GridSolution> runs(solved.begin() + 1, solved.end());
  return convergence_table(solved.front(), runs);
}

}  // namespace wke
