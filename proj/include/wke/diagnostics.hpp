#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "wke/collision.hpp"
#include "wke/grid.hpp"
#include "wke/scenarios.hpp"
#include "wke/stepper.hpp"

namespace wke {

/// sum_j dk * u_j * k_j^(r+1); r = 0 is the total energy E_L.
double moment(std::span<const double> u, const Grid& grid, int r);

/// One sampled accepted step.
struct DiagnosticsRecord {
  double t = 0.0;
  double dt = 0.0;              // step that produced this state, 0 at t0
  std::vector<double> moments;  // in the order of the configured r values
  double min_u = 0.0;
};

DiagnosticsRecord make_record(double t, double dt, std::span<const double> u, const Grid& grid,
                              std::span<const int> orders);

/**
 * Indices of at most max_rows samples spread evenly in log t. The first and
 * last samples are always kept, as is the first sample with t > 0. Each
 * log-spaced target picks the nearest sample; where samples are sparse
 * several targets share one, so more targets are used until the distinct
 * picks fill the budget.
 */
std::vector<std::size_t> log_spaced_indices(std::span<const double> t, std::size_t max_rows);

struct DecayFit {
  double t_lo = 0.0;
  double t_hi = 0.0;
  double slope = 0.0;
  double intercept = 0.0;  // of ln E against ln t
  double residual = 0.0;   // Euclidean norm of the ln E residuals
  std::size_t samples = 0;
};

/**
 * Least-squares line through (ln t, ln E) for samples with t in
 * [t_lo, t_hi].
 *
 * Throws InsufficientSamples for fewer than 10 samples in the window and
 * NonPositiveValue if any of them has t <= 0 or E <= 0.
 */
DecayFit fit_decay(std::span<const double> t, std::span<const double> E, double t_lo, double t_hi);

enum class PhaseKind { Conserved, Decaying };
std::string phase_kind_name(PhaseKind kind);

struct Phase {
  PhaseKind kind;
  std::size_t first = 0;  // sample indices into the input, inclusive
  std::size_t last = 0;
  double t_start = 0.0;
  double t_end = 0.0;
  /// max |E - E_first| / E_first over the phase
  double drift = 0.0;
};

/**
 * Splits a series into CONSERVED and DECAYING spans.
 *
 * Samples with t <= 0 are skipped. The local slope of ln E against ln t
 * comes from a least-squares fit over 7 consecutive samples, centred where
 * possible; |slope| < flat_tol marks a sample CONSERVED. Each boundary is
 * then moved by up to three samples to the split that minimises the
 * summed squared residual of separate line fits on either side.
 *
 * Throws InsufficientSamples for fewer than 7 usable samples and
 * NonPositiveValue for E <= 0.
 */
std::vector<Phase> detect_phases(std::span<const double> t, std::span<const double> E, double flat_tol = 0.05);

/// Piecewise-linear interpolant through (x_i, y_i), x increasing, extended
/// linearly beyond both ends.
std::vector<double> interpolate_linear(std::span<const double> x, std::span<const double> y,
                                       std::span<const double> at);

struct ConvergenceRow {
  double dk = 0.0;
  double l1_rel = 0.0;
  double linf_rel = 0.0;
  /// Against the previous row; NaN in the first row.
  double order_l1 = 0.0;
  double order_linf = 0.0;
};

struct GridSolution {
  Grid grid;
  std::vector<double> u;
};

/**
 * Errors of each coarse solution, interpolated onto the reference
 * midpoints, relative to the reference in L1 and max norm, with observed
 * orders ln(e_prev/e) / ln(dk_prev/dk) between consecutive rows.
 */
std::vector<ConvergenceRow> convergence_table(const GridSolution& reference, std::span<const GridSolution> runs);

/**
 * Solves to T on every grid in dks and on dk_ref, then tabulates the
 * errors. dks must be strictly decreasing with at least two entries and
 * dk_ref <= min(dks); every width must divide L. Solver failures
 * propagate. The solves run concurrently.
 */
std::vector<ConvergenceRow> convergence_study(const Scenario& scenario, double L, double T, std::span<const double> dks,
                                              double dk_ref, const StepperConfig& cfg,
                                              FluxScheme scheme = FluxScheme::Consistent);

}  // namespace wke
