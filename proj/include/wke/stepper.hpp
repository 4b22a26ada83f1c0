#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "wke/collision.hpp"
#include "wke/grid.hpp"

namespace wke {

/// TR-BDF2 as a stiffly accurate embedded DIRK with three stages.
struct Tableau {
  static inline const double gamma = 2.0 - std::sqrt(2.0);
  static inline const double d = gamma / 2.0;
  static inline const double w = std::sqrt(2.0) / 4.0;

  static inline const double c[3] = {0.0, gamma, 1.0};
  static inline const double a[3][3] = {{0.0, 0.0, 0.0}, {d, d, 0.0}, {w, w, d}};
  static inline const double b[3] = {w, w, d};
  static inline const double b_hat[3] = {(1.0 - w) / 3.0, (1.0 + 3.0 * w) / 3.0, d / 3.0};
};

/// Throws std::logic_error if the tableau is inconsistent.
void check_tableau();

struct StepperConfig {
  double rtol = 1e-5;
  double atol = 1e-8;
  /// Newton stops once the weighted residual norm is below this fraction
  /// of the step tolerance.
  double newton_tol = 1e-2;
  int newton_max_iter = 10;
  double dt_init = 1e-3;
  double dt_min = 1e-12;
  /// Non-positive means T/10.
  double dt_max = 0.0;
  double safety = 0.9;
  double T = 1.0;
  /// Factor I - dt*d*J(u_n) once per step and reuse it in both implicit
  /// stages (simplified Newton).
  bool freeze_jacobian = false;

  double resolved_dt_max() const { return dt_max > 0.0 ? dt_max : T / 10.0; }
  /// Throws ConfigError.
  void validate() const;
};

/// du/dt = f(u) together with its Jacobian.
struct OdeSystem {
  std::function<void(std::span<const double>, std::span<double>)> rhs;
  std::function<Eigen::MatrixXd(std::span<const double>)> jacobian;
};

/// The semi-discrete collision system on a grid (the grid is copied).
OdeSystem collision_system(const Grid& grid, FluxScheme scheme = FluxScheme::Consistent);

/// max_i |v_i| / (atol + rtol*|ref_i|)
double weighted_norm(std::span<const double> v, std::span<const double> ref, double atol, double rtol);

using ResidualFn = std::function<void(std::span<const double>, std::span<double>)>;
using JacobianFn = std::function<Eigen::MatrixXd(std::span<const double>)>;

struct NewtonResult {
  std::vector<double> u;
  int iterations = 0;
  /// Weighted residual norm before each iteration and after the last one.
  std::vector<double> residual_norms;
};

/**
 * Full Newton iteration for residual(u) = 0 with a dense LU solve per
 * iteration. Converged when the residual norm, weighted by
 * atol + rtol*|u|, drops to cfg.newton_tol.
 *
 * Throws NonConvergence after cfg.newton_max_iter iterations, on a
 * numerically singular Newton matrix, or on a non-finite iterate.
 */
NewtonResult newton_solve(const ResidualFn& residual, const JacobianFn& jacobian,
                          std::span<const double> u_guess, const StepperConfig& cfg);

/// Simplified Newton with a fixed, already factorized iteration matrix.
NewtonResult newton_solve(const ResidualFn& residual, const Eigen::PartialPivLU<Eigen::MatrixXd>& lu,
                          std::span<const double> u_guess, const StepperConfig& cfg);

struct BackwardEulerResult {
  std::vector<double> u;
  int newton_iterations = 0;
  std::vector<double> residual_norms;
};

/// Solves u_next - u_n - dt*f(u_next) = 0.
BackwardEulerResult backward_euler_step(std::span<const double> u_n, double dt, const OdeSystem& system,
                                        const StepperConfig& cfg);
std::vector<double> backward_euler_step(std::span<const double> u_n, double dt, const Grid& grid,
                                        const StepperConfig& cfg);

struct StepResult {
  std::vector<double> u_next;
  /// Embedded error estimate in the weighted max norm; accept when <= 1.
  double err = 0.0;
  int newton_iterations = 0;
};

StepResult trbdf2_step(std::span<const double> u_n, double dt, const OdeSystem& system, const StepperConfig& cfg);
StepResult trbdf2_step(std::span<const double> u_n, double dt, const Grid& grid, const StepperConfig& cfg);

struct PositivityWarning {
  double t;
  double min_u;
};

struct AdvanceStats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t nonconverged = 0;
  std::size_t newton_iterations = 0;
  std::vector<PositivityWarning> positivity_warnings;
};

/// Called after every accepted step with the new time, state and the
/// step size that produced it.
using Observer = std::function<void(double t, std::span<const double> u, double dt)>;

struct AdvanceResult {
  State state;
  AdvanceStats stats;
};

/**
 * Adaptive TR-BDF2 integration from u0.t to cfg.T.
 *
 * Steps with err <= 1 are accepted; the next step is
 * safety*dt*err^(-1/3), limited to a x5 increase and clamped to
 * [dt_min, dt_max]. A Newton failure halves dt. The last step is clipped
 * so that the final time equals T exactly.
 *
 * Throws AbortedAtMinStep if a step is rejected at dt_min.
 */
AdvanceResult advance(const State& u0, const OdeSystem& system, const StepperConfig& cfg,
                      const Observer& observer = {});
AdvanceResult advance(const State& u0, const Grid& grid, const StepperConfig& cfg, const Observer& observer = {});

}  // namespace wke
