#include "wke/stepper.hpp"

#include <algorithm>
#include <optional>
#include <stdexcept>
#include <string>

#include "wke/errors.hpp"

namespace wke {

namespace {

using Vec = std::vector<double>;

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

Eigen::Map<const Eigen::VectorXd> as_eigen(std::span<const double> v) {
  return {v.data(), static_cast<Eigen::Index>(v.size())};
}

// Shared Newton loop; `solve` returns the correction for the residual at u.
template <typename Solve>
NewtonResult newton_loop(const ResidualFn& residual, Solve&& solve, std::span<const double> u_guess,
                         const StepperConfig& cfg) {
  NewtonResult result;
  result.u.assign(u_guess.begin(), u_guess.end());
  Vec F(result.u.size());

  for (int iter = 0;; ++iter) {
    residual(result.u, F);
    const double norm = weighted_norm(F, result.u, cfg.atol, cfg.rtol);
    result.residual_norms.push_back(norm);
    if (!std::isfinite(norm)) throw NonConvergence("newton: non-finite residual");
    if (norm <= cfg.newton_tol) {
      result.iterations = iter;
      return result;
    }
    if (iter >= cfg.newton_max_iter) {
      throw NonConvergence("newton: no convergence after " + std::to_string(iter) +
                           " iterations (residual " + std::to_string(norm) + ")");
    }
    if (iter >= 2 && norm > 2.0 * result.residual_norms[result.residual_norms.size() - 2]) {
      throw NonConvergence("newton: diverging residual");
    }
    const Eigen::VectorXd delta = solve(result.u, F);
    for (std::size_t i = 0; i < result.u.size(); ++i) result.u[i] -= delta[static_cast<Eigen::Index>(i)];
  }
}

Eigen::PartialPivLU<Eigen::MatrixXd> factorize(const Eigen::MatrixXd& A) {
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
  const double rc = lu.rcond();
  if (!(rc > 1e-15)) throw NonConvergence("newton: singular iteration matrix (rcond " + std::to_string(rc) + ")");
  return lu;
}

// I - scale * J
Eigen::MatrixXd iteration_matrix(const Eigen::MatrixXd& J, double scale) {
  Eigen::MatrixXd N = -scale * J;
  N.diagonal().array() += 1.0;
  return N;
}

// Solves Y = base + hd * f(Y) for one implicit stage.
NewtonResult solve_stage(const OdeSystem& system, const Vec& base, double hd, const Vec& guess,
                         const StepperConfig& cfg, const Eigen::PartialPivLU<Eigen::MatrixXd>* frozen) {
  Vec f(base.size());
  ResidualFn residual = [&](std::span<const double> y, std::span<double> out) {
    system.rhs(y, f);
    for (std::size_t i = 0; i < y.size(); ++i) out[i] = y[i] - base[i] - hd * f[i];
  };
  if (frozen != nullptr) return newton_solve(residual, *frozen, guess, cfg);
  JacobianFn jac = [&](std::span<const double> y) { return iteration_matrix(system.jacobian(y), hd); };
  return newton_solve(residual, jac, guess, cfg);
}

}  // namespace

void check_tableau() {
  const double sb = Tableau::b[0] + Tableau::b[1] + Tableau::b[2];
  const double sbh = Tableau::b_hat[0] + Tableau::b_hat[1] + Tableau::b_hat[2];
  if (std::abs(sb - 1.0) > 1e-14 || std::abs(sbh - 1.0) > 1e-14) {
    throw std::logic_error("TR-BDF2 tableau weights do not sum to one");
  }
  for (int s = 0; s < 3; ++s) {
    if (Tableau::b[s] != Tableau::a[2][s]) throw std::logic_error("TR-BDF2 tableau is not stiffly accurate");
    const double row = Tableau::a[s][0] + Tableau::a[s][1] + Tableau::a[s][2];
    if (std::abs(row - Tableau::c[s]) > 1e-14) throw std::logic_error("TR-BDF2 row sums differ from abscissae");
  }
}

void StepperConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("stepper: " + msg); };
  if (!(rtol > 0.0) || !(atol > 0.0) || !(newton_tol > 0.0)) fail("tolerances must be positive");
  if (newton_max_iter < 1) fail("newton_max_iter must be >= 1");
  if (!(safety > 0.0 && safety < 1.0)) fail("safety must lie in (0, 1)");
  if (!(T >= 0.0) || !std::isfinite(T)) fail("T must be finite and non-negative");
  if (!(dt_min > 0.0)) fail("dt_min must be positive");
  if (T > 0.0) {
    const double hi = resolved_dt_max();
    if (!(dt_min <= dt_init && dt_init <= hi)) fail("need dt_min <= dt_init <= dt_max");
  }
}

OdeSystem collision_system(const Grid& grid, FluxScheme scheme) {
  return OdeSystem{
      [grid, scheme](std::span<const double> u, std::span<double> out) { rhs(u, grid, out, scheme); },
      [grid, scheme](std::span<const double> u) { return rhs_jacobian(u, grid, scheme); },
  };
}

double weighted_norm(std::span<const double> v, std::span<const double> ref, double atol, double rtol) {
  double m = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double r = std::abs(v[i]) / (atol + rtol * std::abs(ref[i]));
    if (!(r <= m)) m = r;  // propagates NaN
  }
  return m;
}

NewtonResult newton_solve(const ResidualFn& residual, const JacobianFn& jacobian, std::span<const double> u_guess,
                          const StepperConfig& cfg) {
  return newton_loop(
      residual,
      [&](const Vec& u, const Vec& F) -> Eigen::VectorXd { return factorize(jacobian(u)).solve(as_eigen(F)); },
      u_guess, cfg);
}

NewtonResult newton_solve(const ResidualFn& residual, const Eigen::PartialPivLU<Eigen::MatrixXd>& lu,
                          std::span<const double> u_guess, const StepperConfig& cfg) {
  return newton_loop(
      residual, [&](const Vec&, const Vec& F) -> Eigen::VectorXd { return lu.solve(as_eigen(F)); }, u_guess,
      cfg);
}

BackwardEulerResult backward_euler_step(std::span<const double> u_n, double dt, const OdeSystem& system,
                                        const StepperConfig& cfg) {
  const Vec base(u_n.begin(), u_n.end());
  auto stage = solve_stage(system, base, dt, base, cfg, nullptr);
  return {std::move(stage.u), stage.iterations, std::move(stage.residual_norms)};
}

std::vector<double> backward_euler_step(std::span<const double> u_n, double dt, const Grid& grid,
                                        const StepperConfig& cfg) {
  return backward_euler_step(u_n, dt, collision_system(grid), cfg).u;
}

StepResult trbdf2_step(std::span<const double> u_n, double dt, const OdeSystem& system, const StepperConfig& cfg) {
  using T = Tableau;
  const std::size_t n = u_n.size();
  const double hd = dt * T::d;

  Vec f1(n);
  system.rhs(u_n, f1);

  std::optional<Eigen::PartialPivLU<Eigen::MatrixXd>> frozen;
  if (cfg.freeze_jacobian) frozen = factorize(iteration_matrix(system.jacobian(u_n), hd));
  const auto* lu = frozen ? &*frozen : nullptr;

  // trapezoidal stage to t + gamma*dt
  Vec base(n), guess(n);
  for (std::size_t i = 0; i < n; ++i) {
    base[i] = u_n[i] + hd * f1[i];
    guess[i] = u_n[i] + T::gamma * dt * f1[i];
  }
  auto s2 = solve_stage(system, base, hd, guess, cfg, lu);
  const Vec& y2 = s2.u;
  // stage derivatives are recovered from the stage equations so that the
  // Newton residual is not amplified by the stiff Jacobian
  Vec f2(n);
  for (std::size_t i = 0; i < n; ++i) f2[i] = (y2[i] - base[i]) / hd;

  // BDF2 stage to t + dt
  for (std::size_t i = 0; i < n; ++i) {
    base[i] = u_n[i] + dt * T::w * (f1[i] + f2[i]);
    guess[i] = y2[i] + (1.0 - T::gamma) * dt * f2[i];
  }
  auto s3 = solve_stage(system, base, hd, guess, cfg, lu);

  StepResult out;
  out.newton_iterations = s2.iterations + s3.iterations;
  out.u_next = std::move(s3.u);

  Vec est(n), ref(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double f3 = (out.u_next[i] - base[i]) / hd;
    est[i] = dt * ((T::b[0] - T::b_hat[0]) * f1[i] + (T::b[1] - T::b_hat[1]) * f2[i] +
                   (T::b[2] - T::b_hat[2]) * f3);
    ref[i] = std::max(std::abs(u_n[i]), std::abs(out.u_next[i]));
  }
  out.err = weighted_norm(est, ref, cfg.atol, cfg.rtol);
  return out;
}

StepResult trbdf2_step(std::span<const double> u_n, double dt, const Grid& grid, const StepperConfig& cfg) {
  return trbdf2_step(u_n, dt, collision_system(grid), cfg);
}

AdvanceResult advance(const State& u0, const OdeSystem& system, const StepperConfig& cfg, const Observer& observer) {
  check_tableau();
  cfg.validate();
  if (!all_finite(u0.u)) throw ConfigError("advance: initial state is not finite");

  AdvanceResult result{u0, {}};
  auto& stats = result.stats;
  double& t = result.state.t;
  Vec& u = result.state.u;

  const double T = cfg.T;
  const double dt_max = cfg.resolved_dt_max();
  double dt = std::clamp(cfg.dt_init, cfg.dt_min, dt_max);
  constexpr double max_growth = 5.0;
  constexpr double max_shrink = 0.1;

  while (t < T) {
    double step = dt;
    const bool last = t + step >= T - 1e-12 * std::max(1.0, std::abs(T));
    if (last) step = T - t;

    StepResult res;
    bool ok = true;
    try {
      res = trbdf2_step(u, step, system, cfg);
      ok = std::isfinite(res.err) && all_finite(res.u_next);
    } catch (const NonConvergence&) {
      ok = false;
    }
    if (!ok) {
      ++stats.nonconverged;
      ++stats.rejected;
      if (step <= cfg.dt_min) {
        throw AbortedAtMinStep("advance: Newton failure at minimum step size, t=" + std::to_string(t));
      }
      dt = std::max(0.5 * step, cfg.dt_min);
      continue;
    }
    stats.newton_iterations += static_cast<std::size_t>(res.newton_iterations);

    if (res.err <= 1.0) {
      t = last ? T : t + step;
      u = std::move(res.u_next);
      ++stats.accepted;

      const double min_u = *std::min_element(u.begin(), u.end());
      if (min_u < -cfg.atol) stats.positivity_warnings.push_back({t, min_u});
      if (observer) observer(t, u, step);

      const double factor =
          res.err > 0.0 ? std::min(max_growth, cfg.safety * std::pow(res.err, -1.0 / 3.0)) : max_growth;
      dt = std::clamp((last ? std::max(step, dt) : step) * factor, cfg.dt_min, dt_max);
    } else {
      ++stats.rejected;
      if (step <= cfg.dt_min) {
        throw AbortedAtMinStep("advance: error test failed at minimum step size, t=" + std::to_string(t));
      }
      const double factor = std::max(max_shrink, cfg.safety * std::pow(res.err, -1.0 / 3.0));
      dt = std::clamp(step * factor, cfg.dt_min, dt_max);
    }
  }
  return result;
}

AdvanceResult advance(const State& u0, const Grid& grid, const StepperConfig& cfg, const Observer& observer) {
  return advance(u0, collision_system(grid), cfg, observer);
}

}  // namespace wke
