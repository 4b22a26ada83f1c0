#include "doctest.h"

#include <cmath>
#include <vector>

#include "support.hpp"
#include "wke/errors.hpp"
#include "wke/scenarios.hpp"
#include "wke/stepper.hpp"

using namespace wke;

namespace {

OdeSystem linear_scalar(double lambda) {
  return {[lambda](std::span<const double> y, std::span<double> out) { out[0] = lambda * y[0]; },
          [lambda](std::span<const double>) { return Eigen::MatrixXd::Constant(1, 1, lambda); }};
}

// One TR-BDF2 step on y' = z y/dt, solved stage by stage from the tableau.
double stability_function(double z) {
  const double d = Tableau::d, w = Tableau::w;
  const double y2 = (1.0 + d * z) / (1.0 - d * z);
  return (1.0 + w * z + w * z * y2) / (1.0 - d * z);
}

StepperConfig tight() {
  StepperConfig cfg;
  cfg.rtol = 1e-10;
  cfg.atol = 1e-14;
  return cfg;
}

}  // namespace

TEST_CASE("tableau is consistent and stiffly accurate") {
  CHECK_NOTHROW(check_tableau());
  CHECK(Tableau::gamma == doctest::Approx(2.0 - std::sqrt(2.0)));
  CHECK(Tableau::b[0] + Tableau::b[1] + Tableau::b[2] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("Newton: identity residual converges in one iteration") {
  const std::vector<double> target{1.0, -2.0, 3.5};
  ResidualFn residual = [&](std::span<const double> u, std::span<double> out) {
    for (std::size_t i = 0; i < u.size(); ++i) out[i] = u[i] - target[i];
  };
  JacobianFn jac = [](std::span<const double> u) {
    return Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(u.size()), static_cast<Eigen::Index>(u.size())).eval();
  };
  const auto res = newton_solve(residual, jac, std::vector<double>{0.0, 0.0, 0.0}, StepperConfig{});
  CHECK(res.iterations == 1);
  for (std::size_t i = 0; i < target.size(); ++i) CHECK(res.u[i] == target[i]);
}

TEST_CASE("Newton: linear scalar backward-Euler residual") {
  // u - 1 - dt*lambda*u = 0 with lambda = -1, dt = 1
  ResidualFn residual = [](std::span<const double> u, std::span<double> out) { out[0] = u[0] - 1.0 + u[0]; };
  JacobianFn jac = [](std::span<const double>) { return Eigen::MatrixXd::Constant(1, 1, 2.0); };
  const auto res = newton_solve(residual, jac, std::vector<double>{1.0}, StepperConfig{});
  CHECK(res.iterations == 1);
  CHECK(res.u[0] == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("Newton: gives up after newton_max_iter") {
  // no real root
  ResidualFn residual = [](std::span<const double> u, std::span<double> out) { out[0] = u[0] * u[0] + 1.0; };
  JacobianFn jac = [](std::span<const double> u) { return Eigen::MatrixXd::Constant(1, 1, 2.0 * u[0] + 1e-3); };
  StepperConfig cfg;
  cfg.newton_max_iter = 3;
  CHECK_THROWS_AS(newton_solve(residual, jac, std::vector<double>{1.0}, cfg), NonConvergence);
}

TEST_CASE("Newton: singular iteration matrix is reported") {
  ResidualFn residual = [](std::span<const double> u, std::span<double> out) { out[0] = u[0] - 1.0; };
  JacobianFn jac = [](std::span<const double>) { return Eigen::MatrixXd::Zero(1, 1).eval(); };
  CHECK_THROWS_AS(newton_solve(residual, jac, std::vector<double>{0.0}, StepperConfig{}), NonConvergence);
}

TEST_CASE("backward Euler: quadratic residual decrease on the M = 3 fixture") {
  const Grid g(4.0, 1.0);
  const std::vector<double> u{1.0, 2.0, 0.0, 3.0};
  StepperConfig cfg;
  cfg.newton_tol = 1e-8;
  const auto res = backward_euler_step(u, 1e-3, collision_system(g), cfg);
  const auto& r = res.residual_norms;
  REQUIRE(r.size() >= 5);
  CHECK(r.back() <= cfg.newton_tol);
  // once past the first iterate, r_{k+1} / r_k^2 settles to a constant
  double lo = INFINITY, hi = 0.0;
  for (std::size_t k = 1; k + 1 < r.size(); ++k) {
    const double c = r[k + 1] / (r[k] * r[k]);
    lo = std::min(lo, c);
    hi = std::max(hi, c);
  }
  CHECK(hi / lo <= 10.0);
}

TEST_CASE("backward Euler: zero state stays zero") {
  const Grid g(8.0, 0.5);
  const std::vector<double> zero(g.size(), 0.0);
  const auto next = backward_euler_step(zero, 1.0, g, StepperConfig{});
  for (double v : next) CHECK(v == 0.0);
}

TEST_CASE("backward Euler: small steps follow the Taylor expansion") {
  // u1 = u + dt f + dt^2 J f + O(dt^3); the cubic term is ~dt*|J| = 2e-3 of
  // the quadratic one here
  const Grid g(4.0, 1.0);
  const std::vector<double> u{1.0, 2.0, 0.0, 3.0};
  const double dt = 1e-6;
  StepperConfig cfg = tight();
  cfg.newton_tol = 1e-6;
  const auto next = backward_euler_step(u, dt, g, cfg);
  const auto f = rhs(u, g);
  const Eigen::VectorXd Jf = rhs_jacobian(u, g) * Eigen::Map<const Eigen::VectorXd>(f.data(), 4);
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double second = dt * dt * Jf[static_cast<Eigen::Index>(i)];
    CHECK(std::abs(next[i] - (u[i] + dt * f[i] + second)) <= 1e-2 * Jf.cwiseAbs().maxCoeff() * dt * dt);
  }
}

TEST_CASE("TR-BDF2 reproduces its stability function at z = -1") {
  for (double lambda : {-1.0, -4.0, -0.25}) {
    const double dt = -1.0 / lambda;
    StepperConfig cfg = tight();
    const auto step = trbdf2_step(std::vector<double>{1.0}, dt, linear_scalar(lambda), cfg);
    CHECK(std::abs(step.u_next[0] - stability_function(-1.0)) <= 1e-12 * std::abs(stability_function(-1.0)));
  }
}

TEST_CASE("TR-BDF2 is second order on y' = -y") {
  const auto sys = linear_scalar(-1.0);
  StepperConfig cfg = tight();
  std::vector<double> errs;
  for (int n : {10, 20, 40, 80, 160}) {
    std::vector<double> y{1.0};
    for (int s = 0; s < n; ++s) y = trbdf2_step(y, 1.0 / n, sys, cfg).u_next;
    errs.push_back(std::abs(y[0] - std::exp(-1.0)));
  }
  for (std::size_t i = 1; i < errs.size(); ++i) {
    const double order = std::log2(errs[i - 1] / errs[i]);
    CHECK(order == doctest::Approx(2.0).epsilon(0.05));
  }
}

TEST_CASE("TR-BDF2 on the zero state: no change, zero error") {
  const Grid g(8.0, 0.5);
  const std::vector<double> zero(g.size(), 0.0);
  const auto step = trbdf2_step(zero, 0.3, g, StepperConfig{});
  CHECK(step.err == 0.0);
  for (double v : step.u_next) CHECK(v == 0.0);
}

TEST_CASE("advance: zero rhs reaches T in T/dt_max steps") {
  OdeSystem sys{[](std::span<const double>, std::span<double> out) { std::fill(out.begin(), out.end(), 0.0); },
                [](std::span<const double> u) {
                  const auto n = static_cast<Eigen::Index>(u.size());
                  return Eigen::MatrixXd::Zero(n, n).eval();
                }};
  StepperConfig cfg;
  cfg.T = 2.0;
  cfg.dt_init = 0.2;  // = T/10
  std::vector<double> times;
  const auto res = advance(State{0.0, {0.5, 1.5}}, sys, cfg, [&](double t, auto, double) { times.push_back(t); });
  CHECK(res.stats.accepted == 10);
  CHECK(res.state.t == 2.0);
  CHECK(res.state.u == std::vector<double>{0.5, 1.5});
  CHECK(times.back() == 2.0);
}

TEST_CASE("advance: stiff scalar needs few steps once the transient is over") {
  const double lambda = -1e6;
  StepperConfig cfg;
  cfg.T = 1.0;
  cfg.dt_init = 1e-8;
  std::size_t late = 0;
  const auto res = advance(State{0.0, {1.0}}, linear_scalar(lambda), cfg, [&](double t, auto, double) {
    if (t > 30.0 / -lambda) ++late;
  });
  // the transient is resolved to rtol; after it the step grows freely
  CHECK(res.stats.accepted < 1000);
  CHECK(late < 30);
  CHECK(std::abs(res.state.u[0]) <= cfg.atol);
}

TEST_CASE("advance: observer times increase strictly and end at T") {
  const Grid g(30.0, 0.5);
  StepperConfig cfg;
  cfg.T = 5.0;
  cfg.dt_init = 1e-6;
  std::vector<double> times;
  bool finite = true;
  const auto res = advance(project_initial(Scenario::from_name("mollifier"), g), g, cfg,
                           [&](double t, std::span<const double> u, double dt) {
                             times.push_back(t);
                             CHECK(dt > 0.0);
                             for (double v : u) finite = finite && std::isfinite(v);
                           });
  CHECK(finite);
  REQUIRE(!times.empty());
  CHECK(times.back() == cfg.T);
  CHECK(res.state.t == cfg.T);
  for (std::size_t i = 1; i < times.size(); ++i) CHECK(times[i] > times[i - 1]);
}

TEST_CASE("advance: frozen Jacobian mode agrees with full Newton") {
  const Grid g(30.0, 0.5);
  StepperConfig cfg;
  cfg.T = 1.0;
  cfg.dt_init = 1e-6;
  const auto u0 = project_initial(Scenario::from_name("mollifier"), g);
  const auto full = advance(u0, g, cfg);
  cfg.freeze_jacobian = true;
  const auto frozen = advance(u0, g, cfg);
  double diff = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) diff = std::max(diff, std::abs(full.state.u[i] - frozen.state.u[i]));
  CHECK(diff <= 1e-3 * testing::max_abs(full.state.u));
}

TEST_CASE("advance: invalid configs are rejected") {
  const Grid g(4.0, 1.0);
  StepperConfig cfg;
  cfg.T = 1.0;
  cfg.rtol = -1.0;
  CHECK_THROWS_AS(advance(State{0.0, {1.0, 1.0, 1.0, 1.0}}, g, cfg), ConfigError);
  cfg = StepperConfig{};
  cfg.T = 1.0;
  cfg.dt_init = 1.0;  // above T/10
  CHECK_THROWS_AS(advance(State{0.0, {1.0, 1.0, 1.0, 1.0}}, g, cfg), ConfigError);
  cfg = StepperConfig{};
  CHECK_THROWS_AS(advance(State{0.0, {1.0, NAN, 1.0, 1.0}}, g, cfg), ConfigError);
}
