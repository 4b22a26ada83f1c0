#include "doctest.h"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "wke/errors.hpp"
#include "wke/grid.hpp"
#include "wke/scenarios.hpp"

using namespace wke;

namespace {

double mass(const State& s, const Grid& g) {
  double m = 0.0;
  for (double v : s.u) m += v * g.dk();
  return m;
}

}  // namespace

TEST_CASE("closed-form values") {
  const auto moll = Scenario::from_name("mollifier");
  CHECK(eval_g0(moll, 15.0) == doctest::Approx(std::exp(-0.1)).epsilon(1e-15));
  CHECK(eval_g0(moll, 15.0) == doctest::Approx(0.904837).epsilon(1e-6));
  CHECK(eval_g0(moll, 14.0) == 0.0);
  CHECK(eval_g0(moll, 16.5) == 0.0);

  const auto line = Scenario::from_name("disc_line");
  CHECK(eval_g0(line, 20.0) == 1.0);
  CHECK(eval_g0(line, 150.0) == 0.0);
  CHECK(eval_g0(line, 19.999) == 0.0);
  CHECK(eval_g0(line, 85.0) == doctest::Approx(0.5));

  const auto tb = Scenario::from_name("triple_bump");
  CHECK(eval_g0(tb, 50.0) == doctest::Approx(0.1 * (1.0 + 0.5 * std::exp(-6.25) + std::exp(-25.0))).epsilon(1e-14));
  CHECK(eval_g0(tb, 50.0) == doctest::Approx(0.1000965).epsilon(1e-7));
}

TEST_CASE("bundled run defaults") {
  CHECK(Scenario::from_name("mollifier").recommended_L() == std::vector<double>{30.0, 100.0});
  CHECK(Scenario::from_name("disc_line").recommended_L() == std::vector<double>{200.0, 300.0});
  CHECK(Scenario::from_name("triple_bump").recommended_L() == std::vector<double>{200.0, 300.0});
  const auto s = Scenario::from_name("triple_bump");
  CHECK(s.recommended_T() == 1e4);
  CHECK(s.recommended_dk() == 0.5);
}

TEST_CASE("unknown names are configuration errors") {
  CHECK_THROWS_AS(Scenario::from_name("gaussian"), ConfigError);
  CHECK_THROWS_AS(Scenario::from_name("tabulated"), ConfigError);
}

TEST_CASE("projected mollifier mass matches adaptive quadrature") {
  const auto moll = Scenario::from_name("mollifier");
  const Grid g(30.0, 0.5);
  double err = 0.0;
  const double exact = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      [&](double k) { return moll.g0(k); }, 14.0, 16.0, 15, 1e-14, &err);
  CHECK(std::abs(mass(project_initial(moll, g), g) - exact) <= 1e-6 * exact);
  // mpmath tanh-sinh value, frozen
  CHECK(exact == doctest::Approx(1.59763170073907).epsilon(1e-13));
}

TEST_CASE("cell averages of an affine profile are midpoint values") {
  const auto line = Scenario::from_name("disc_line");
  const Grid g(200.0, 0.5);
  const auto s = project_initial(line, g);
  CHECK(s.t == 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double k = g.midpoint(i);
    if (k - 0.25 >= 20.0 && k + 0.25 <= 150.0) {
      CHECK(s.u[i] == doctest::Approx(1.0 - (k - 20.0) / 130.0).epsilon(1e-14));
    }
    if (k + 0.25 <= 20.0 || k - 0.25 >= 150.0) CHECK(s.u[i] == 0.0);
  }
}

TEST_CASE("projections are non-negative") {
  for (const char* name : {"mollifier", "disc_line", "triple_bump"}) {
    const auto sc = Scenario::from_name(name);
    for (double L : sc.recommended_L()) {
      const Grid g(L, 0.5);
      for (double v : project_initial(sc, g).u) CHECK(v >= 0.0);
    }
  }
}

TEST_CASE("projected mass converges under refinement") {
  // the disc line jumps by 1 at k = 20, which cuts a panel on these grids;
  // a 5-point rule misplaces at most one weight, 0.285 of the panel width
  // dk/32, of the jump
  const auto line = Scenario::from_name("disc_line");
  for (double dk : {0.3, 0.15, 0.075, 0.0375}) {
    const Grid g(150.3, dk);
    CHECK(std::abs(mass(project_initial(line, g), g) - 65.0) <= 0.3 * dk / 32.0);
  }

  // Gauss-Legendre on smooth profiles is far past second order: the error
  // sits at roundoff on every grid
  const auto tb = Scenario::from_name("triple_bump");
  const double tb_exact = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      [&](double k) { return tb.g0(k); }, 0.0, 200.0, 15, 1e-15);
  for (double dk : {1.0, 0.5, 0.25}) {
    const Grid g(200.0, dk);
    CHECK(std::abs(mass(project_initial(tb, g), g) - tb_exact) <= 1e-12 * tb_exact);
  }
}

TEST_CASE("tabulated scenario") {
  const auto path = std::filesystem::temp_directory_path() / "wke_table_test.csv";
  {
    std::ofstream f(path);
    f << "k,g0\n1,0\n2,2\n3,0\n";
  }
  const auto sc = Scenario::load_table(path);
  CHECK(sc.kind() == ScenarioKind::Tabulated);
  CHECK(sc.g0(1.5) == doctest::Approx(1.0));
  CHECK(sc.g0(2.0) == 2.0);
  CHECK(sc.g0(0.5) == 0.0);
  CHECK(sc.g0(3.5) == 0.0);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(Scenario::from_table({{1.0, 0.0}, {1.0, 1.0}}), ConfigError);
  CHECK_THROWS_AS(Scenario::from_table({{1.0, -1.0}, {2.0, 1.0}}), ConfigError);
}
