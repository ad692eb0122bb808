#include "aircomp/optim.hpp"

#include <doctest.h>

#include <cmath>

using namespace aircomp;

TEST_SUITE("optim") {
  TEST_CASE("bisection finds the root of a rational function") {
    const double x = bisect_decreasing([](double t) { return 1.0 / (1.0 + t); }, 0.5);
    CHECK(x == doctest::Approx(1.0).epsilon(1e-10));
  }

  TEST_CASE("bisection returns zero when the target is met at the origin") {
    CHECK(bisect_decreasing([](double t) { return std::exp(-t); }, 1.0) == 0.0);
  }

  TEST_CASE("bisection reports a target above f(0)") {
    CHECK_THROWS_AS(bisect_decreasing([](double t) { return std::exp(-t); }, 2.0), NoRootError);
  }

  TEST_CASE("bisection grows the bracket") {
    const double x = bisect_decreasing([](double t) { return 1000.0 - t; }, 1.0);
    CHECK(x == doctest::Approx(999.0).epsilon(1e-10));
  }

  TEST_CASE("bisection detects an increasing function") {
    CHECK_THROWS_AS(bisect_decreasing([](double t) { return t; }, -1.0), NonMonotoneError);
    CHECK_THROWS_AS(bisect_decreasing([](double t) { return std::sin(5.0 * t) - 0.1 * t; }, -50.0),
                    NonMonotoneError);
  }

  TEST_CASE("ellipsoid on a concave parabola") {
    DualOracle f = [](const Eigen::VectorXd& mu) {
      DualSample s;
      s.value = -(mu(0) - 1.0) * (mu(0) - 1.0);
      s.subgradient = Eigen::VectorXd::Constant(1, -2.0 * (mu(0) - 1.0));
      return s;
    };
    EllipsoidSettings set;
    set.center_init = {3.0};
    const auto r = ellipsoid_maximize(f, 1, set);
    CHECK(r.converged);
    CHECK(r.argmax(0) == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(r.value == doctest::Approx(0.0).scale(1.0).epsilon(1e-8));
  }

  TEST_CASE("ellipsoid on a kinked function") {
    DualOracle f = [](const Eigen::VectorXd& mu) {
      DualSample s;
      s.value = std::min(mu(0), 2.0 - mu(0));
      s.subgradient = Eigen::VectorXd::Constant(1, mu(0) < 1.0 ? 1.0 : -1.0);
      return s;
    };
    const auto r = ellipsoid_maximize(f, 1, EllipsoidSettings{});
    CHECK(r.argmax(0) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(r.value == doctest::Approx(1.0).epsilon(1e-8));
  }

  TEST_CASE("ellipsoid in two dimensions") {
    DualOracle f = [](const Eigen::VectorXd& mu) {
      const Eigen::Vector2d c(1.0, 2.0);
      DualSample s;
      s.value = -(mu - c).squaredNorm();
      s.subgradient = -2.0 * (mu - c);
      return s;
    };
    const auto r = ellipsoid_maximize(f, 2, EllipsoidSettings{});
    CHECK(r.converged);
    CHECK(r.argmax(0) == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(r.argmax(1) == doctest::Approx(2.0).epsilon(1e-4));
    CHECK(r.upper_bound >= r.value);
  }

  TEST_CASE("ellipsoid respects the orthant") {
    DualOracle f = [](const Eigen::VectorXd& mu) {
      DualSample s;
      s.value = -(mu(0) + 1.0) * (mu(0) + 1.0);
      s.subgradient = Eigen::VectorXd::Constant(1, -2.0 * (mu(0) + 1.0));
      return s;
    };
    const auto r = ellipsoid_maximize(f, 1, EllipsoidSettings{});
    CHECK(r.argmax(0) >= 0.0);
    CHECK(r.argmax(0) == doctest::Approx(0.0).scale(1.0).epsilon(1e-6));
  }

  TEST_CASE("default radius is positive") { CHECK(default_dual_radius(4, {1.0, 2.0}) > 0.0); }
}
