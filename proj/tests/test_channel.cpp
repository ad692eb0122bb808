#include "helpers.hpp"

#include "aircomp/channel.hpp"

#include <doctest.h>

#include <numbers>

using namespace aircomp;
using testing::config;

TEST_SUITE("channel") {
  TEST_CASE("relative delays") {
    DelaySpec d;
    d.propagation_delays = {5.0, 2.0};
    d.timing_advances = {1.0, 1.0};
    CHECK(relative_delays(d) == std::vector<double>{3.0, 0.0});
    d.timing_advances = d.propagation_delays;
    CHECK(relative_delays(d) == std::vector<double>{0.0, 0.0});
    d.propagation_delays = {3.0, 1.0, 2.0};
    d.timing_advances = {0.0, 0.0, 0.0};
    CHECK(relative_delays(d) == std::vector<double>{2.0, 0.0, 1.0});
  }

  TEST_CASE("flat single tap") {
    TapChannel t;
    t.taps = {Eigen::MatrixXcd::Ones(1, 1)};
    const auto g = taps_to_subcarrier_gains(t, 4);
    REQUIRE(g.size() == 4);
    for (const auto& H : g) CHECK(std::abs(H(0, 0) - cplx(1.0, 0.0)) < 1e-15);
  }

  TEST_CASE("two-point transform") {
    TapChannel t;
    Eigen::MatrixXcd taps(1, 2);
    taps << 1.0, cplx(0.0, 1.0);
    t.taps = {taps};
    t.num_taps = 2;
    const auto g = taps_to_subcarrier_gains(t, 2);
    CHECK(std::abs(g[0](0, 0) - cplx(1.0, 1.0)) < 1e-15);
    CHECK(std::abs(g[1](0, 0) - cplx(1.0, -1.0)) < 1e-15);
  }

  TEST_CASE("zero taps give zero gains") {
    TapChannel t;
    t.taps = {Eigen::MatrixXcd::Zero(2, 3)};
    for (const auto& H : taps_to_subcarrier_gains(t, 8)) CHECK(H.norm() == 0.0);
  }

  TEST_CASE("energy identity and delay padding") {
    auto cfg = config(3, 16, 2, 1.0, 1.0, 0.0);
    DelaySpec d;
    d.propagation_delays = {0.0, 2.0, 1.0};
    d.timing_advances = {0.0, 0.0, 0.0};
    d.delay_spreads = {2.5, 1.0, 0.0};
    Rng rng(5);
    const auto t = sample_tap_channel(cfg, d, 8, {1.0, 1.0, 1.0}, rng);
    CHECK(t.delay_pad == std::vector<int>{0, 2, 1});
    CHECK(t.num_taps <= t.cp_length);
    for (int k = 0; k < 3; ++k)
      for (int l = 0; l < t.delay_pad[k]; ++l) CHECK(t.taps[k].col(l).norm() == 0.0);

    const int M = 16;
    const auto g = taps_to_subcarrier_gains(t, M);
    for (int k = 0; k < 3; ++k)
      for (int n = 0; n < 2; ++n) {
        double mean = 0.0;
        for (int m = 0; m < M; ++m) mean += std::norm(g[m](n, k));
        mean /= M;
        CHECK(mean == doctest::Approx(t.taps[k].row(n).squaredNorm()).epsilon(1e-10));
      }

    // shifting the taps of device 0 by one multiplies its gains by a phase ramp
    TapChannel shifted = t;
    Eigen::MatrixXcd moved = Eigen::MatrixXcd::Zero(2, t.num_taps + 1);
    moved.rightCols(t.num_taps) = t.taps[0];
    shifted.taps[0] = moved;
    const auto gs = taps_to_subcarrier_gains(shifted, M);
    for (int m = 0; m < M; ++m) {
      const cplx ramp = std::polar(1.0, -2.0 * std::numbers::pi * m / M);
      CHECK((gs[m].col(0) - g[m].col(0) * ramp).norm() < 1e-10);
    }
  }

  TEST_CASE("tap channel must fit the cyclic prefix") {
    auto cfg = config(1, 4, 1, 1.0, 1.0, 0.0);
    DelaySpec d;
    d.propagation_delays = {0.0};
    d.timing_advances = {0.0};
    d.delay_spreads = {5.0};
    Rng rng(1);
    CHECK_THROWS_AS(sample_tap_channel(cfg, d, 2, {1.0}, rng), ConfigError);
  }

  TEST_CASE("seeded draws repeat") {
    auto cfg = config(2, 3, 2, 1.0, 1.0, 0.1);
    Rng a(42), b(42);
    const auto x = sample_rayleigh_channel(cfg, a, VarianceMode::random);
    const auto y = sample_rayleigh_channel(cfg, b, VarianceMode::random);
    for (int m = 0; m < 3; ++m) CHECK(x.estimated[m] == y.estimated[m]);
    CHECK(x.estimated.size() == 3);
    CHECK(x.estimated[0].rows() == 2);
    CHECK(x.estimated[0].cols() == 2);

    const auto r1 = sample_realization(cfg, 9, 4, {1.0, 1.0});
    const auto r2 = sample_realization(cfg, 9, 4, {1.0, 1.0});
    const auto r3 = sample_realization(cfg, 9, 5, {1.0, 1.0});
    CHECK(r1.estimated[2] == r2.estimated[2]);
    CHECK(r1.estimated[2] != r3.estimated[2]);
  }

  TEST_CASE("shape for two devices, two subcarriers, two antennas") {
    auto cfg = config(2, 2, 2, 1.0, 1.0, 0.0);
    Rng rng(3);
    const auto ch = sample_rayleigh_channel(cfg, rng, VarianceMode::unit);
    REQUIRE(ch.estimated.size() == 2);
    for (const auto& H : ch.estimated) {
      CHECK(H.rows() == 2);
      CHECK(H.cols() == 2);
    }
    REQUIRE(ch.true_gains.has_value());
  }

  TEST_CASE("unit-variance draws have the right real-part variance") {
    auto cfg = config(1, 100000, 1, 1.0, 1.0, 0.0);
    Rng rng(2024);
    const auto ch = sample_rayleigh_channel(cfg, rng, VarianceMode::unit);
    double s = 0.0, s2 = 0.0;
    for (const auto& H : ch.estimated) {
      s += H(0, 0).real();
      s2 += H(0, 0).real() * H(0, 0).real();
    }
    const double n = 100000.0;
    const double var = s2 / n - (s / n) * (s / n);
    CHECK(var == doctest::Approx(0.5).epsilon(0.04));
  }

  TEST_CASE("estimation error injection") {
    auto cfg = config(1, 100000, 1, 1.0, 1.0, 0.3);
    Rng rng(8);
    const auto truth = sample_rayleigh_channel(cfg, rng, VarianceMode::unit);
    Rng e0(1);
    const auto exact = sample_estimated_channel(truth, {0.0}, e0);
    for (int m = 0; m < 50; ++m) CHECK(exact.estimated[m] == (*truth.true_gains)[m]);

    Rng e1(77), e2(77);
    const auto est = sample_estimated_channel(truth, {0.3}, e1);
    const auto again = sample_estimated_channel(truth, {0.3}, e2);
    CHECK(est.estimated[10] == again.estimated[10]);
    double s2 = 0.0;
    for (int m = 0; m < 100000; ++m) s2 += std::norm(est.estimated[m](0, 0) - (*truth.true_gains)[m](0, 0));
    CHECK(s2 / 100000.0 == doctest::Approx(0.3).epsilon(0.02));
  }

  TEST_CASE("device variances") {
    const auto u = device_variances(VarianceMode::unit, 3, 1);
    CHECK(u == std::vector<double>{1.0, 1.0, 1.0});
    const auto r = device_variances(VarianceMode::random, 4, 99);
    CHECK(r == device_variances(VarianceMode::random, 4, 99));
    for (double v : r) {
      CHECK(v >= 0.5);
      CHECK(v <= 1.5);
    }
    // extending K keeps the earlier devices unchanged
    const auto longer = device_variances(VarianceMode::random, 6, 99);
    for (int k = 0; k < 4; ++k) CHECK(longer[k] == r[k]);
    CHECK_THROWS_AS(variance_mode_from_string("gamma"), ConfigError);
  }
}
