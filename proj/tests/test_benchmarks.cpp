#include "helpers.hpp"

#include "aircomp/benchmarks.hpp"
#include "aircomp/channel.hpp"
#include "aircomp/metrics.hpp"

#include <doctest.h>

using namespace aircomp;
using testing::config;
using testing::scalar_channel;

TEST_SUITE("benchmarks") {
  TEST_CASE("equal power spreads the budget") {
    auto cfg = config(1, 4, 1, 1.0, 1.0, 0.0);
    const auto ch = scalar_channel({{1.0}, {0.5}, {2.0}, {cplx(0, 1)}}, {0.0});
    const auto p = equal_power_policy(ch, cfg);
    for (int m = 0; m < 4; ++m) CHECK(p.transmit.amplitudes(0, m) == doctest::Approx(0.5));
    CHECK(device_power(p.transmit.amplitudes)(0) == doctest::Approx(1.0));
  }

  TEST_CASE("equal power with unequal budgets") {
    auto cfg = config(2, 1, 1, 1.0, 1.0, 0.0);
    cfg.power_budgets = {1.0, 4.0};
    const auto p = equal_power_policy(scalar_channel({{1.0, 1.0}}, {0.0, 0.0}), cfg);
    CHECK(p.transmit.amplitudes(0, 0) == doctest::Approx(1.0));
    CHECK(p.transmit.amplitudes(1, 0) == doctest::Approx(2.0));
  }

  TEST_CASE("channel inversion follows the weakest device") {
    auto cfg = config(2, 1, 1, 1.0, 1.0, 0.0);
    const auto p = channel_inversion_policy(scalar_channel({{1.0, 2.0}}, {0.0, 0.0}), cfg);
    CHECK(p.transmit.amplitudes(0, 0) == doctest::Approx(1.0));
    CHECK(p.transmit.amplitudes(1, 0) == doctest::Approx(0.5));
  }

  TEST_CASE("channel inversion on identical channels equals equal power") {
    auto cfg = config(3, 2, 1, 1.0, 2.0, 0.0);
    const auto ch = scalar_channel({{1.0, 1.0, 1.0}, {0.3, 0.3, 0.3}}, {0, 0, 0});
    const auto a = channel_inversion_policy(ch, cfg);
    const auto b = equal_power_policy(ch, cfg);
    CHECK((a.transmit.amplitudes - b.transmit.amplitudes).norm() < 1e-15);
  }

  TEST_CASE("estimation error shrinks the inversion amplitudes") {
    auto cfg = config(2, 1, 1, 1.0, 1.0, 0.0);
    const auto ch = scalar_channel({{1.0, 2.0}}, {0.0, 0.0});
    const auto clean = channel_inversion_policy(ch, cfg);
    auto noisy_cfg = config(2, 1, 1, 1.0, 1.0, 0.3);
    const auto noisy = channel_inversion_policy(ch, noisy_cfg);
    CHECK(noisy.transmit.amplitudes(0, 0) < clean.transmit.amplitudes(0, 0));
    CHECK(noisy.transmit.amplitudes(1, 0) < clean.transmit.amplitudes(1, 0));
  }

  TEST_CASE("benchmarks are power feasible") {
    for (int N : {1, 3}) {
      auto cfg = config(4, 10, N, 1.0, 5.0, 0.2);
      const auto ch = sample_realization(cfg, 3, 1, {0.6, 1.0, 1.2, 0.8});
      for (const auto& p : {equal_power_policy(ch, cfg), channel_inversion_policy(ch, cfg)}) {
        const auto pw = device_power(p.transmit.amplitudes);
        for (int k = 0; k < 4; ++k) CHECK(pw(k) <= cfg.power_budgets[k] + 1e-12);
      }
    }
  }

  TEST_CASE("ignoring the error matches the proposed design when there is none") {
    auto cfg = config(2, 4, 1, 1.0, 3.0, 0.0);
    const auto ch = sample_realization(cfg, 5, 0, {1.0, 1.0});
    const auto blind = ignore_csi_policy(ch, cfg, Scenario::best_effort);
    const auto prop = solve_proposed(ch, cfg, Scenario::best_effort);
    CHECK((blind.transmit.amplitudes - prop.transmit.amplitudes).norm() < 1e-12);
  }

  TEST_CASE("ignoring the error costs accuracy") {
    auto cfg = config(1, 1, 1, 1.0, 1.0, 1.0);
    const auto ch = scalar_channel({{1.0}}, {1.0});
    const auto blind = ignore_csi_policy(ch, cfg, Scenario::best_effort);
    CHECK(blind.transmit.amplitudes(0, 0) == doctest::Approx(1.0).epsilon(1e-7));
    CHECK(std::abs(blind.receive.beamformers(0, 0)) == doctest::Approx(0.5).epsilon(1e-7));
    const double mse = average_mse(blind.transmit.amplitudes, ch, blind.receive, cfg);
    CHECK(mse == doctest::Approx(0.75).epsilon(1e-6));
    CHECK(mse > 2.0 / 3.0);
  }

  TEST_CASE("proposed routes by antenna count") {
    auto cfg = config(2, 3, 2, 1.0, 2.0, 0.1);
    const auto ch = sample_realization(cfg, 8, 0, {1.0, 1.0});
    const auto s = solve_proposed(ch, cfg, Scenario::best_effort);
    CHECK(s.receive.beamformers.rows() == 2);
    CHECK(s.report.converged);
  }
}
