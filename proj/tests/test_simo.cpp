#include "helpers.hpp"

#include "aircomp/benchmarks.hpp"
#include "aircomp/channel.hpp"
#include "aircomp/metrics.hpp"
#include "aircomp/oracle.hpp"
#include "aircomp/simo.hpp"

#include <doctest.h>

#include <random>

using namespace aircomp;
using testing::config;
using testing::scalar_channel;

namespace {

ChannelState random_channel(const SystemConfig& cfg, std::uint64_t seed) {
  return sample_realization(cfg, seed, 0, std::vector<double>(cfg.num_devices, 1.0));
}

ReceivePolicy fixed_receive(const Eigen::MatrixXcd& w) {
  ReceivePolicy rx;
  rx.beamformers = w;
  return rx;
}

}  // namespace

TEST_SUITE("simo") {
  TEST_CASE("receive update, scalar") {
    auto cfg = config(1, 1, 1, 1.0, 1.0, 0.0);
    const auto rx = mmse_receive_update(Eigen::MatrixXd::Ones(1, 1), scalar_channel({{1.0}}, {0.0}), cfg);
    CHECK(std::abs(rx.beamformers(0, 0) - cplx(0.5, 0.0)) < 1e-12);
  }

  TEST_CASE("receive update, two antennas") {
    auto cfg = config(1, 1, 2, 1.0, 1.0, 0.0);
    ChannelState ch;
    Eigen::MatrixXcd H(2, 1);
    H << 1.0, 0.0;
    ch.estimated = {H};
    ch.error_variances = {0.0};
    const auto rx = mmse_receive_update(Eigen::MatrixXd::Ones(1, 1), ch, cfg);
    CHECK(std::abs(rx.beamformers(0, 0) - cplx(0.5, 0.0)) < 1e-12);
    CHECK(std::abs(rx.beamformers(1, 0)) < 1e-12);
  }

  TEST_CASE("receive update keeps the previous beamformer on silent subcarriers") {
    auto cfg = config(2, 2, 3, 1.0, 1.0, 0.1);
    const auto ch = random_channel(cfg, 3);
    ReceivePolicy prev;
    prev.beamformers = Eigen::MatrixXcd::Constant(3, 2, cplx(0.3, -0.2));
    Eigen::MatrixXd amps(2, 2);
    amps << 0.0, 1.0, 0.0, 0.5;
    const auto rx = mmse_receive_update(amps, ch, cfg, &prev);
    CHECK(rx.beamformers.col(0) == prev.beamformers.col(0));
    CHECK(rx.beamformers.col(1) != prev.beamformers.col(1));
  }

  TEST_CASE("receive update is a stationary point of the error") {
    std::mt19937_64 gen(5);
    std::normal_distribution<double> nd;
    for (int trial = 0; trial < 20; ++trial) {
      const int K = 2 + trial % 4, N = 1 + trial % 5;
      auto cfg = config(K, 1, N, 0.7, 1.0, 0.15);
      const auto ch = random_channel(cfg, 50 + trial);
      Eigen::MatrixXd amps(K, 1);
      for (int k = 0; k < K; ++k) amps(k, 0) = std::abs(nd(gen));
      const auto rx = mmse_receive_update(amps, ch, cfg);
      // without a previous beamformer the update uses unit transmit phases
      const Eigen::VectorXcd w = rx.beamformers.col(0);
      const Eigen::MatrixXcd& H = ch.estimated[0];
      auto complex_mse = [&](const Eigen::VectorXcd& v) {
        double s = 0.0;
        for (int k = 0; k < K; ++k) s += std::norm(v.dot(H.col(k)) * amps(k, 0) - 1.0);
        for (int k = 0; k < K; ++k) s += v.squaredNorm() * cfg.error_variances[k] * amps(k, 0) * amps(k, 0);
        s += v.squaredNorm() * cfg.noise_power;
        return s / (K * K);
      };
      const double base = complex_mse(w);
      for (int d = 0; d < 10; ++d) {
        Eigen::VectorXcd dir(N);
        for (int n = 0; n < N; ++n) dir(n) = cplx(nd(gen), nd(gen));
        dir *= 1e-4 / dir.norm();
        CHECK(complex_mse(w + dir) >= base - 1e-10);
      }
    }
  }

  TEST_CASE("transmit update") {
    auto cfg = config(1, 1, 1, 1.0, 4.0, 0.0);
    const auto ch = scalar_channel({{1.0}}, {0.0});
    const auto rx = scalar_receive(Eigen::VectorXd::Ones(1));
    auto t = simo_transmit_update_avg(rx, ch, cfg);
    CHECK(t.mu(0) == 0.0);
    CHECK(t.amplitudes(0, 0) == doctest::Approx(1.0));

    cfg.power_budgets = {0.25};
    t = simo_transmit_update_avg(rx, ch, cfg);
    CHECK(t.amplitudes(0, 0) == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(t.mu(0) == doctest::Approx(1.0).epsilon(1e-8));
  }

  TEST_CASE("transmit update on an orthogonal beamformer") {
    auto cfg = config(2, 1, 2, 1.0, 1.0, 0.0);
    ChannelState ch;
    Eigen::MatrixXcd H(2, 2);
    H << 1.0, 0.0, 0.0, 1.0;
    ch.estimated = {H};
    ch.error_variances = {0.0, 0.0};
    Eigen::MatrixXcd w(2, 1);
    w << 1.0, 0.0;
    const auto t = simo_transmit_update_avg(fixed_receive(w), ch, cfg);
    CHECK(t.amplitudes(1, 0) == 0.0);
    CHECK(t.amplitudes(0, 0) > 0.0);
  }

  TEST_CASE("transmit update slackness") {
    auto cfg = config(4, 8, 3, 1.0, 2.0, 0.2);
    const auto ch = random_channel(cfg, 12);
    const auto rx = mmse_receive_for_amplitudes(Eigen::MatrixXd::Constant(4, 8, 0.5), ch, cfg);
    const auto t = simo_transmit_update_avg(rx, ch, cfg);
    const auto p = device_power(t.amplitudes);
    for (int k = 0; k < 4; ++k) {
      CHECK(p(k) <= cfg.power_budgets[k] + 1e-9);
      CHECK(std::abs(t.mu(k) * (p(k) - cfg.power_budgets[k])) <= 1e-6 * cfg.power_budgets[k]);
    }
  }

  TEST_CASE("alternating solver on the single-device instance") {
    auto cfg = config(1, 1, 1, 1.0, 1.0, 0.0);
    const auto s = solve_simo_avg(scalar_channel({{1.0}}, {0.0}), cfg);
    CHECK(s.transmit.amplitudes(0, 0) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(std::abs(s.receive.beamformers(0, 0)) == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(s.report.average_mse == doctest::Approx(0.5).epsilon(1e-8));
  }

  TEST_CASE("alternating solver never beats the single-antenna optimum") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      auto cfg = config(3, 8, 1, 1.0, 4.0, 0.15);
      const auto ch = random_channel(cfg, seed);
      const auto ao = solve_simo_avg(ch, cfg);
      const auto opt = solve_siso_avg(ch, cfg);
      CHECK(ao.report.average_mse >= opt.report.average_mse - 1e-9);
    }
  }

  TEST_CASE("alternating solver descends and beats its starts") {
    auto cfg = config(4, 16, 4, 1.0, 10.0, 0.2);
    const auto ch = random_channel(cfg, 21);
    AoSettings set;
    set.init_mode = InitMode::equal_power;
    const auto s = solve_simo_avg(ch, cfg, set);
    const auto& tr = s.report.objective_trace;
    REQUIRE(tr.size() >= 2);
    for (std::size_t i = 1; i < tr.size(); ++i) CHECK(tr[i] <= tr[i - 1] + 1e-12);
    const auto eq = equal_power_policy(ch, cfg);
    CHECK(s.report.average_mse <= average_mse(eq.transmit.amplitudes, ch, eq.receive, cfg) + 1e-12);
    CHECK(s.report.converged);
  }

  TEST_CASE("init mode names") {
    CHECK(init_mode_from_string("channel_inversion") == InitMode::channel_inversion);
    CHECK(to_string(InitMode::best_of_benchmarks) == "best_of_benchmarks");
    CHECK_THROWS_AS(init_mode_from_string("random"), ConfigError);
  }

  TEST_CASE("fixed-beamformer outage subproblem matches a sweep") {
    auto cfg = config(1, 1, 1, 1.0, 1.0, 0.0, 0.5);
    const Eigen::MatrixXcd H = Eigen::MatrixXcd::Ones(1, 1);
    const Eigen::VectorXcd w = Eigen::VectorXcd::Constant(1, 0.5);
    // noise term 0.25 leaves room for the misalignment
    const auto r = simo_outage_subcarrier(Eigen::VectorXd::Ones(1), w, H, cfg);
    const auto sw = min_power_sweep(H, cfg, Eigen::VectorXd::Ones(1), w, 20001);
    REQUIRE(sw.feasible);
    CHECK(r.cost == doctest::Approx(sw.cost).epsilon(1e-3));
    CHECK(r.amplitudes(0) == doctest::Approx(1.0).epsilon(1e-3));
  }

  TEST_CASE("fixed-beamformer outage subproblem classes") {
    auto cfg = config(2, 1, 2, 1.0, 1.0, 0.1, 0.6);
    const auto ch = random_channel(cfg, 2);
    Eigen::VectorXcd w = Eigen::VectorXcd::Constant(2, 0.01);
    CHECK(classify_simo_subcarrier(w, ch.estimated[0], cfg) == SubcarrierClass::free_success);
    const auto r = simo_outage_subcarrier(Eigen::VectorXd::Ones(2), w, ch.estimated[0], cfg);
    CHECK(r.amplitudes.norm() == 0.0);

    w = Eigen::VectorXcd::Constant(2, 10.0);
    CHECK(classify_simo_subcarrier(w, ch.estimated[0], cfg) == SubcarrierClass::forced_outage);
    CHECK_THROWS_AS(simo_outage_subcarrier(Eigen::VectorXd::Ones(2), w, ch.estimated[0], cfg), InfeasibleSubcarrier);
  }

  TEST_CASE("fixed-beamformer outage subproblems against sweeps") {
    std::mt19937_64 gen(17);
    std::uniform_real_distribution<double> u(0.2, 2.0);
    int compared = 0;
    for (int trial = 0; trial < 30 && compared < 10; ++trial) {
      auto cfg = config(2, 1, 2, 1.0, 1.0, 0.1, 0.3);
      const auto ch = random_channel(cfg, 200 + trial);
      const Eigen::VectorXcd w = mmse_receive_update(Eigen::MatrixXd::Ones(2, 1), ch, cfg).beamformers.col(0);
      if (classify_simo_subcarrier(w, ch.estimated[0], cfg) != SubcarrierClass::contested) continue;
      const Eigen::Vector2d mu(u(gen), u(gen));
      const auto r = simo_outage_subcarrier(mu, w, ch.estimated[0], cfg);
      const auto sw = min_power_sweep(ch.estimated[0], cfg, mu, w, 4001);
      REQUIRE(sw.feasible);
      CHECK(r.cost <= sw.cost * (1.0 + 1e-9) + 1e-12);
      CHECK(r.cost >= sw.cost * (1.0 - 2e-2));
      ++compared;
    }
    CHECK(compared >= 5);
  }

  TEST_CASE("outage transmit step extremes") {
    auto cfg = config(2, 4, 2, 1.0, 1.0, 0.1, 0.6);
    const auto ch = random_channel(cfg, 8);
    ReceivePolicy small = fixed_receive(Eigen::MatrixXcd::Constant(2, 4, 0.01));
    auto step = simo_outage_transmit_step(small, ch, cfg);
    CHECK(step.amplitudes.norm() == 0.0);
    CHECK(outage_probability(step.amplitudes, ch, small, cfg) == 0.0);

    cfg.mse_threshold = 0.1;
    ReceivePolicy big = fixed_receive(Eigen::MatrixXcd::Constant(2, 4, 10.0));
    step = simo_outage_transmit_step(big, ch, cfg);
    CHECK(step.amplitudes.norm() == 0.0);
    CHECK(outage_probability(step.amplitudes, ch, big, cfg) == 1.0);
  }

  TEST_CASE("outage transmit step beats equal power at the same beamformer") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      auto cfg = config(3, 12, 1, 1.0, 2.0, 0.1, 0.1);
      const auto ch = random_channel(cfg, 300 + seed);
      const auto opt = solve_siso_avg(ch, cfg);
      const auto step = simo_outage_transmit_step(opt.receive, ch, cfg);
      const Eigen::MatrixXd eq = Eigen::MatrixXd::Constant(3, 12, std::sqrt(2.0 / 12.0));
      CHECK(outage_probability(step.amplitudes, ch, opt.receive, cfg) <=
            outage_probability(eq, ch, opt.receive, cfg));
    }
  }

  TEST_CASE("outage alternating solver") {
    auto cfg = config(3, 16, 1, 1.0, 3.0, 0.1, 0.08);
    const auto ch = random_channel(cfg, 31);
    const auto ao = solve_simo_outage(ch, cfg);
    const auto opt = solve_siso_outage(ch, cfg);
    CHECK(ao.report.outage_probability >= opt.report.outage_probability);

    cfg.mse_threshold = 0.5;
    const auto easy = solve_simo_outage(ch, cfg);
    CHECK(easy.report.outage_probability == 0.0);
  }
}
