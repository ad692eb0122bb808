#include "aircomp/benchmarks.hpp"

#include "aircomp/simo.hpp"

#include <cmath>

namespace aircomp {

namespace {

PolicyPair with_mmse_receive(const Eigen::MatrixXd& amplitudes, const ChannelState& ch, const SystemConfig& cfg) {
  PolicyPair p;
  p.receive = mmse_receive_for_amplitudes(amplitudes, ch, cfg);
  p.transmit = make_transmit(amplitudes, ch, p.receive);
  return p;
}

}  // namespace

PolicyPair equal_power_policy(const ChannelState& ch, const SystemConfig& cfg) {
  validate_config(cfg);
  check_channel(ch, cfg);
  const int K = cfg.num_devices, M = cfg.num_subcarriers;
  Eigen::MatrixXd amps(K, M);
  for (int k = 0; k < K; ++k) amps.row(k).setConstant(std::sqrt(cfg.power_budgets[k] / M));
  return with_mmse_receive(amps, ch, cfg);
}

PolicyPair channel_inversion_policy(const ChannelState& ch, const SystemConfig& cfg) {
  validate_config(cfg);
  check_channel(ch, cfg);
  const int K = cfg.num_devices, M = cfg.num_subcarriers;
  Eigen::MatrixXd amps(K, M);
  for (int m = 0; m < M; ++m) {
    const Eigen::VectorXd norms = ch.estimated[m].colwise().norm().transpose();
    const double weakest = norms.minCoeff();
    for (int k = 0; k < K; ++k) {
      const double den = std::sqrt(norms(k) * norms(k) + cfg.error_variances[k]);
      const double ratio = den > 0.0 ? std::min(1.0, weakest / den) : 0.0;
      amps(k, m) = std::sqrt(cfg.power_budgets[k] / M) * ratio;
    }
  }
  return with_mmse_receive(amps, ch, cfg);
}

Solution solve_proposed(const ChannelState& ch, const SystemConfig& cfg, Scenario scenario, const SolverOptions& opts) {
  if (cfg.num_rx_antennas == 1)
    return scenario == Scenario::best_effort ? solve_siso_avg(ch, cfg, opts) : solve_siso_outage(ch, cfg, opts);
  AoSettings ao = scenario == Scenario::best_effort ? AoSettings::for_average() : AoSettings::for_outage();
  ao.solver = opts;
  return scenario == Scenario::best_effort ? solve_simo_avg(ch, cfg, ao) : solve_simo_outage(ch, cfg, ao);
}

PolicyPair ignore_csi_policy(const ChannelState& ch, const SystemConfig& cfg, Scenario scenario,
                             const SolverOptions& opts) {
  const SystemConfig blind = without_estimation_error(cfg);
  ChannelState blind_ch = ch;
  blind_ch.error_variances = blind.error_variances;
  Solution s = solve_proposed(blind_ch, blind, scenario, opts);
  PolicyPair p;
  p.receive = std::move(s.receive);
  p.transmit = std::move(s.transmit);
  p.converged = s.report.converged;
  return p;
}

}  // namespace aircomp
