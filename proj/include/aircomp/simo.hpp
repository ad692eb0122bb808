#pragma once

#include "aircomp/siso.hpp"

namespace aircomp {

enum class InitMode { equal_power, channel_inversion, best_of_benchmarks };

std::string to_string(InitMode mode);
InitMode init_mode_from_string(const std::string& s);

struct AoSettings {
  int max_iters = 200;
  double rel_obj_tol = 1e-10;
  InitMode init_mode = InitMode::best_of_benchmarks;
  SolverOptions solver;  // used by the outage transmit step

  static AoSettings for_average() { return {}; }
  static AoSettings for_outage() {
    AoSettings s;
    s.max_iters = 100;
    return s;
  }
};

// Sum-MMSE beamformers for fixed amplitudes. The transmit phases are taken
// aligned to prev (unit phases without it); subcarriers with all amplitudes
// zero keep prev, or get a zero beamformer when prev is absent.
ReceivePolicy mmse_receive_update(const Eigen::MatrixXd& amplitudes, const ChannelState& ch, const SystemConfig& cfg,
                                  const ReceivePolicy* prev = nullptr);

// Receive design for a fixed transmit rule without a prior beamformer: starts
// from the dominant direction of the amplitude-weighted channel and alternates
// phase alignment with the MMSE update while the MSE keeps dropping.
ReceivePolicy mmse_receive_for_amplitudes(const Eigen::MatrixXd& amplitudes, const ChannelState& ch,
                                          const SystemConfig& cfg);

struct TransmitUpdate {
  Eigen::MatrixXd amplitudes;  // K x M
  Eigen::VectorXd mu;          // K
};

// Power-constrained MSE minimizer for fixed beamformers.
TransmitUpdate simo_transmit_update_avg(const ReceivePolicy& rx, const ChannelState& ch, const SystemConfig& cfg);

Solution solve_simo_avg(const ChannelState& ch, const SystemConfig& cfg,
                        const AoSettings& settings = AoSettings::for_average());

SubcarrierClass classify_simo_subcarrier(const Eigen::VectorXcd& w, const Eigen::MatrixXcd& H, const SystemConfig& cfg);

// Minimum priced power meeting the MSE threshold on one subcarrier with the
// beamformer held fixed. Throws InfeasibleSubcarrier below the floor.
OutageSubproblem simo_outage_subcarrier(const Eigen::VectorXd& mu, const Eigen::VectorXcd& w,
                                        const Eigen::MatrixXcd& H, const SystemConfig& cfg, int subcarrier = 0);

struct OutageTransmitStep {
  Eigen::MatrixXd amplitudes;
  Eigen::VectorXd mu;
  double dual_value = 0.0;  // in outage probability units
  int iterations = 0;
  bool converged = false;
};

OutageTransmitStep simo_outage_transmit_step(const ReceivePolicy& rx, const ChannelState& ch, const SystemConfig& cfg,
                                             const SolverOptions& opts = {});

Solution solve_simo_outage(const ChannelState& ch, const SystemConfig& cfg,
                           const AoSettings& settings = AoSettings::for_outage());

}  // namespace aircomp
