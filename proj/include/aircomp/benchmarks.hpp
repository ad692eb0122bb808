#pragma once

#include "aircomp/model.hpp"
#include "aircomp/siso.hpp"

namespace aircomp {

struct PolicyPair {
  TransmitPolicy transmit;
  ReceivePolicy receive;
  bool converged = true;  // false when an underlying solver stopped at its iteration limit
};

// sqrt(P_k / M) on every subcarrier.
PolicyPair equal_power_policy(const ChannelState& ch, const SystemConfig& cfg);

// sqrt(P_k / M) * min_i |h_i| / sqrt(|h_k|^2 + err_k) per subcarrier.
PolicyPair channel_inversion_policy(const ChannelState& ch, const SystemConfig& cfg);

// The proposed design computed as if the estimates were exact. The caller
// evaluates it against the true error variances.
PolicyPair ignore_csi_policy(const ChannelState& ch, const SystemConfig& cfg, Scenario scenario,
                             const SolverOptions& opts = {});

// Proposed design for the scenario: the single-antenna solvers when N_r = 1,
// alternating optimization otherwise.
Solution solve_proposed(const ChannelState& ch, const SystemConfig& cfg, Scenario scenario,
                        const SolverOptions& opts = {});

}  // namespace aircomp
