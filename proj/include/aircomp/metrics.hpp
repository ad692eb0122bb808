#pragma once

#include "aircomp/model.hpp"

#include <vector>

namespace aircomp {

inline constexpr double kOutageSlack = 1e-10;

// The three addends of the per-subcarrier MSE, each already divided by K^2.
struct MseTerms {
  double misalignment = 0.0;
  double noise = 0.0;
  double csi = 0.0;
  double total() const { return misalignment + noise + csi; }
};

// H is N_r x K for one subcarrier; amplitudes has K entries.
MseTerms mse_terms(const Eigen::VectorXd& amplitudes, const Eigen::MatrixXcd& H, const Eigen::VectorXcd& w,
                   double noise_power, const std::vector<double>& error_variances);
double mse_subcarrier(const Eigen::VectorXd& amplitudes, const Eigen::MatrixXcd& H, const Eigen::VectorXcd& w,
                      double noise_power, const std::vector<double>& error_variances);

std::vector<double> per_subcarrier_mse(const Eigen::MatrixXd& amplitudes, const ChannelState& ch,
                                       const ReceivePolicy& rx, const SystemConfig& cfg);
double average_mse(const Eigen::MatrixXd& amplitudes, const ChannelState& ch, const ReceivePolicy& rx,
                   const SystemConfig& cfg);

int outage_indicator(double mse, double threshold);
double outage_probability(const Eigen::MatrixXd& amplitudes, const ChannelState& ch, const ReceivePolicy& rx,
                          const SystemConfig& cfg);

// Full floor: all devices switched on. Without w this is the single-antenna
// floor (N_r = 1) or its Cauchy-Schwarz lower bound (N_r > 1).
double mse_floor_full(const Eigen::MatrixXcd& H, const std::vector<double>& error_variances);
double mse_floor_full(const Eigen::MatrixXcd& H, const std::vector<double>& error_variances,
                      const Eigen::VectorXcd& w);

// active[k] == true marks an unconstrained device (zero dual price); inactive
// devices contribute 1/K^2 each.
double mse_floor_partial(const Eigen::MatrixXcd& H, const std::vector<double>& error_variances,
                         const std::vector<bool>& active);
double mse_floor_partial(const Eigen::MatrixXcd& H, const std::vector<double>& error_variances,
                         const std::vector<bool>& active, const Eigen::VectorXcd& w);

struct FloorReport {
  std::vector<double> floor_full;
  std::vector<double> floor_partial;
  std::vector<bool> active_set;
};

FloorReport floor_report(const ChannelState& ch, const std::vector<bool>& active,
                         const ReceivePolicy* rx = nullptr);

// Mean of the full floor over subcarriers, without a receive policy.
double average_floor(const ChannelState& ch);

// Fills the metric fields of a report from a policy pair.
void fill_metrics(SolveReport& report, const Eigen::MatrixXd& amplitudes, const ChannelState& ch,
                  const ReceivePolicy& rx, const SystemConfig& cfg);

// Total power used by each device.
Eigen::VectorXd device_power(const Eigen::MatrixXd& amplitudes);

}  // namespace aircomp
