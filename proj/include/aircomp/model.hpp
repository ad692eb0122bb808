#pragma once

#include <Eigen/Dense>

#include <complex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace aircomp {

using cplx = std::complex<double>;

struct SystemConfig {
  int num_devices = 1;
  int num_subcarriers = 1;
  int num_rx_antennas = 1;
  double noise_power = 1.0;
  std::vector<double> power_budgets{1.0};
  std::vector<double> error_variances{0.0};
  double mse_threshold = 0.5;
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Throws ConfigError naming the first offending field.
void validate_config(const SystemConfig& cfg);

enum class Scenario { best_effort, error_constrained };

std::string to_string(Scenario s);
Scenario scenario_from_string(const std::string& s);

// One N_r x K matrix per subcarrier; column k is the gain vector of device k.
struct ChannelState {
  std::vector<Eigen::MatrixXcd> estimated;
  std::vector<double> error_variances;
  std::optional<std::vector<Eigen::MatrixXcd>> true_gains;

  int num_devices() const { return estimated.empty() ? 0 : static_cast<int>(estimated[0].cols()); }
  int num_subcarriers() const { return static_cast<int>(estimated.size()); }
  int num_rx_antennas() const { return estimated.empty() ? 0 : static_cast<int>(estimated[0].rows()); }
};

void check_channel(const ChannelState& ch, const SystemConfig& cfg);

struct TransmitPolicy {
  Eigen::MatrixXd amplitudes;     // K x M, nonnegative
  Eigen::MatrixXcd coefficients;  // K x M, phase aligned to the receive policy
};

struct ReceivePolicy {
  Eigen::MatrixXcd beamformers;  // N_r x M
};

// Dual values and gaps are expressed in the units of the reported metric
// (average MSE for best effort, outage probability for error constrained).
struct SolveReport {
  std::vector<double> per_subcarrier_mse;
  double average_mse = 0.0;
  std::vector<bool> outage_flags;
  double outage_probability = 0.0;
  std::vector<double> dual_mu;
  int iterations = 0;
  bool converged = false;
  std::optional<double> dual_value;
  std::optional<double> duality_gap;
  std::vector<double> dual_trace;
  std::vector<double> objective_trace;
};

struct Solution {
  TransmitPolicy transmit;
  ReceivePolicy receive;
  SolveReport report;
};

// b = b~ * (h^H w) / |w^H h|, or b~ when the projection vanishes.
Eigen::MatrixXcd align_phases(const Eigen::MatrixXd& amplitudes, const ChannelState& ch,
                              const ReceivePolicy& rx);

TransmitPolicy make_transmit(const Eigen::MatrixXd& amplitudes, const ChannelState& ch,
                             const ReceivePolicy& rx);

// Scalar real receive factors for the single-antenna case.
ReceivePolicy scalar_receive(const Eigen::VectorXd& w);

SystemConfig without_estimation_error(SystemConfig cfg);

// Scales rows down so that every device stays within its budget.
void project_to_budgets(Eigen::MatrixXd& amplitudes, const std::vector<double>& budgets);

}  // namespace aircomp
