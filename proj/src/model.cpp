#include "aircomp/model.hpp"

#include <cmath>

namespace aircomp {

namespace {

bool finite_positive(double x) { return std::isfinite(x) && x > 0.0; }

}  // namespace

void validate_config(const SystemConfig& cfg) {
  if (cfg.num_devices < 1) throw ConfigError("num_devices must be positive");
  if (cfg.num_subcarriers < 1) throw ConfigError("num_subcarriers must be positive");
  if (cfg.num_rx_antennas < 1) throw ConfigError("num_rx_antennas must be positive");
  if (!finite_positive(cfg.noise_power)) throw ConfigError("noise_power must be positive");
  const auto K = static_cast<std::size_t>(cfg.num_devices);
  if (cfg.power_budgets.size() != K)
    throw ConfigError("power_budgets must have num_devices entries");
  for (double p : cfg.power_budgets)
    if (!finite_positive(p)) throw ConfigError("power_budgets must be positive");
  if (cfg.error_variances.size() != K)
    throw ConfigError("error_variances must have num_devices entries");
  for (double e : cfg.error_variances)
    if (!std::isfinite(e) || e < 0.0) throw ConfigError("error_variances must be nonnegative");
  if (!finite_positive(cfg.mse_threshold)) throw ConfigError("mse_threshold must be positive");
}

std::string to_string(Scenario s) {
  return s == Scenario::best_effort ? "best_effort" : "error_constrained";
}

Scenario scenario_from_string(const std::string& s) {
  if (s == "best_effort") return Scenario::best_effort;
  if (s == "error_constrained") return Scenario::error_constrained;
  throw ConfigError("scenario must be best_effort or error_constrained");
}

void check_channel(const ChannelState& ch, const SystemConfig& cfg) {
  if (ch.num_subcarriers() != cfg.num_subcarriers)
    throw ConfigError("channel num_subcarriers does not match config");
  for (const auto& H : ch.estimated) {
    if (H.cols() != cfg.num_devices) throw ConfigError("channel num_devices does not match config");
    if (H.rows() != cfg.num_rx_antennas)
      throw ConfigError("channel num_rx_antennas does not match config");
    if (!H.allFinite()) throw ConfigError("channel gains must be finite");
  }
}

Eigen::MatrixXcd align_phases(const Eigen::MatrixXd& amplitudes, const ChannelState& ch,
                              const ReceivePolicy& rx) {
  const int K = static_cast<int>(amplitudes.rows());
  const int M = static_cast<int>(amplitudes.cols());
  Eigen::MatrixXcd b(K, M);
  for (int m = 0; m < M; ++m) {
    const Eigen::VectorXcd proj = ch.estimated[m].adjoint() * rx.beamformers.col(m);
    for (int k = 0; k < K; ++k) {
      const double mag = std::abs(proj(k));
      b(k, m) = mag > 0.0 ? amplitudes(k, m) * proj(k) / mag : cplx(amplitudes(k, m), 0.0);
    }
  }
  return b;
}

TransmitPolicy make_transmit(const Eigen::MatrixXd& amplitudes, const ChannelState& ch,
                             const ReceivePolicy& rx) {
  return TransmitPolicy{amplitudes, align_phases(amplitudes, ch, rx)};
}

ReceivePolicy scalar_receive(const Eigen::VectorXd& w) {
  ReceivePolicy rx;
  rx.beamformers = w.transpose().cast<cplx>();
  return rx;
}

SystemConfig without_estimation_error(SystemConfig cfg) {
  for (double& e : cfg.error_variances) e = 0.0;
  return cfg;
}

void project_to_budgets(Eigen::MatrixXd& amplitudes, const std::vector<double>& budgets) {
  for (Eigen::Index k = 0; k < amplitudes.rows(); ++k) {
    double used = amplitudes.row(k).squaredNorm();
    if (used <= budgets[k]) continue;
    double f = std::sqrt(budgets[k] / used);
    amplitudes.row(k) *= f;
    while (amplitudes.row(k).squaredNorm() > budgets[k]) amplitudes.row(k) *= std::nextafter(1.0, 0.0);
  }
}

}  // namespace aircomp
