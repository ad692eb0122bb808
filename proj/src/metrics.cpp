#include "aircomp/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace aircomp {

namespace {

// floor contribution of one device: e / (g^2 + e), or 1 when it cannot help at all
double floor_term(double gain2, double err) {
  const double den = gain2 + err;
  return den > 0.0 ? err / den : 1.0;
}

double floor_sum(const Eigen::MatrixXcd& H, const std::vector<double>& ev, const std::vector<bool>* active,
                 const Eigen::VectorXcd* w) {
  const int K = static_cast<int>(H.cols());
  double sum = 0.0;
  double wn2 = 1.0;
  Eigen::VectorXd gain2(K);
  if (w) {
    wn2 = w->squaredNorm();
    gain2 = (H.adjoint() * *w).cwiseAbs2();
  } else {
    gain2 = H.colwise().squaredNorm().transpose();
  }
  for (int k = 0; k < K; ++k) {
    if (active && !(*active)[k])
      sum += 1.0;
    else
      sum += floor_term(gain2(k), wn2 * ev[k]);
  }
  return sum / (static_cast<double>(K) * K);
}

}  // namespace

MseTerms mse_terms(const Eigen::VectorXd& amplitudes, const Eigen::MatrixXcd& H, const Eigen::VectorXcd& w,
                   double noise_power, const std::vector<double>& error_variances) {
  const int K = static_cast<int>(H.cols());
  const double scale = 1.0 / (static_cast<double>(K) * K);
  const double wn2 = w.squaredNorm();
  const Eigen::VectorXcd proj = H.adjoint() * w;
  MseTerms t;
  for (int k = 0; k < K; ++k) {
    const double b = amplitudes(k);
    const double r = std::abs(proj(k)) * b - 1.0;
    t.misalignment += r * r;
    t.csi += wn2 * error_variances[k] * b * b;
  }
  t.misalignment *= scale;
  t.csi *= scale;
  t.noise = wn2 * noise_power * scale;
  return t;
}

double mse_subcarrier(const Eigen::VectorXd& amplitudes, const Eigen::MatrixXcd& H, const Eigen::VectorXcd& w,
                      double noise_power, const std::vector<double>& error_variances) {
  return mse_terms(amplitudes, H, w, noise_power, error_variances).total();
}

std::vector<double> per_subcarrier_mse(const Eigen::MatrixXd& amplitudes, const ChannelState& ch,
                                       const ReceivePolicy& rx, const SystemConfig& cfg) {
  const int M = ch.num_subcarriers();
  std::vector<double> out(M);
  for (int m = 0; m < M; ++m)
    out[m] = mse_subcarrier(amplitudes.col(m), ch.estimated[m], rx.beamformers.col(m), cfg.noise_power,
                            cfg.error_variances);
  return out;
}

double average_mse(const Eigen::MatrixXd& amplitudes, const ChannelState& ch, const ReceivePolicy& rx,
                   const SystemConfig& cfg) {
  const auto v = per_subcarrier_mse(amplitudes, ch, rx, cfg);
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

int outage_indicator(double mse, double threshold) { return mse <= threshold + kOutageSlack ? 0 : 1; }

double outage_probability(const Eigen::MatrixXd& amplitudes, const ChannelState& ch, const ReceivePolicy& rx,
                          const SystemConfig& cfg) {
  const auto v = per_subcarrier_mse(amplitudes, ch, rx, cfg);
  int n = 0;
  for (double x : v) n += outage_indicator(x, cfg.mse_threshold);
  return static_cast<double>(n) / static_cast<double>(v.size());
}

double mse_floor_full(const Eigen::MatrixXcd& H, const std::vector<double>& error_variances) {
  return floor_sum(H, error_variances, nullptr, nullptr);
}

double mse_floor_full(const Eigen::MatrixXcd& H, const std::vector<double>& error_variances,
                      const Eigen::VectorXcd& w) {
  if (w.squaredNorm() == 0.0) {
    if (H.rows() > 1) throw std::invalid_argument("mse_floor_full: receive vector must be nonzero");
    return floor_sum(H, error_variances, nullptr, nullptr);
  }
  return floor_sum(H, error_variances, nullptr, &w);
}

double mse_floor_partial(const Eigen::MatrixXcd& H, const std::vector<double>& error_variances,
                         const std::vector<bool>& active) {
  return floor_sum(H, error_variances, &active, nullptr);
}

double mse_floor_partial(const Eigen::MatrixXcd& H, const std::vector<double>& error_variances,
                         const std::vector<bool>& active, const Eigen::VectorXcd& w) {
  if (w.squaredNorm() == 0.0) {
    if (H.rows() > 1) throw std::invalid_argument("mse_floor_partial: receive vector must be nonzero");
    return floor_sum(H, error_variances, &active, nullptr);
  }
  return floor_sum(H, error_variances, &active, &w);
}

FloorReport floor_report(const ChannelState& ch, const std::vector<bool>& active, const ReceivePolicy* rx) {
  FloorReport r;
  r.active_set = active;
  for (int m = 0; m < ch.num_subcarriers(); ++m) {
    const auto& H = ch.estimated[m];
    if (rx) {
      const Eigen::VectorXcd w = rx->beamformers.col(m);
      r.floor_full.push_back(mse_floor_full(H, ch.error_variances, w));
      r.floor_partial.push_back(mse_floor_partial(H, ch.error_variances, active, w));
    } else {
      r.floor_full.push_back(mse_floor_full(H, ch.error_variances));
      r.floor_partial.push_back(mse_floor_partial(H, ch.error_variances, active));
    }
  }
  return r;
}

double average_floor(const ChannelState& ch) {
  double s = 0.0;
  for (const auto& H : ch.estimated) s += mse_floor_full(H, ch.error_variances);
  return s / static_cast<double>(ch.num_subcarriers());
}

void fill_metrics(SolveReport& report, const Eigen::MatrixXd& amplitudes, const ChannelState& ch,
                  const ReceivePolicy& rx, const SystemConfig& cfg) {
  report.per_subcarrier_mse = per_subcarrier_mse(amplitudes, ch, rx, cfg);
  const auto M = report.per_subcarrier_mse.size();
  report.outage_flags.assign(M, false);
  double sum = 0.0;
  int outages = 0;
  for (std::size_t m = 0; m < M; ++m) {
    sum += report.per_subcarrier_mse[m];
    const bool out = outage_indicator(report.per_subcarrier_mse[m], cfg.mse_threshold) == 1;
    report.outage_flags[m] = out;
    outages += out ? 1 : 0;
  }
  report.average_mse = sum / static_cast<double>(M);
  report.outage_probability = static_cast<double>(outages) / static_cast<double>(M);
}

Eigen::VectorXd device_power(const Eigen::MatrixXd& amplitudes) {
  return amplitudes.rowwise().squaredNorm();
}

}  // namespace aircomp
