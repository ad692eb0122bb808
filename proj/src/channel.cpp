#include "aircomp/channel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace aircomp {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index) {
  std::uint64_t h = splitmix64(master);
  h = splitmix64(h ^ splitmix64(stream + 0x632BE59BD9B4E019ULL));
  h = splitmix64(h ^ splitmix64(index + 0x85157AF5ULL));
  return h;
}

Rng substream(std::uint64_t master, std::uint64_t realization, std::uint64_t device) {
  return Rng(derive_seed(master, realization, device));
}

VarianceMode variance_mode_from_string(const std::string& s) {
  if (s == "unit") return VarianceMode::unit;
  if (s == "random") return VarianceMode::random;
  throw ConfigError("variance_mode must be unit or random");
}

std::string to_string(VarianceMode mode) { return mode == VarianceMode::unit ? "unit" : "random"; }

std::vector<double> device_variances(VarianceMode mode, int num_devices, std::uint64_t master_seed) {
  std::vector<double> v(num_devices, 1.0);
  if (mode == VarianceMode::random) {
    constexpr std::uint64_t kVarianceStream = ~0ULL;
    for (int k = 0; k < num_devices; ++k) {
      Rng r(derive_seed(master_seed, kVarianceStream, static_cast<std::uint64_t>(k)));
      v[k] = r.uniform(0.5, 1.5);
    }
  }
  return v;
}

ChannelState sample_rayleigh_channel(const SystemConfig& cfg, Rng& rng, const std::vector<double>& variances) {
  const int K = cfg.num_devices, M = cfg.num_subcarriers, N = cfg.num_rx_antennas;
  std::vector<Eigen::MatrixXcd> h(M, Eigen::MatrixXcd(N, K));
  for (int k = 0; k < K; ++k)
    for (int m = 0; m < M; ++m)
      for (int n = 0; n < N; ++n) h[m](n, k) = rng.cscg(variances[k]);
  ChannelState ch;
  ch.estimated = h;
  ch.true_gains = std::move(h);
  ch.error_variances.assign(K, 0.0);
  return ch;
}

ChannelState sample_rayleigh_channel(const SystemConfig& cfg, Rng& rng, VarianceMode mode) {
  std::vector<double> v(cfg.num_devices, 1.0);
  if (mode == VarianceMode::random)
    for (double& x : v) x = rng.uniform(0.5, 1.5);
  return sample_rayleigh_channel(cfg, rng, v);
}

ChannelState sample_estimated_channel(const ChannelState& truth, const std::vector<double>& error_variances,
                                      Rng& rng) {
  if (!truth.true_gains) throw std::invalid_argument("sample_estimated_channel: true gains are required");
  ChannelState out;
  out.true_gains = truth.true_gains;
  out.estimated = *truth.true_gains;
  out.error_variances = error_variances;
  const int M = truth.num_subcarriers(), K = truth.num_devices(), N = truth.num_rx_antennas();
  for (int k = 0; k < K; ++k)
    for (int m = 0; m < M; ++m)
      for (int n = 0; n < N; ++n) out.estimated[m](n, k) += rng.cscg(error_variances[k]);
  return out;
}

ChannelState sample_realization(const SystemConfig& cfg, std::uint64_t master, std::uint64_t realization,
                                const std::vector<double>& variances) {
  const int K = cfg.num_devices, M = cfg.num_subcarriers, N = cfg.num_rx_antennas;
  ChannelState ch;
  std::vector<Eigen::MatrixXcd> h(M, Eigen::MatrixXcd(N, K));
  ch.estimated.assign(M, Eigen::MatrixXcd(N, K));
  ch.error_variances = cfg.error_variances;
  for (int k = 0; k < K; ++k) {
    Rng rng = substream(master, realization, static_cast<std::uint64_t>(k));
    for (int m = 0; m < M; ++m)
      for (int n = 0; n < N; ++n) h[m](n, k) = rng.cscg(variances[k]);
    // unit-variance draws scaled afterwards so every error level shares them
    const double s = std::sqrt(cfg.error_variances[k]);
    for (int m = 0; m < M; ++m)
      for (int n = 0; n < N; ++n) ch.estimated[m](n, k) = h[m](n, k) + s * rng.cscg(1.0);
  }
  ch.true_gains = std::move(h);
  return ch;
}

std::vector<double> relative_delays(const DelaySpec& spec) {
  const std::size_t K = spec.propagation_delays.size();
  if (spec.timing_advances.size() != K)
    throw ConfigError("timing_advances must have one entry per device");
  std::vector<double> d(K);
  for (std::size_t k = 0; k < K; ++k) d[k] = spec.propagation_delays[k] - spec.timing_advances[k];
  if (K == 0) return d;
  const double lo = *std::min_element(d.begin(), d.end());
  for (double& x : d) x -= lo;
  return d;
}

std::vector<Eigen::MatrixXcd> taps_to_subcarrier_gains(const TapChannel& ch, int num_subcarriers) {
  if (num_subcarriers < 1) throw std::invalid_argument("taps_to_subcarrier_gains: M must be positive");
  const int K = static_cast<int>(ch.taps.size());
  const int N = K > 0 ? static_cast<int>(ch.taps[0].rows()) : 0;
  std::vector<Eigen::MatrixXcd> out(num_subcarriers, Eigen::MatrixXcd::Zero(N, K));
  for (int m = 0; m < num_subcarriers; ++m) {
    for (int k = 0; k < K; ++k) {
      const auto& T = ch.taps[k];
      for (int l = 0; l < T.cols(); ++l) {
        // reduce m*l modulo M before forming the angle to keep it small
        const long long ml = (static_cast<long long>(m) * l) % num_subcarriers;
        const double ang = -2.0 * std::numbers::pi * static_cast<double>(ml) / num_subcarriers;
        out[m].col(k) += T.col(l) * std::polar(1.0, ang);
      }
    }
  }
  return out;
}

TapChannel sample_tap_channel(const SystemConfig& cfg, const DelaySpec& delays, int cp_length,
                              const std::vector<double>& variances, Rng& rng) {
  if (!(delays.symbol_period > 0.0)) throw ConfigError("symbol_period must be positive");
  const int K = cfg.num_devices, N = cfg.num_rx_antennas;
  if (static_cast<int>(delays.propagation_delays.size()) != K || static_cast<int>(delays.delay_spreads.size()) != K)
    throw ConfigError("delay spec must have one entry per device");
  const auto rel = relative_delays(delays);
  TapChannel ch;
  ch.cp_length = cp_length;
  ch.delay_pad.resize(K);
  std::vector<int> active(K);
  int L = 1;
  for (int k = 0; k < K; ++k) {
    const double T = delays.symbol_period;
    ch.delay_pad[k] = static_cast<int>(std::ceil(rel[k] / T - 1e-12));
    const int end = static_cast<int>(std::ceil((delays.delay_spreads[k] + rel[k]) / T - 1e-12));
    active[k] = std::max(1, end - ch.delay_pad[k]);
    L = std::max(L, ch.delay_pad[k] + active[k]);
  }
  if (L > cp_length) throw ConfigError("cp_length must cover the delayed channel taps");
  ch.num_taps = L;
  for (int k = 0; k < K; ++k) {
    Eigen::MatrixXcd taps = Eigen::MatrixXcd::Zero(N, L);
    const double var = variances[k] / active[k];
    for (int l = ch.delay_pad[k]; l < ch.delay_pad[k] + active[k]; ++l)
      for (int n = 0; n < N; ++n) taps(n, l) = rng.cscg(var);
    ch.taps.push_back(std::move(taps));
  }
  return ch;
}

ChannelState channel_from_taps(const TapChannel& taps, int num_subcarriers) {
  ChannelState ch;
  ch.estimated = taps_to_subcarrier_gains(taps, num_subcarriers);
  ch.true_gains = ch.estimated;
  ch.error_variances.assign(taps.taps.size(), 0.0);
  return ch;
}

}  // namespace aircomp
