#pragma once

#include "aircomp/model.hpp"

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace aircomp {

std::uint64_t splitmix64(std::uint64_t x);

// Seed of the substream identified by (stream, index) under a master seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double normal() { return normal_(engine_); }
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
  // CN(0, variance): real and imaginary parts each N(0, variance / 2).
  cplx cscg(double variance) {
    const double s = std::sqrt(0.5 * variance);
    const double re = normal();
    const double im = normal();
    return {s * re, s * im};
  }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

// Stream for one (realization, device) pair.
Rng substream(std::uint64_t master, std::uint64_t realization, std::uint64_t device);

enum class VarianceMode { unit, random };

VarianceMode variance_mode_from_string(const std::string& s);
std::string to_string(VarianceMode mode);

// Large-scale gains per device: all ones, or Uniform[0.5, 1.5] drawn from a
// dedicated stream of the master seed (device k always gets the same value).
std::vector<double> device_variances(VarianceMode mode, int num_devices, std::uint64_t master_seed);

// True gains h ~ CN(0, var_k I); the estimate equals the truth until
// sample_estimated_channel adds an error.
ChannelState sample_rayleigh_channel(const SystemConfig& cfg, Rng& rng, const std::vector<double>& variances);
ChannelState sample_rayleigh_channel(const SystemConfig& cfg, Rng& rng, VarianceMode mode);

// h_hat = h + e with e ~ CN(0, err_k I).
ChannelState sample_estimated_channel(const ChannelState& truth, const std::vector<double>& error_variances,
                                      Rng& rng);

// One Monte Carlo realization drawn from per-device substreams, so the result
// depends only on (master, realization) and not on scheduling.
ChannelState sample_realization(const SystemConfig& cfg, std::uint64_t master, std::uint64_t realization,
                                const std::vector<double>& variances);

struct DelaySpec {
  std::vector<double> propagation_delays;
  std::vector<double> timing_advances;
  std::vector<double> delay_spreads;
  double symbol_period = 1.0;
};

struct TapChannel {
  std::vector<Eigen::MatrixXcd> taps;  // per device, N_r x num_taps
  int num_taps = 1;
  int cp_length = 1;
  std::vector<int> delay_pad;
};

std::vector<double> relative_delays(const DelaySpec& spec);

// h_{k,m} = sum_l taps_{k,l} exp(-j 2 pi m l / M); result is one N_r x K matrix per subcarrier.
std::vector<Eigen::MatrixXcd> taps_to_subcarrier_gains(const TapChannel& ch, int num_subcarriers);

// Leading zero taps from the relative delays, then ceil(spread / T) taps
// sharing the device variance equally.
TapChannel sample_tap_channel(const SystemConfig& cfg, const DelaySpec& delays, int cp_length,
                              const std::vector<double>& variances, Rng& rng);

ChannelState channel_from_taps(const TapChannel& taps, int num_subcarriers);

}  // namespace aircomp
