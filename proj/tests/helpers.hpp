#pragma once

#include "aircomp/model.hpp"

#include <initializer_list>
#include <vector>

namespace testing {

using aircomp::ChannelState;
using aircomp::cplx;
using aircomp::SystemConfig;

// Single-antenna channel, gains[m][k].
inline ChannelState scalar_channel(const std::vector<std::vector<cplx>>& gains, const std::vector<double>& errors) {
  ChannelState ch;
  for (const auto& row : gains) {
    Eigen::MatrixXcd H(1, row.size());
    for (std::size_t k = 0; k < row.size(); ++k) H(0, k) = row[k];
    ch.estimated.push_back(H);
  }
  ch.error_variances = errors;
  return ch;
}

inline SystemConfig config(int K, int M, int N, double noise, double budget, double err, double threshold = 0.5) {
  SystemConfig c;
  c.num_devices = K;
  c.num_subcarriers = M;
  c.num_rx_antennas = N;
  c.noise_power = noise;
  c.power_budgets.assign(K, budget);
  c.error_variances.assign(K, err);
  c.mse_threshold = threshold;
  return c;
}

}  // namespace testing
