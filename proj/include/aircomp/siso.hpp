#pragma once

#include "aircomp/model.hpp"
#include "aircomp/optim.hpp"

#include <stdexcept>

namespace aircomp {

inline constexpr double kMinReceiveFactor = 1e-9;

class InfeasibleSubcarrier : public std::runtime_error {
 public:
  explicit InfeasibleSubcarrier(int m)
      : std::runtime_error("subcarrier " + std::to_string(m) + " cannot meet the MSE threshold"), subcarrier(m) {}
  int subcarrier;
};

struct SolverOptions {
  EllipsoidSettings ellipsoid;  // radius and center are filled in by the solver when left at defaults
  bool record_dual_trace = false;
  // Outage solvers: how many subcarriers past the best prefix are tried greedily.
  int extra_candidates = 8;
};

// Lagrangian minimizer of the single-antenna average-MSE problem for fixed
// prices. Values are unscaled (sum over subcarriers of K^2 * MSE).
struct SisoAvgInner {
  Eigen::MatrixXd amplitudes;  // K x M
  Eigen::VectorXd w;           // M
  Eigen::VectorXd power;       // K, sum over m of amplitude^2
  double lagrangian = 0.0;
  double dual_value = 0.0;  // lagrangian - mu . P
};

SisoAvgInner siso_avg_inner(const Eigen::VectorXd& mu, const ChannelState& ch, const SystemConfig& cfg);

Solution solve_siso_avg(const ChannelState& ch, const SystemConfig& cfg, const SolverOptions& opts = {});

enum class SubcarrierClass { forced_outage, free_success, contested };

struct OutageSubproblem {
  SubcarrierClass kind = SubcarrierClass::contested;
  Eigen::VectorXd amplitudes;
  double w = 0.0;
  double cost = 0.0;    // sum_k mu_k amplitude_k^2
  double lambda = 0.0;  // price of the MSE constraint (0 when it is not needed)
  double v = 0.0;       // lambda * w^2
};

SubcarrierClass classify_siso_subcarrier(const Eigen::MatrixXcd& H, const SystemConfig& cfg);

// Minimum priced power meeting the MSE threshold on one subcarrier.
// Throws InfeasibleSubcarrier below the floor.
OutageSubproblem siso_outage_subcarrier(const Eigen::VectorXd& mu, const Eigen::MatrixXcd& H, const SystemConfig& cfg,
                                        int subcarrier = 0);

// true keeps the subcarrier; ties at cost 1 keep it.
bool siso_outage_decision(double cost);

Solution solve_siso_outage(const ChannelState& ch, const SystemConfig& cfg, const SolverOptions& opts = {});

}  // namespace aircomp
