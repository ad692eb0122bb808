#pragma once

#include "aircomp/channel.hpp"
#include "aircomp/model.hpp"

#include <iosfwd>
#include <optional>
#include <stdexcept>

namespace aircomp {

class DimensionTooLarge : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Receive factors are searched on [0, w_max]; w_max = 0 means 2K / sigma_z.
struct GridSpec {
  int points = 64;
  int refinements = 2;
  double w_max = 0.0;
};

struct GridResult {
  Eigen::MatrixXd amplitudes;  // K x M
  Eigen::VectorXd w;           // M
  double objective = 0.0;      // average MSE
  // Largest objective change between the incumbent and its neighbours on the
  // finest grid.
  double resolution_bound = 0.0;
};

// Brute-force average-MSE minimizer for K <= 2, M <= 2, N_r = 1. The receive
// factors are gridded; each device's amplitudes are gridded on the first
// subcarrier and set to the clipped quadratic minimizer on the second.
GridResult grid_search_joint(const ChannelState& ch, const SystemConfig& cfg, const GridSpec& spec = {});

struct SweepResult {
  bool feasible = false;
  double cost = 0.0;           // sum_k mu_k b_k^2
  Eigen::VectorXd amplitudes;  // K
  double w = 0.0;              // receive factor used (single antenna)
};

// Minimal priced power meeting the MSE threshold on one subcarrier, found by
// sweeping. H is N_r x K with K <= 2. With w given it is held fixed (any N_r);
// without it N_r must be 1 and the real receive factor is swept as well.
SweepResult min_power_sweep(const Eigen::MatrixXcd& H, const SystemConfig& cfg, const Eigen::VectorXd& mu,
                            const std::optional<Eigen::VectorXcd>& w = std::nullopt, int points = 2001);

struct EnumerationResult {
  int outages = 0;              // number of subcarriers in outage at the best subset
  std::vector<bool> served;     // best subset
};

// Exhaustive search over served subsets for K <= 2, M <= 2, N_r = 1. A subset
// counts as achievable when the sweeps find per-subcarrier points whose
// summed powers fit every budget.
EnumerationResult enumerate_outage(const ChannelState& ch, const SystemConfig& cfg, int points = 401);

// Dual function of the outage problem at mu, with subcarrier costs taken from
// min_power_sweep. In outage probability units.
double sweep_outage_dual(const ChannelState& ch, const SystemConfig& cfg, const Eigen::VectorXd& mu,
                         int points = 2001);

struct EmpiricalMse {
  double mean = 0.0;
  double std_error = 0.0;
};

// Monte Carlo estimate of one subcarrier's MSE from unit-variance CSCG
// sources, fresh estimation errors and receiver noise. b holds the complex
// transmit coefficients. noise_power and the error variances are read from cfg
// without validation so that noiseless cases can be simulated.
EmpiricalMse empirical_mse(const Eigen::VectorXcd& b, const Eigen::VectorXcd& w, const Eigen::MatrixXcd& H,
                           const SystemConfig& cfg, long num_samples, Rng& rng);

struct KktResiduals {
  double stationarity = 0.0;
  double complementary_slackness = 0.0;  // max_k mu_k |P_k - used_k|
  double power_feasibility = 0.0;        // max_k max(0, used_k - P_k)
  double max() const;
};

// Best effort: gradient of the Lagrangian in the amplitudes and in the
// beamformers at the reported prices. Error constrained:
// the threshold violation K^2 max(0, MSE - threshold) over served subcarriers;
// complementary slackness is not evaluated there.
KktResiduals kkt_residuals(const Solution& sol, const ChannelState& ch, const SystemConfig& cfg, Scenario scenario);

struct TinyInstance {
  SystemConfig cfg;
  ChannelState ch;
};

// Random single-antenna instance with K, M drawn from {1, ..., max}, unit
// noise, budgets log-uniform on [0.1, 30], error variances on [0, 0.5] and a
// threshold between 0.3/K and 0.9/K.
TinyInstance random_tiny_instance(std::uint64_t seed, int max_devices = 2, int max_subcarriers = 2);

// Runs the oracle cross-checks on small seeded instances and prints one line
// per check. Returns true when all of them pass.
bool run_verify_suite(std::ostream& out, std::uint64_t seed = 1);

}  // namespace aircomp
