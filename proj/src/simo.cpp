#include "aircomp/simo.hpp"

#include "aircomp/benchmarks.hpp"
#include "aircomp/metrics.hpp"
#include "outage_engine.hpp"

#include <cmath>
#include <limits>

namespace aircomp {

namespace {

void require_valid(const ChannelState& ch, const SystemConfig& cfg) {
  validate_config(cfg);
  check_channel(ch, cfg);
}

double receive_noise(const Eigen::VectorXd& b, const SystemConfig& cfg) {
  double c = cfg.noise_power;
  for (Eigen::Index k = 0; k < b.size(); ++k) c += b(k) * b(k) * cfg.error_variances[k];
  return c;
}

Eigen::VectorXcd unit_phases(const Eigen::MatrixXcd& H, const Eigen::VectorXcd& w) {
  Eigen::VectorXcd phi = H.adjoint() * w;
  for (Eigen::Index k = 0; k < phi.size(); ++k) {
    const double mag = std::abs(phi(k));
    phi(k) = mag > 0.0 ? phi(k) / mag : cplx(1.0, 0.0);
  }
  return phi;
}

// (c I + A A^H)^{-1} A phi with A = H diag(b), solved in the smaller dimension.
Eigen::VectorXcd mmse_beamformer(const Eigen::VectorXd& b, const Eigen::MatrixXcd& H, const Eigen::VectorXcd& phi,
                                 const SystemConfig& cfg) {
  const double c = receive_noise(b, cfg);
  const Eigen::MatrixXcd A = H * b.cast<cplx>().asDiagonal();
  if (H.rows() <= H.cols()) {
    Eigen::MatrixXcd R = A * A.adjoint();
    R.diagonal().array() += c;
    return R.llt().solve(A * phi);
  }
  Eigen::MatrixXcd G = A.adjoint() * A;
  G.diagonal().array() += c;
  return A * G.llt().solve(phi);
}

double subcarrier_mse(const Eigen::VectorXd& b, const Eigen::MatrixXcd& H, const Eigen::VectorXcd& w,
                      const SystemConfig& cfg) {
  return mse_subcarrier(b, H, w, cfg.noise_power, cfg.error_variances);
}

struct Candidate {
  Eigen::MatrixXd amplitudes;
  ReceivePolicy receive;
};

std::vector<Candidate> initial_candidates(const ChannelState& ch, const SystemConfig& cfg, InitMode mode) {
  std::vector<Candidate> out;
  if (mode != InitMode::channel_inversion) {
    const PolicyPair p = equal_power_policy(ch, cfg);
    out.push_back({p.transmit.amplitudes, p.receive});
  }
  if (mode != InitMode::equal_power) {
    const PolicyPair p = channel_inversion_policy(ch, cfg);
    out.push_back({p.transmit.amplitudes, p.receive});
  }
  return out;
}

double normalized_power(const Eigen::MatrixXd& amplitudes, const SystemConfig& cfg) {
  double s = 0.0;
  for (Eigen::Index k = 0; k < amplitudes.rows(); ++k) s += amplitudes.row(k).squaredNorm() / cfg.power_budgets[k];
  return s;
}

}  // namespace

std::string to_string(InitMode mode) {
  switch (mode) {
    case InitMode::equal_power: return "equal_power";
    case InitMode::channel_inversion: return "channel_inversion";
    case InitMode::best_of_benchmarks: return "best_of_benchmarks";
  }
  return "best_of_benchmarks";
}

InitMode init_mode_from_string(const std::string& s) {
  if (s == "equal_power") return InitMode::equal_power;
  if (s == "channel_inversion") return InitMode::channel_inversion;
  if (s == "best_of_benchmarks") return InitMode::best_of_benchmarks;
  throw ConfigError("init_mode must be equal_power, channel_inversion or best_of_benchmarks");
}

ReceivePolicy mmse_receive_update(const Eigen::MatrixXd& amplitudes, const ChannelState& ch, const SystemConfig& cfg,
                                  const ReceivePolicy* prev) {
  const int M = cfg.num_subcarriers, N = cfg.num_rx_antennas, K = cfg.num_devices;
  ReceivePolicy rx;
  rx.beamformers = prev ? prev->beamformers : Eigen::MatrixXcd::Zero(N, M);
  for (int m = 0; m < M; ++m) {
    const Eigen::VectorXd b = amplitudes.col(m);
    if (b.maxCoeff() <= 0.0) continue;
    const Eigen::VectorXcd phi =
        prev ? unit_phases(ch.estimated[m], prev->beamformers.col(m)) : Eigen::VectorXcd::Ones(K);
    rx.beamformers.col(m) = mmse_beamformer(b, ch.estimated[m], phi, cfg);
  }
  return rx;
}

ReceivePolicy mmse_receive_for_amplitudes(const Eigen::MatrixXd& amplitudes, const ChannelState& ch,
                                          const SystemConfig& cfg) {
  const int M = cfg.num_subcarriers, N = cfg.num_rx_antennas;
  ReceivePolicy rx;
  rx.beamformers = Eigen::MatrixXcd::Zero(N, M);
  for (int m = 0; m < M; ++m) {
    const Eigen::VectorXd b = amplitudes.col(m);
    if (b.maxCoeff() <= 0.0) continue;
    const Eigen::MatrixXcd& H = ch.estimated[m];
    const Eigen::MatrixXcd A = H * b.cast<cplx>().asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(A.adjoint() * A);
    Eigen::VectorXcd w = A * eig.eigenvectors().col(A.cols() - 1);
    if (w.norm() == 0.0) w = H.col(0);

    w = mmse_beamformer(b, H, unit_phases(H, w), cfg);
    double best = subcarrier_mse(b, H, w, cfg);
    for (int pass = 0; pass < 20; ++pass) {
      const Eigen::VectorXcd next = mmse_beamformer(b, H, unit_phases(H, w), cfg);
      const double val = subcarrier_mse(b, H, next, cfg);
      if (!(val < best)) break;
      best = val;
      w = next;
    }
    rx.beamformers.col(m) = w;
  }
  return rx;
}

TransmitUpdate simo_transmit_update_avg(const ReceivePolicy& rx, const ChannelState& ch, const SystemConfig& cfg) {
  const int K = cfg.num_devices, M = cfg.num_subcarriers;
  TransmitUpdate out;
  out.amplitudes = Eigen::MatrixXd::Zero(K, M);
  out.mu = Eigen::VectorXd::Zero(K);

  Eigen::MatrixXd gain(K, M);
  Eigen::VectorXd norm2(M);
  for (int m = 0; m < M; ++m) {
    const Eigen::VectorXcd w = rx.beamformers.col(m);
    norm2(m) = w.squaredNorm();
    gain.col(m) = (ch.estimated[m].adjoint() * w).cwiseAbs();
  }
  for (int k = 0; k < K; ++k) {
    auto amp = [&](int m, double mu) {
      const double g = gain(k, m);
      return g > 0.0 ? g / (g * g + norm2(m) * cfg.error_variances[k] + mu) : 0.0;
    };
    auto power = [&](double mu) {
      double s = 0.0;
      for (int m = 0; m < M; ++m) {
        const double b = amp(m, mu);
        s += b * b;
      }
      return s;
    };
    double mu = 0.0;
    if (power(0.0) > cfg.power_budgets[k]) mu = bisect_decreasing(power, cfg.power_budgets[k], kTightBisection);
    out.mu(k) = mu;
    for (int m = 0; m < M; ++m) out.amplitudes(k, m) = amp(m, mu);
  }
  project_to_budgets(out.amplitudes, cfg.power_budgets);
  return out;
}

namespace {

constexpr double kMinExtrapolation = 0.5;
constexpr double kMaxExtrapolation = 50.0;
constexpr int kPhasePasses = 3;

struct AoStep {
  TransmitUpdate tx;
  ReceivePolicy receive;
  double objective = 0.0;
};

// Transmit update at rx, then the receive update with a few phase passes.
AoStep ao_step(const ReceivePolicy& rx, const ChannelState& ch, const SystemConfig& cfg) {
  AoStep s;
  s.tx = simo_transmit_update_avg(rx, ch, cfg);
  s.receive = mmse_receive_update(s.tx.amplitudes, ch, cfg, &rx);
  for (int p = 0; p < kPhasePasses; ++p) s.receive = mmse_receive_update(s.tx.amplitudes, ch, cfg, &s.receive);
  s.objective = average_mse(s.tx.amplitudes, ch, s.receive, cfg);
  return s;
}

}  // namespace

Solution solve_simo_avg(const ChannelState& ch, const SystemConfig& cfg, const AoSettings& settings) {
  require_valid(ch, cfg);
  if (settings.max_iters < 1) throw ConfigError("max_iters must be at least 1");

  Candidate cur;
  double obj = std::numeric_limits<double>::infinity();
  for (auto& c : initial_candidates(ch, cfg, settings.init_mode)) {
    const double v = average_mse(c.amplitudes, ch, c.receive, cfg);
    if (v < obj) {
      obj = v;
      cur = std::move(c);
    }
  }

  Solution sol;
  auto& rep = sol.report;
  rep.objective_trace.push_back(obj);
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(cfg.num_devices);
  double beta = kMinExtrapolation;
  int it = 0;
  bool converged = false;
  while (it < settings.max_iters) {
    ++it;
    AoStep step = ao_step(cur.receive, ch, cfg);
    // extrapolated beamformers, kept only when they lower the objective
    ReceivePolicy ahead;
    ahead.beamformers = step.receive.beamformers + beta * (step.receive.beamformers - cur.receive.beamformers);
    AoStep alt = ao_step(ahead, ch, cfg);
    if (alt.objective < step.objective) {
      step = std::move(alt);
      beta = std::min(1.5 * beta, kMaxExtrapolation);
    } else {
      beta = std::max(0.5 * beta, kMinExtrapolation);
    }
    rep.objective_trace.push_back(step.objective);
    const double drop = obj - step.objective;
    if (step.objective <= obj) {
      cur = {std::move(step.tx.amplitudes), std::move(step.receive)};
      mu = step.tx.mu;
      obj = step.objective;
    }
    if (drop < settings.rel_obj_tol * std::max(obj, std::numeric_limits<double>::min())) {
      converged = true;
      break;
    }
  }

  sol.receive = cur.receive;
  sol.transmit = make_transmit(cur.amplitudes, ch, sol.receive);
  fill_metrics(rep, cur.amplitudes, ch, sol.receive, cfg);
  rep.dual_mu.assign(mu.data(), mu.data() + mu.size());
  rep.iterations = it;
  rep.converged = converged;
  return sol;
}

SubcarrierClass classify_simo_subcarrier(const Eigen::VectorXcd& w, const Eigen::MatrixXcd& H,
                                         const SystemConfig& cfg) {
  const int K = cfg.num_devices;
  const double q = w.squaredNorm();
  const double budget = cfg.mse_threshold * K * K - q * cfg.noise_power;
  if (budget >= K) return SubcarrierClass::free_success;
  const Eigen::VectorXd g = (H.adjoint() * w).cwiseAbs();
  double floor_sum = 0.0;
  for (int k = 0; k < K; ++k) {
    const double e = q * cfg.error_variances[k];
    const double den = g(k) * g(k) + e;
    floor_sum += den > 0.0 ? e / den : 1.0;
  }
  if (budget <= floor_sum) return SubcarrierClass::forced_outage;
  return SubcarrierClass::contested;
}

OutageSubproblem simo_outage_subcarrier(const Eigen::VectorXd& mu, const Eigen::VectorXcd& w,
                                        const Eigen::MatrixXcd& H, const SystemConfig& cfg, int subcarrier) {
  const int K = cfg.num_devices;
  OutageSubproblem out;
  out.amplitudes = Eigen::VectorXd::Zero(K);
  out.w = w.norm();
  out.kind = classify_simo_subcarrier(w, H, cfg);
  if (out.kind == SubcarrierClass::forced_outage) throw InfeasibleSubcarrier(subcarrier);
  if (out.kind == SubcarrierClass::free_success) return out;

  const double q = w.squaredNorm();
  const double budget = cfg.mse_threshold * K * K - q * cfg.noise_power;
  const Eigen::VectorXd g = (H.adjoint() * w).cwiseAbs();
  Eigen::VectorXd e(K), fl(K);
  double partial = 0.0;
  for (int k = 0; k < K; ++k) {
    e(k) = q * cfg.error_variances[k];
    const double den = g(k) * g(k) + e(k);
    fl(k) = den > 0.0 ? e(k) / den : 1.0;
    partial += mu(k) > 0.0 ? 1.0 : fl(k);
  }

  auto floor_amp = [&](int k) {
    const double den = g(k) * g(k) + e(k);
    return den > 0.0 ? g(k) / den : 0.0;
  };
  if (budget >= partial - 1e-12 * K * K) {
    for (int k = 0; k < K; ++k)
      if (mu(k) <= 0.0) out.amplitudes(k) = floor_amp(k);
    return out;
  }

  auto F = [&](double lambda) {
    double s = 0.0;
    for (int k = 0; k < K; ++k) {
      if (mu(k) <= 0.0) {
        s += fl(k);
        continue;
      }
      const double d = lambda * (g(k) * g(k) + e(k)) + mu(k);
      const double r = lambda * e(k) + mu(k);
      s += (r * r + lambda * lambda * g(k) * g(k) * e(k)) / (d * d);
    }
    return s;
  };
  const double lambda = bisect_decreasing(F, budget, kTightBisection);
  out.lambda = lambda;
  out.v = lambda * q;
  for (int k = 0; k < K; ++k) {
    double b;
    if (mu(k) <= 0.0) {
      b = floor_amp(k);
    } else {
      const double d = lambda * (g(k) * g(k) + e(k)) + mu(k);
      b = lambda * g(k) / d;
    }
    out.amplitudes(k) = b;
    out.cost += mu(k) * b * b;
  }
  return out;
}

namespace {

struct SimoOutageProblem {
  const ChannelState& ch;
  const SystemConfig& cfg;
  const ReceivePolicy& rx;
  std::vector<SubcarrierClass> kinds;

  int num_devices() const { return cfg.num_devices; }
  int num_subcarriers() const { return cfg.num_subcarriers; }
  const std::vector<double>& budgets() const { return cfg.power_budgets; }
  SubcarrierClass kind(int m) const { return kinds[m]; }
  OutageSubproblem solve(int m, const Eigen::VectorXd& mu) const {
    return simo_outage_subcarrier(mu, rx.beamformers.col(m), ch.estimated[m], cfg, m);
  }
};

}  // namespace

OutageTransmitStep simo_outage_transmit_step(const ReceivePolicy& rx, const ChannelState& ch, const SystemConfig& cfg,
                                             const SolverOptions& opts) {
  require_valid(ch, cfg);
  const int M = cfg.num_subcarriers;
  SimoOutageProblem prob{ch, cfg, rx, {}};
  for (int m = 0; m < M; ++m)
    prob.kinds.push_back(classify_simo_subcarrier(rx.beamformers.col(m), ch.estimated[m], cfg));
  const detail::OutageEngineResult r = detail::OutageEngine<SimoOutageProblem>(prob, opts).run();
  OutageTransmitStep out;
  out.amplitudes = r.amplitudes;
  out.mu = r.mu;
  out.dual_value = r.dual_value / M;
  out.iterations = r.iterations;
  out.converged = r.converged;
  return out;
}

Solution solve_simo_outage(const ChannelState& ch, const SystemConfig& cfg, const AoSettings& settings) {
  require_valid(ch, cfg);
  if (settings.max_iters < 1) throw ConfigError("max_iters must be at least 1");
  const int M = cfg.num_subcarriers;

  struct Scored {
    Candidate c;
    Eigen::VectorXd mu;
    int count = 0;
    double power = 0.0;
    bool better_than(const Scored& o) const { return count < o.count || (count == o.count && power < o.power); }
  };
  auto score = [&](Candidate c, Eigen::VectorXd mu) {
    Scored s{std::move(c), std::move(mu), 0, 0.0};
    const double p = outage_probability(s.c.amplitudes, ch, s.c.receive, cfg);
    s.count = static_cast<int>(std::lround(p * M));
    s.power = normalized_power(s.c.amplitudes, cfg);
    return s;
  };

  std::optional<Scored> best;
  for (auto& c : initial_candidates(ch, cfg, settings.init_mode)) {
    Scored s = score(std::move(c), Eigen::VectorXd::Zero(cfg.num_devices));
    if (!best || s.better_than(*best)) best = std::move(s);
  }

  Solution sol;
  auto& rep = sol.report;
  rep.objective_trace.push_back(static_cast<double>(best->count) / M);
  ReceivePolicy rx = best->c.receive;
  int it = 0, stable = 0, last = -1;
  bool converged = false;
  while (it < settings.max_iters) {
    ++it;
    const OutageTransmitStep step = simo_outage_transmit_step(rx, ch, cfg, settings.solver);
    ReceivePolicy next = mmse_receive_update(step.amplitudes, ch, cfg, &rx);
    Scored s = score({step.amplitudes, next}, step.mu);
    rep.objective_trace.push_back(static_cast<double>(s.count) / M);
    stable = s.count == last ? stable + 1 : 0;
    last = s.count;
    if (s.better_than(*best)) best = s;
    rx = std::move(next);
    if (stable >= 2) {
      converged = true;
      break;
    }
  }

  sol.receive = best->c.receive;
  sol.transmit = make_transmit(best->c.amplitudes, ch, sol.receive);
  fill_metrics(rep, best->c.amplitudes, ch, sol.receive, cfg);
  rep.dual_mu.assign(best->mu.data(), best->mu.data() + best->mu.size());
  rep.iterations = it;
  rep.converged = converged;
  return sol;
}

}  // namespace aircomp
