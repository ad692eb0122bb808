#include "aircomp/siso.hpp"

#include "aircomp/metrics.hpp"
#include "outage_engine.hpp"

#include <cmath>

namespace aircomp {

namespace {

double floor_term(double a, double e) { return a > 0.0 ? e / a : 1.0; }

void require_single_antenna(const ChannelState& ch, const SystemConfig& cfg) {
  validate_config(cfg);
  check_channel(ch, cfg);
  if (cfg.num_rx_antennas != 1) throw ConfigError("num_rx_antennas must be 1 for the single-antenna solvers");
}

Eigen::VectorXd budgets_of(const SystemConfig& cfg) {
  return Eigen::Map<const Eigen::VectorXd>(cfg.power_budgets.data(), cfg.num_devices);
}

// Newton iterations on log-prices so that every priced device spends exactly
// its budget; devices whose budget is slack at zero price are left unpriced.
Eigen::VectorXd polish_prices(Eigen::VectorXd mu, const ChannelState& ch, const SystemConfig& cfg, int& evals,
                              bool& ok) {
  const int K = cfg.num_devices;
  const Eigen::VectorXd P = budgets_of(cfg);
  constexpr double kTol = 1e-13;
  constexpr double kStep = 1e-7;
  auto power = [&](const Eigen::VectorXd& x) {
    ++evals;
    return siso_avg_inner(x, ch, cfg).power;
  };

  for (int k = 0; k < K; ++k) {
    if (mu(k) <= 0.0) continue;
    Eigen::VectorXd trial = mu;
    trial(k) = 0.0;
    if (power(trial)(k) <= P(k)) mu = trial;
  }

  double res = 0.0;
  for (int outer = 0; outer < 6; ++outer) {
    Eigen::VectorXd S = power(mu);
    bool changed = false;
    const double seed = 1e-8 * std::max(1.0, mu.maxCoeff());
    for (int k = 0; k < K; ++k) {
      if (mu(k) == 0.0 && S(k) > P(k) * (1.0 + kTol)) {
        mu(k) = seed;
        changed = true;
      }
    }
    if (changed) S = power(mu);

    std::vector<int> act;
    for (int k = 0; k < K; ++k)
      if (mu(k) > 0.0) act.push_back(k);
    const int n = static_cast<int>(act.size());
    auto residual = [&](const Eigen::VectorXd& s, Eigen::VectorXd& F) {
      F.resize(n);
      for (int i = 0; i < n; ++i) F(i) = s(act[i]) / P(act[i]) - 1.0;
      return n ? F.cwiseAbs().maxCoeff() : 0.0;
    };
    Eigen::VectorXd F;
    res = residual(S, F);
    for (int it = 0; it < 60 && res > kTol; ++it) {
      Eigen::MatrixXd J(n, n);
      for (int j = 0; j < n; ++j) {
        Eigen::VectorXd shifted = mu;
        shifted(act[j]) *= std::exp(kStep);
        Eigen::VectorXd Fj;
        residual(power(shifted), Fj);
        J.col(j) = (Fj - F) / kStep;
      }
      Eigen::VectorXd dx = J.fullPivLu().solve(-F);
      if (!dx.allFinite()) break;
      dx = dx.cwiseMax(-10.0).cwiseMin(10.0);
      bool accepted = false;
      double t = 1.0;
      for (int ls = 0; ls < 40; ++ls, t *= 0.5) {
        Eigen::VectorXd cand = mu;
        for (int i = 0; i < n; ++i) cand(act[i]) = mu(act[i]) * std::exp(t * dx(i));
        const Eigen::VectorXd Sc = power(cand);
        Eigen::VectorXd Fc;
        const double rc = residual(Sc, Fc);
        if (rc < res) {
          mu = cand;
          S = Sc;
          F = Fc;
          res = rc;
          accepted = true;
          break;
        }
      }
      if (!accepted) break;
    }

    bool slack_ok = true;
    for (int k = 0; k < K; ++k)
      if (mu(k) == 0.0 && S(k) > P(k) * (1.0 + kTol)) slack_ok = false;
    if (slack_ok) break;
  }
  ok = res <= 1e-9;
  return mu;
}

}  // namespace

SisoAvgInner siso_avg_inner(const Eigen::VectorXd& mu, const ChannelState& ch, const SystemConfig& cfg) {
  const int K = cfg.num_devices, M = cfg.num_subcarriers;
  const double nz = cfg.noise_power;
  const auto& ev = cfg.error_variances;
  SisoAvgInner out;
  out.amplitudes = Eigen::MatrixXd::Zero(K, M);
  out.w = Eigen::VectorXd::Zero(M);
  out.power = Eigen::VectorXd::Zero(K);

  Eigen::VectorXd h2(K), habs(K), a(K);
  for (int m = 0; m < M; ++m) {
    const auto& H = ch.estimated[m];
    double f0 = 0.0;
    bool free_device = false;
    for (int k = 0; k < K; ++k) {
      h2(k) = std::norm(H(0, k));
      habs(k) = std::sqrt(h2(k));
      a(k) = h2(k) + ev[k];
      if (mu(k) > 0.0)
        f0 += h2(k) / mu(k);
      else if (h2(k) > 0.0)
        free_device = true;
    }
    double w = 0.0;
    if (f0 > nz) {
      auto f = [&](double x) {
        double s = 0.0;
        for (int k = 0; k < K; ++k) {
          if (mu(k) <= 0.0) continue;
          const double d = x * a(k) + mu(k);
          s += h2(k) * mu(k) / (d * d);
        }
        return s;
      };
      w = std::sqrt(bisect_decreasing(f, nz, kTightBisection));
    } else if (free_device) {
      w = kMinReceiveFactor;
    }

    double lag = w * w * nz;
    for (int k = 0; k < K; ++k) {
      const double den = w * w * a(k) + mu(k);
      const double b = (w > 0.0 && den > 0.0) ? w * habs(k) / den : 0.0;
      out.amplitudes(k, m) = b;
      out.power(k) += b * b;
      const double r = w * habs(k) * b - 1.0;
      lag += r * r + w * w * ev[k] * b * b + mu(k) * b * b;
    }
    out.w(m) = w;
    out.lagrangian += lag;
  }
  out.dual_value = out.lagrangian - mu.dot(budgets_of(cfg));
  return out;
}

Solution solve_siso_avg(const ChannelState& ch, const SystemConfig& cfg, const SolverOptions& opts) {
  require_single_antenna(ch, cfg);
  const int K = cfg.num_devices, M = cfg.num_subcarriers;
  const double scale = static_cast<double>(K) * K * M;
  const Eigen::VectorXd P = budgets_of(cfg);

  Solution sol;
  auto& rep = sol.report;
  auto oracle = [&](const Eigen::VectorXd& mu) {
    const SisoAvgInner in = siso_avg_inner(mu, ch, cfg);
    if (opts.record_dual_trace) rep.dual_trace.push_back(in.dual_value / scale);
    return DualSample{in.dual_value, in.power - P, false};
  };
  EllipsoidSettings es = opts.ellipsoid;
  es.initial_radius = std::max(es.initial_radius, default_dual_radius(M, cfg.power_budgets));
  const EllipsoidResult er = ellipsoid_maximize(oracle, K, es);

  int evals = 0;
  bool polished = false;
  const Eigen::VectorXd mu = polish_prices(er.argmax, ch, cfg, evals, polished);
  const SisoAvgInner in = siso_avg_inner(mu, ch, cfg);
  if (opts.record_dual_trace) rep.dual_trace.push_back(in.dual_value / scale);

  Eigen::MatrixXd amplitudes = in.amplitudes;
  project_to_budgets(amplitudes, cfg.power_budgets);
  sol.receive = scalar_receive(in.w);
  sol.transmit = make_transmit(amplitudes, ch, sol.receive);
  fill_metrics(rep, amplitudes, ch, sol.receive, cfg);
  rep.dual_mu.assign(mu.data(), mu.data() + K);
  rep.dual_value = std::max(er.value, in.dual_value) / scale;
  rep.duality_gap = rep.average_mse - *rep.dual_value;
  rep.iterations = er.iterations;
  rep.converged = er.converged && polished;
  return sol;
}

SubcarrierClass classify_siso_subcarrier(const Eigen::MatrixXcd& H, const SystemConfig& cfg) {
  const int K = cfg.num_devices;
  const double gamma = cfg.mse_threshold;
  if (gamma >= 1.0 / K) return SubcarrierClass::free_success;
  double floor_sum = 0.0;
  for (int k = 0; k < K; ++k) floor_sum += floor_term(std::norm(H(0, k)) + cfg.error_variances[k], cfg.error_variances[k]);
  if (gamma * K * K <= floor_sum) return SubcarrierClass::forced_outage;
  return SubcarrierClass::contested;
}

OutageSubproblem siso_outage_subcarrier(const Eigen::VectorXd& mu, const Eigen::MatrixXcd& H, const SystemConfig& cfg,
                                        int subcarrier) {
  const int K = cfg.num_devices;
  const auto& ev = cfg.error_variances;
  OutageSubproblem out;
  out.amplitudes = Eigen::VectorXd::Zero(K);
  out.kind = classify_siso_subcarrier(H, cfg);
  if (out.kind == SubcarrierClass::forced_outage) throw InfeasibleSubcarrier(subcarrier);
  if (out.kind == SubcarrierClass::free_success) return out;

  const double target = cfg.mse_threshold * K * K;
  Eigen::VectorXd h2(K), a(K);
  double partial = 0.0;
  for (int k = 0; k < K; ++k) {
    h2(k) = std::norm(H(0, k));
    a(k) = h2(k) + ev[k];
    partial += mu(k) > 0.0 ? 1.0 : floor_term(a(k), ev[k]);
  }

  if (target >= partial - 1e-12 * K * K) {
    // priced devices switched off, the others invert their channel
    out.w = std::max(std::sqrt(std::max(target - partial, 0.0) / cfg.noise_power), kMinReceiveFactor);
    for (int k = 0; k < K; ++k)
      if (mu(k) <= 0.0 && a(k) > 0.0) out.amplitudes(k) = std::sqrt(h2(k)) / (out.w * a(k));
    return out;
  }

  auto F = [&](double v) {
    double s = 0.0;
    for (int k = 0; k < K; ++k)
      s += mu(k) > 0.0 ? (v * ev[k] + mu(k)) / (v * a(k) + mu(k)) : floor_term(a(k), ev[k]);
    return s;
  };
  const double v = bisect_decreasing(F, target, kTightBisection);
  double w2 = 0.0;
  for (int k = 0; k < K; ++k) {
    if (mu(k) <= 0.0) continue;
    const double d = v * a(k) + mu(k);
    w2 += v * h2(k) * mu(k) / (d * d);
  }
  w2 /= cfg.noise_power;
  out.w = std::sqrt(w2);
  out.v = v;
  out.lambda = v / w2;
  for (int k = 0; k < K; ++k) {
    const double d = v * a(k) + mu(k);
    const double b = d > 0.0 ? v * std::sqrt(h2(k)) / (out.w * d) : 0.0;
    out.amplitudes(k) = b;
    out.cost += mu(k) * b * b;
  }
  return out;
}

bool siso_outage_decision(double cost) { return cost <= 1.0; }

namespace {

struct SisoOutageProblem {
  const ChannelState& ch;
  const SystemConfig& cfg;
  std::vector<SubcarrierClass> kinds;

  int num_devices() const { return cfg.num_devices; }
  int num_subcarriers() const { return cfg.num_subcarriers; }
  const std::vector<double>& budgets() const { return cfg.power_budgets; }
  SubcarrierClass kind(int m) const { return kinds[m]; }
  OutageSubproblem solve(int m, const Eigen::VectorXd& mu) const {
    return siso_outage_subcarrier(mu, ch.estimated[m], cfg, m);
  }
};

}  // namespace

Solution solve_siso_outage(const ChannelState& ch, const SystemConfig& cfg, const SolverOptions& opts) {
  require_single_antenna(ch, cfg);
  const int M = cfg.num_subcarriers;
  SisoOutageProblem prob{ch, cfg, {}};
  for (int m = 0; m < M; ++m) prob.kinds.push_back(classify_siso_subcarrier(ch.estimated[m], cfg));

  const detail::OutageEngineResult r = detail::OutageEngine<SisoOutageProblem>(prob, opts).run();

  Solution sol;
  auto& rep = sol.report;
  sol.receive = scalar_receive(Eigen::Map<const Eigen::VectorXd>(r.w.data(), M));
  sol.transmit = make_transmit(r.amplitudes, ch, sol.receive);
  fill_metrics(rep, r.amplitudes, ch, sol.receive, cfg);
  rep.dual_mu.assign(r.mu.data(), r.mu.data() + r.mu.size());
  rep.dual_value = r.dual_value / M;
  rep.duality_gap = rep.outage_probability - *rep.dual_value;
  rep.iterations = r.iterations;
  rep.converged = r.converged;
  for (double g : r.dual_trace) rep.dual_trace.push_back(g / M);
  return sol;
}

}  // namespace aircomp
