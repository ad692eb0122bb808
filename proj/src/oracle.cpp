#include "aircomp/oracle.hpp"

#include "aircomp/metrics.hpp"
#include "aircomp/siso.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

namespace aircomp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Smallest b >= 0 with (g b - 1)^2 + e b^2 <= room, or -1 when there is none.
double min_amplitude(double g, double e, double room) {
  if (room >= 1.0) return 0.0;
  const double a = g * g + e;
  if (a <= 0.0) return -1.0;
  const double disc = g * g - a * (1.0 - room);
  if (disc < 0.0) return -1.0;
  const double den = g + std::sqrt(disc);
  return den > 0.0 ? (1.0 - room) / den : -1.0;
}

struct GridPoint {
  std::vector<double> x;
  double value = kInf;
};

// Uniform grid over a box, then repeated zooms to +-1 step around the
// incumbent. final_step receives the last grid spacing per dimension.
template <class F>
GridPoint grid_refine(F&& f, const std::vector<double>& lo0, const std::vector<double>& hi0, int points, int passes,
                      std::vector<double>* final_step = nullptr) {
  const std::size_t d = lo0.size();
  std::vector<double> lo = lo0, hi = hi0, step(d, 0.0);
  GridPoint best;
  if (d == 0) {
    best.value = f(best.x);
    return best;
  }
  std::vector<double> x(d);
  for (int pass = 0; pass <= passes; ++pass) {
    for (std::size_t i = 0; i < d; ++i) step[i] = (hi[i] - lo[i]) / (points - 1);
    std::vector<int> idx(d, 0);
    while (true) {
      for (std::size_t i = 0; i < d; ++i) x[i] = lo[i] + idx[i] * step[i];
      const double v = f(x);
      if (v < best.value) best = {x, v};
      std::size_t i = 0;
      while (i < d && ++idx[i] == points) idx[i++] = 0;
      if (i == d) break;
    }
    if (best.x.empty()) break;
    for (std::size_t i = 0; i < d; ++i) {
      lo[i] = std::max(lo0[i], best.x[i] - step[i]);
      hi[i] = std::min(hi0[i], best.x[i] + step[i]);
    }
  }
  if (final_step) *final_step = step;
  return best;
}

void require_tiny(const ChannelState& ch, const SystemConfig& cfg) {
  validate_config(cfg);
  check_channel(ch, cfg);
  if (cfg.num_devices > 2 || cfg.num_subcarriers > 2 || cfg.num_rx_antennas != 1)
    throw DimensionTooLarge("oracle search supports K <= 2, M <= 2 and N_r = 1 only");
}

// Per-device best amplitudes for fixed single-antenna receive factors.
double device_best(const ChannelState& ch, const SystemConfig& cfg, int k, const std::vector<double>& w,
                   int points, int passes, Eigen::VectorXd* amps) {
  const int M = cfg.num_subcarriers;
  const double P = cfg.power_budgets[k], ev = cfg.error_variances[k];
  auto term = [&](int m, double b) {
    const double h = std::abs(ch.estimated[m](0, k));
    const double r = w[m] * h * b - 1.0;
    return r * r + w[m] * w[m] * ev * b * b;
  };
  auto clipped = [&](int m, double cap) {
    const double h = std::abs(ch.estimated[m](0, k));
    const double a = w[m] * w[m] * (h * h + ev);
    if (a <= 0.0) return 0.0;
    return std::clamp(w[m] * h / a, 0.0, cap);
  };
  if (M == 1) {
    const double b = clipped(0, std::sqrt(P));
    if (amps) (*amps)(0) = b;
    return term(0, b);
  }
  auto f = [&](const std::vector<double>& x) {
    const double b2 = clipped(1, std::sqrt(std::max(0.0, P - x[0] * x[0])));
    return term(0, x[0]) + term(1, b2);
  };
  const GridPoint g = grid_refine(f, {0.0}, {std::sqrt(P)}, points, passes);
  if (amps) {
    (*amps)(0) = g.x[0];
    (*amps)(1) = clipped(1, std::sqrt(std::max(0.0, P - g.x[0] * g.x[0])));
  }
  return g.value;
}

double grid_objective(const ChannelState& ch, const SystemConfig& cfg, const std::vector<double>& w, int points,
                      int passes) {
  const int K = cfg.num_devices, M = cfg.num_subcarriers;
  double s = 0.0;
  for (int k = 0; k < K; ++k) s += device_best(ch, cfg, k, w, points, passes, nullptr);
  for (int m = 0; m < M; ++m) s += w[m] * w[m] * cfg.noise_power;
  return s / (static_cast<double>(K) * K * M);
}

// Priced cost of serving one subcarrier at beamformer w with the first
// device's amplitude b1 (ignored for K = 1).
double cost_at(const Eigen::MatrixXcd& H, const SystemConfig& cfg, const Eigen::VectorXd& mu,
               const Eigen::VectorXcd& w, double b1, Eigen::VectorXd* amps) {
  const int K = static_cast<int>(H.cols());
  const double q = w.squaredNorm();
  const double budget = cfg.mse_threshold * K * K - q * cfg.noise_power;
  const Eigen::VectorXd g = (H.adjoint() * w).cwiseAbs();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(K);
  if (budget < K) {
    if (K == 1) {
      b(0) = min_amplitude(g(0), q * cfg.error_variances[0], budget);
      if (b(0) < 0.0) return kInf;
    } else {
      const double e0 = q * cfg.error_variances[0];
      const double r = g(0) * b1 - 1.0;
      b(0) = b1;
      b(1) = min_amplitude(g(1), q * cfg.error_variances[1], budget - r * r - e0 * b1 * b1);
      if (b(1) < 0.0) return kInf;
    }
  }
  if (amps) *amps = b;
  return mu.head(K).dot(b.cwiseAbs2());
}

// Smallest power of the second device when the first may use at most x on
// this subcarrier (single antenna, receive factor swept).
double second_device_power(const Eigen::MatrixXcd& H, const SystemConfig& cfg, double x, int points) {
  const int K = 2;
  const double w_max = K * std::sqrt(cfg.mse_threshold / cfg.noise_power);
  auto f = [&](const std::vector<double>& v) {
    const double w = v[0];
    const double h0 = std::abs(H(0, 0));
    const double a0 = w * w * (h0 * h0 + cfg.error_variances[0]);
    const double best_b1 = a0 > 0.0 ? w * h0 / a0 : 0.0;
    const double b1 = std::min(std::sqrt(x), best_b1);
    Eigen::VectorXd amps;
    const Eigen::VectorXcd wv = Eigen::VectorXcd::Constant(1, cplx(w, 0.0));
    if (cost_at(H, cfg, Eigen::Vector2d(0.0, 1.0), wv, b1, &amps) == kInf) return kInf;
    return amps(1) * amps(1);
  };
  return grid_refine(f, {0.0}, {w_max}, points, 2).value;
}

double single_device_power(const Eigen::MatrixXcd& H, const SystemConfig& cfg, int points) {
  const double w_max = std::sqrt(cfg.mse_threshold / cfg.noise_power);
  auto f = [&](const std::vector<double>& v) {
    const Eigen::VectorXcd wv = Eigen::VectorXcd::Constant(1, cplx(v[0], 0.0));
    return cost_at(H, cfg, Eigen::VectorXd::Ones(1), wv, 0.0, nullptr);
  };
  return grid_refine(f, {0.0}, {w_max}, points, 2).value;
}

bool fits(double used, double budget) { return used <= budget * (1.0 + 1e-9) + 1e-12; }

}  // namespace

GridResult grid_search_joint(const ChannelState& ch, const SystemConfig& cfg, const GridSpec& spec) {
  require_tiny(ch, cfg);
  if (spec.points < 3 || spec.refinements < 0) throw std::invalid_argument("grid spec needs >= 3 points");
  const int K = cfg.num_devices, M = cfg.num_subcarriers;
  const double w_max = spec.w_max > 0.0 ? spec.w_max : 2.0 * K / std::sqrt(cfg.noise_power);
  auto obj = [&](const std::vector<double>& w) { return grid_objective(ch, cfg, w, spec.points, spec.refinements); };

  std::vector<double> step;
  const GridPoint best = grid_refine(obj, std::vector<double>(M, 0.0), std::vector<double>(M, w_max), spec.points,
                                     spec.refinements, &step);
  GridResult r;
  r.objective = best.value;
  r.w = Eigen::Map<const Eigen::VectorXd>(best.x.data(), M);
  r.amplitudes = Eigen::MatrixXd::Zero(K, M);
  for (int k = 0; k < K; ++k) {
    Eigen::VectorXd a(M);
    device_best(ch, cfg, k, best.x, spec.points, spec.refinements, &a);
    r.amplitudes.row(k) = a.transpose();
  }
  for (int m = 0; m < M; ++m) {
    for (double dir : {-1.0, 1.0}) {
      std::vector<double> nb = best.x;
      nb[m] = std::clamp(nb[m] + dir * step[m], 0.0, w_max);
      r.resolution_bound = std::max(r.resolution_bound, std::abs(obj(nb) - best.value));
    }
  }
  return r;
}

SweepResult min_power_sweep(const Eigen::MatrixXcd& H, const SystemConfig& cfg, const Eigen::VectorXd& mu,
                            const std::optional<Eigen::VectorXcd>& w, int points) {
  const int K = static_cast<int>(H.cols());
  if (K > 2) throw DimensionTooLarge("min_power_sweep supports at most two devices");
  if (!w && H.rows() != 1) throw DimensionTooLarge("min_power_sweep sweeps the receive factor only for N_r = 1");
  SweepResult r;
  r.amplitudes = Eigen::VectorXd::Zero(K);
  if (cfg.mse_threshold * K >= 1.0) {
    r.feasible = true;
    return r;
  }

  auto finish = [&](const Eigen::VectorXcd& wv, double b1) {
    Eigen::VectorXd amps;
    const double c = cost_at(H, cfg, mu, wv, b1, &amps);
    if (c < kInf) {
      r.feasible = true;
      r.cost = c;
      r.amplitudes = amps;
      r.w = wv.norm();
    }
    return r;
  };

  if (w) {
    if (K == 1) return finish(*w, 0.0);
    const double q = w->squaredNorm();
    const double g0 = std::abs((H.col(0).adjoint() * *w)(0));
    const double a0 = g0 * g0 + q * cfg.error_variances[0];
    const double b1_max = a0 > 0.0 ? 2.0 * g0 / a0 : 0.0;
    auto f = [&](const std::vector<double>& x) { return cost_at(H, cfg, mu, *w, x[0], nullptr); };
    const GridPoint g = grid_refine(f, {0.0}, {b1_max}, points, 2);
    if (g.x.empty()) return r;
    return finish(*w, g.x[0]);
  }

  // single antenna with the receive factor swept; the second coordinate is
  // the effective gain w * b1 of the first device
  const double w_max = K * std::sqrt(cfg.mse_threshold / cfg.noise_power);
  const double h0 = std::abs(H(0, 0));
  const double a0 = h0 * h0 + cfg.error_variances[0];
  const double c_max = a0 > 0.0 ? 2.0 * h0 / a0 : 0.0;
  auto wvec = [](double x) { return Eigen::VectorXcd::Constant(1, cplx(x, 0.0)); };
  if (K == 1) {
    auto f = [&](const std::vector<double>& x) { return cost_at(H, cfg, mu, wvec(x[0]), 0.0, nullptr); };
    const GridPoint g = grid_refine(f, {0.0}, {w_max}, points, 2);
    if (g.x.empty()) return r;
    return finish(wvec(g.x[0]), 0.0);
  }
  auto f = [&](const std::vector<double>& x) {
    if (x[0] <= 0.0) return x[1] > 0.0 ? kInf : cost_at(H, cfg, mu, wvec(0.0), 0.0, nullptr);
    return cost_at(H, cfg, mu, wvec(x[0]), x[1] / x[0], nullptr);
  };
  const GridPoint g = grid_refine(f, {0.0, 0.0}, {w_max, c_max}, points, 2);
  if (g.x.empty()) return r;
  return finish(wvec(g.x[0]), g.x[0] > 0.0 ? g.x[1] / g.x[0] : 0.0);
}

EnumerationResult enumerate_outage(const ChannelState& ch, const SystemConfig& cfg, int points) {
  require_tiny(ch, cfg);
  const int K = cfg.num_devices, M = cfg.num_subcarriers;
  const std::vector<double>& P = cfg.power_budgets;

  auto achievable = [&](const std::vector<int>& set) {
    if (set.empty()) return true;
    if (K == 1) {
      double used = 0.0;
      for (int m : set) used += single_device_power(ch.estimated[m], cfg, points);
      return fits(used, P[0]);
    }
    if (set.size() == 1) return fits(second_device_power(ch.estimated[set[0]], cfg, P[0], points), P[1]);
    // split the first device's budget between the two subcarriers
    auto f = [&](const std::vector<double>& x) {
      return second_device_power(ch.estimated[set[0]], cfg, x[0], points) +
             second_device_power(ch.estimated[set[1]], cfg, P[0] - x[0], points);
    };
    return fits(grid_refine(f, {0.0}, {P[0]}, points, 2).value, P[1]);
  };

  EnumerationResult best;
  best.outages = M + 1;
  for (int mask = 0; mask < (1 << M); ++mask) {
    std::vector<int> set;
    for (int m = 0; m < M; ++m)
      if (mask & (1 << m)) set.push_back(m);
    const int outages = M - static_cast<int>(set.size());
    if (outages >= best.outages || !achievable(set)) continue;
    best.outages = outages;
    best.served.assign(M, false);
    for (int m : set) best.served[m] = true;
  }
  return best;
}

double sweep_outage_dual(const ChannelState& ch, const SystemConfig& cfg, const Eigen::VectorXd& mu, int points) {
  const int M = cfg.num_subcarriers;
  double g = 0.0;
  for (int m = 0; m < M; ++m) {
    const SweepResult s = min_power_sweep(ch.estimated[m], cfg, mu, std::nullopt, points);
    g += s.feasible ? std::min(1.0, s.cost) : 1.0;
  }
  g -= mu.dot(Eigen::Map<const Eigen::VectorXd>(cfg.power_budgets.data(), cfg.num_devices));
  return g / M;
}

EmpiricalMse empirical_mse(const Eigen::VectorXcd& b, const Eigen::VectorXcd& w, const Eigen::MatrixXcd& H,
                           const SystemConfig& cfg, long num_samples, Rng& rng) {
  if (num_samples < 1) throw std::invalid_argument("empirical_mse: num_samples must be positive");
  const int K = static_cast<int>(H.cols()), N = static_cast<int>(H.rows());
  double mean = 0.0, m2 = 0.0;
  Eigen::VectorXcd y(N);
  for (long n = 0; n < num_samples; ++n) {
    y.setZero();
    cplx f = 0.0;
    for (int k = 0; k < K; ++k) {
      const cplx s = rng.cscg(1.0);
      f += s;
      for (int r = 0; r < N; ++r) y(r) += (H(r, k) - rng.cscg(cfg.error_variances[k])) * b(k) * s;
    }
    for (int r = 0; r < N; ++r) y(r) += rng.cscg(cfg.noise_power);
    const double err = std::norm((w.adjoint() * y)(0) / static_cast<double>(K) - f / static_cast<double>(K));
    const double delta = err - mean;
    mean += delta / static_cast<double>(n + 1);
    m2 += delta * (err - mean);
  }
  EmpiricalMse out;
  out.mean = mean;
  const double var = num_samples > 1 ? m2 / static_cast<double>(num_samples - 1) : 0.0;
  out.std_error = std::sqrt(var / static_cast<double>(num_samples));
  return out;
}

double KktResiduals::max() const { return std::max({stationarity, complementary_slackness, power_feasibility}); }

KktResiduals kkt_residuals(const Solution& sol, const ChannelState& ch, const SystemConfig& cfg, Scenario scenario) {
  const int K = cfg.num_devices, M = cfg.num_subcarriers;
  const Eigen::MatrixXd& amps = sol.transmit.amplitudes;
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(K);
  for (int k = 0; k < K && k < static_cast<int>(sol.report.dual_mu.size()); ++k) mu(k) = sol.report.dual_mu[k];

  KktResiduals r;
  const Eigen::VectorXd used = device_power(amps);
  for (int k = 0; k < K; ++k) {
    r.power_feasibility = std::max(r.power_feasibility, used(k) - cfg.power_budgets[k]);
    if (scenario == Scenario::best_effort)
      r.complementary_slackness =
          std::max(r.complementary_slackness, mu(k) * std::abs(cfg.power_budgets[k] - used(k)));
  }

  if (scenario == Scenario::error_constrained) {
    const auto mse = per_subcarrier_mse(amps, ch, sol.receive, cfg);
    for (int m = 0; m < M; ++m)
      if (mse[m] <= cfg.mse_threshold + kOutageSlack)
        r.stationarity = std::max(r.stationarity, K * K * std::max(0.0, mse[m] - cfg.mse_threshold));
    return r;
  }

  for (int m = 0; m < M; ++m) {
    const Eigen::MatrixXcd& H = ch.estimated[m];
    const Eigen::VectorXcd w = sol.receive.beamformers.col(m);
    const Eigen::VectorXcd proj = H.adjoint() * w;
    const double q = w.squaredNorm();
    Eigen::VectorXcd grad_w = Eigen::VectorXcd::Zero(w.size());
    double c = cfg.noise_power;
    for (int k = 0; k < K; ++k) {
      const double b = amps(k, m), g = std::abs(proj(k)), e = q * cfg.error_variances[k];
      const double gb = (g * b - 1.0) * g + e * b + mu(k) * b;
      r.stationarity = std::max(r.stationarity, b > 0.0 ? std::abs(gb) : std::max(0.0, -gb));
      const cplx phase = g > 0.0 ? proj(k) / g : cplx(1.0, 0.0);
      const Eigen::VectorXcd a = H.col(k) * (b * phase);
      grad_w += a * ((a.adjoint() * w)(0) - 1.0);
      c += b * b * cfg.error_variances[k];
    }
    grad_w += c * w;
    r.stationarity = std::max(r.stationarity, grad_w.norm());
  }
  return r;
}

TinyInstance random_tiny_instance(std::uint64_t seed, int max_devices, int max_subcarriers) {
  Rng rng(derive_seed(seed, 0x71E7, 0));
  TinyInstance t;
  SystemConfig& c = t.cfg;
  c.num_devices = 1 + static_cast<int>(rng.uniform(0.0, 1.0) * max_devices) % max_devices;
  c.num_subcarriers = 1 + static_cast<int>(rng.uniform(0.0, 1.0) * max_subcarriers) % max_subcarriers;
  c.num_rx_antennas = 1;
  c.noise_power = 1.0;
  c.power_budgets.clear();
  c.error_variances.clear();
  for (int k = 0; k < c.num_devices; ++k) {
    c.power_budgets.push_back(std::pow(10.0, rng.uniform(-1.0, std::log10(30.0))));
    c.error_variances.push_back(rng.uniform(0.0, 0.5));
  }
  c.mse_threshold = rng.uniform(0.3, 0.9) / c.num_devices;
  t.ch.error_variances = c.error_variances;
  t.ch.estimated.assign(c.num_subcarriers, Eigen::MatrixXcd(1, c.num_devices));
  for (auto& H : t.ch.estimated)
    for (int k = 0; k < c.num_devices; ++k) H(0, k) = rng.cscg(1.0);
  return t;
}

namespace {

struct Reporter {
  std::ostream& out;
  bool ok = true;
  void line(bool pass, const std::string& name, const std::string& detail) {
    out << (pass ? "PASS " : "FAIL ") << name << ": " << detail << '\n';
    ok = ok && pass;
  }
};

std::string fmt(const char* f, double a, double b = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

}  // namespace

bool run_verify_suite(std::ostream& out, std::uint64_t seed) {
  Reporter rep{out};

  // single device, unit channel and noise, unit budget
  for (double ev : {0.0, 1.0}) {
    SystemConfig cfg;
    cfg.error_variances = {ev};
    ChannelState ch;
    ch.estimated = {Eigen::MatrixXcd::Constant(1, 1, 1.0)};
    ch.error_variances = cfg.error_variances;
    const Solution s = solve_siso_avg(ch, cfg);
    const double w_ref = ev == 0.0 ? 0.5 : 1.0 / 3.0, mse_ref = ev == 0.0 ? 0.5 : 2.0 / 3.0;
    const double mu_ref = ev == 0.0 ? 0.25 : 1.0 / 9.0;
    const double err = std::max({std::abs(s.transmit.amplitudes(0, 0) - 1.0),
                                 std::abs(s.receive.beamformers(0, 0).real() - w_ref),
                                 std::abs(s.report.average_mse - mse_ref), std::abs(s.report.dual_mu[0] - mu_ref)});
    rep.line(err <= 1e-6, ev == 0.0 ? "analytic instance, exact CSI" : "analytic instance, noisy CSI",
             fmt("max deviation %.3g", err));
  }

  int grid_ok = 0;
  const int grid_n = 10;
  for (int i = 0; i < grid_n; ++i) {
    const TinyInstance t = random_tiny_instance(seed * 1000 + i);
    const double solver = solve_siso_avg(t.ch, t.cfg).report.average_mse;
    const GridResult g = grid_search_joint(t.ch, t.cfg);
    if (solver <= g.objective + 1e-3 && solver >= g.objective - g.resolution_bound - 1e-12) ++grid_ok;
  }
  rep.line(grid_ok == grid_n, "average MSE vs grid search", fmt("%.0f of %.0f instances agree", grid_ok, grid_n));

  int enum_ok = 0;
  const int enum_n = 10;
  for (int i = 0; i < enum_n; ++i) {
    const TinyInstance t = random_tiny_instance(seed * 2000 + i);
    const Solution s = solve_siso_outage(t.ch, t.cfg);
    const int count = static_cast<int>(std::lround(s.report.outage_probability * t.cfg.num_subcarriers));
    if (count == enumerate_outage(t.ch, t.cfg).outages) ++enum_ok;
  }
  rep.line(enum_ok >= enum_n - 1, "outage vs subset enumeration", fmt("%.0f of %.0f instances agree", enum_ok, enum_n));

  int mc_ok = 0;
  const int mc_n = 5;
  Rng rng(derive_seed(seed, 0xE3C, 0));
  for (int i = 0; i < mc_n; ++i) {
    const TinyInstance t = random_tiny_instance(seed * 3000 + i);
    const Solution s = solve_siso_avg(t.ch, t.cfg);
    const EmpiricalMse e = empirical_mse(s.transmit.coefficients.col(0), s.receive.beamformers.col(0),
                                         t.ch.estimated[0], t.cfg, 100000, rng);
    if (std::abs(e.mean - s.report.per_subcarrier_mse[0]) <= 5.0 * e.std_error) ++mc_ok;
  }
  rep.line(mc_ok == mc_n, "sampled vs analytic MSE", fmt("%.0f of %.0f policies within 5 standard errors", mc_ok, mc_n));

  double worst = 0.0;
  for (int i = 0; i < 5; ++i) {
    const TinyInstance t = random_tiny_instance(seed * 4000 + i, 5, 16);
    const Solution s = solve_siso_avg(t.ch, t.cfg);
    worst = std::max(worst, kkt_residuals(s, t.ch, t.cfg, Scenario::best_effort).max());
  }
  rep.line(worst <= 1e-6, "optimality conditions", fmt("largest residual %.3g", worst));
  return rep.ok;
}

}  // namespace aircomp
