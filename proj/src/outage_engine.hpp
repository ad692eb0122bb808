#pragma once

// Dual ascent for the outage problems plus primal recovery. The subcarriers
// are ranked by their priced cost at the dual optimum and the longest
// power-feasible prefix of that ranking is served; feasibility of a candidate
// set is decided by a price search over the simplex that stops at either a
// feasible witness or a weak-duality certificate of infeasibility.

#include "aircomp/siso.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <vector>

namespace aircomp::detail {

inline constexpr double kBudgetSlack = 1e-9;

struct OutageEngineResult {
  Eigen::MatrixXd amplitudes;  // K x M
  std::vector<double> w;       // per subcarrier, as returned by the subproblem
  std::vector<bool> served;
  Eigen::VectorXd mu;
  double dual_value = 0.0;  // counted in subcarriers, forced outages included
  int iterations = 0;
  bool converged = false;
  std::vector<double> dual_trace;
};

// Problem must provide num_devices(), num_subcarriers(), budgets(), kind(m)
// and solve(m, mu) returning an OutageSubproblem for a contested subcarrier.
template <class Problem>
class OutageEngine {
 public:
  OutageEngine(const Problem& p, const SolverOptions& opts)
      : p_(p), opts_(opts), K_(p.num_devices()), P_(p.budgets()) {}

  OutageEngineResult run() {
    const int M = p_.num_subcarriers();
    OutageEngineResult r;
    r.amplitudes = Eigen::MatrixXd::Zero(K_, M);
    r.w.assign(M, 0.0);
    r.served.assign(M, false);
    r.mu = Eigen::VectorXd::Zero(K_);

    std::vector<int> contested;
    int forced = 0;
    for (int m = 0; m < M; ++m) {
      switch (p_.kind(m)) {
        case SubcarrierClass::forced_outage: ++forced; break;
        case SubcarrierClass::free_success: r.served[m] = true; break;
        case SubcarrierClass::contested: contested.push_back(m); break;
      }
    }
    if (contested.empty()) {
      r.dual_value = forced;
      r.converged = true;
      return r;
    }

    const int n = static_cast<int>(contested.size());
    auto oracle = [&](const Eigen::VectorXd& mu) {
      DualSample s;
      s.subgradient = -budget_vector();
      s.value = -mu.dot(budget_vector());
      for (int m : contested) {
        const OutageSubproblem sub = p_.solve(m, mu);
        if (siso_outage_decision(sub.cost)) {
          s.value += sub.cost;
          s.subgradient += sub.amplitudes.cwiseAbs2();
        } else {
          s.value += 1.0;
        }
      }
      if (opts_.record_dual_trace) r.dual_trace.push_back(s.value + forced);
      return s;
    };
    EllipsoidSettings es = opts_.ellipsoid;
    es.initial_radius = std::max(es.initial_radius, default_dual_radius(M, P_));
    const EllipsoidResult er = ellipsoid_maximize(oracle, K_, es);
    r.mu = er.argmax;
    r.dual_value = er.value + forced;
    r.iterations = er.iterations;
    r.converged = er.converged;

    // ranking at the dual optimum, ties broken by budget-normalized power
    std::vector<OutageSubproblem> at_opt(n);
    std::vector<double> tie(n);
    Eigen::VectorXd flat(K_);
    for (int k = 0; k < K_; ++k) flat(k) = 1.0 / P_[k];
    for (int i = 0; i < n; ++i) {
      at_opt[i] = p_.solve(contested[i], r.mu);
      const OutageSubproblem alt = p_.solve(contested[i], flat);
      tie[i] = alt.amplitudes.cwiseAbs2().cwiseQuotient(budget_vector()).sum();
    }
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      if (at_opt[a].cost != at_opt[b].cost) return at_opt[a].cost < at_opt[b].cost;
      return tie[a] < tie[b];
    });

    // weak duality caps the number of servable contested subcarriers
    const int upper = std::clamp(n - static_cast<int>(std::ceil(er.value - 1e-9)), 0, n);
    int kept = 0;
    while (kept < n && siso_outage_decision(at_opt[order[kept]].cost)) ++kept;

    std::vector<int> chosen;  // positions in contested
    std::vector<OutageSubproblem> plan;
    int lo = 0, hi = upper;
    if (kept <= upper) {
      std::vector<int> prefix(order.begin(), order.begin() + kept);
      Eigen::VectorXd used = Eigen::VectorXd::Zero(K_);
      for (int i : prefix) used += at_opt[i].amplitudes.cwiseAbs2();
      if (within_budget(used)) {
        lo = kept;
        chosen = prefix;
        for (int i : prefix) plan.push_back(at_opt[i]);
      }
    }
    while (lo < hi) {
      const int mid = (lo + hi + 1) / 2;
      std::vector<int> prefix(order.begin(), order.begin() + mid);
      auto sol = check_set(prefix, contested, r.mu);
      ++r.iterations;
      if (sol) {
        lo = mid;
        chosen = prefix;
        plan = std::move(*sol);
      } else {
        hi = mid - 1;
      }
    }
    int tried = 0;
    for (int pos = lo + 1; pos < n && tried < opts_.extra_candidates && static_cast<int>(chosen.size()) < upper;
         ++pos, ++tried) {
      std::vector<int> trial = chosen;
      trial.push_back(order[pos]);
      auto sol = check_set(trial, contested, r.mu);
      ++r.iterations;
      if (sol) {
        chosen = std::move(trial);
        plan = std::move(*sol);
      }
    }

    for (std::size_t j = 0; j < chosen.size(); ++j) {
      const int m = contested[chosen[j]];
      r.amplitudes.col(m) = plan[j].amplitudes;
      r.w[m] = plan[j].w;
      r.served[m] = true;
    }
    return r;
  }

 private:
  Eigen::VectorXd budget_vector() const { return Eigen::Map<const Eigen::VectorXd>(P_.data(), K_); }

  bool within_budget(const Eigen::VectorXd& used) const {
    for (int k = 0; k < K_; ++k)
      if (used(k) > P_[k] + kBudgetSlack) return false;
    return true;
  }

  std::vector<OutageSubproblem> solve_all(const std::vector<int>& set, const std::vector<int>& contested,
                                          const Eigen::VectorXd& mu, Eigen::VectorXd& used) const {
    std::vector<OutageSubproblem> out;
    out.reserve(set.size());
    used = Eigen::VectorXd::Zero(K_);
    for (int i : set) {
      out.push_back(p_.solve(contested[i], mu));
      used += out.back().amplitudes.cwiseAbs2();
    }
    return out;
  }

  // Serves every subcarrier of the set within the budgets, or reports failure.
  std::optional<std::vector<OutageSubproblem>> check_set(const std::vector<int>& set,
                                                         const std::vector<int>& contested,
                                                         const Eigen::VectorXd& hint) const {
    if (set.empty()) return std::vector<OutageSubproblem>{};
    Eigen::VectorXd used;
    if (hint.maxCoeff() > 0.0) {
      auto sols = solve_all(set, contested, hint, used);
      if (within_budget(used)) return sols;
    }
    if (K_ == 1) {
      // a single price only scales the cost, so the hint (or unit price) decides
      if (hint.maxCoeff() > 0.0) return std::nullopt;
      auto sols = solve_all(set, contested, Eigen::VectorXd::Ones(1), used);
      if (within_budget(used)) return sols;
      return std::nullopt;
    }

    // weights nu on the simplex (last coordinate implied), price mu_k = nu_k / P_k
    const int d = K_ - 1;
    Eigen::VectorXd start = Eigen::VectorXd::Constant(K_, 1.0 / K_);
    if (hint.maxCoeff() > 0.0) {
      Eigen::VectorXd scaled = hint.cwiseProduct(budget_vector());
      start = 0.5 * start + 0.5 * scaled / scaled.sum();
    }
    std::optional<std::vector<OutageSubproblem>> found;
    auto oracle = [&](const Eigen::VectorXd& nu) {
      DualSample s;
      Eigen::VectorXd full(K_);
      full.head(d) = nu;
      full(d) = std::max(0.0, 1.0 - nu.sum());
      const Eigen::VectorXd mu = full.cwiseQuotient(budget_vector());
      Eigen::VectorXd used_here;
      auto sols = solve_all(set, contested, mu, used_here);
      if (within_budget(used_here)) {
        found = std::move(sols);
        s.stop = true;
        return s;
      }
      const Eigen::VectorXd ratio = used_here.cwiseQuotient(budget_vector()) - Eigen::VectorXd::Ones(K_);
      s.value = full.dot(ratio);
      if (s.value > 1e-9) {
        s.stop = true;  // certificate: no point of the set fits the budgets
        return s;
      }
      s.subgradient = ratio.head(d) - Eigen::VectorXd::Constant(d, ratio(d));
      return s;
    };
    EllipsoidSettings es;
    es.initial_radius = 1.5;
    es.center_init.assign(start.data(), start.data() + d);
    es.stop_norm = 1e-12;
    es.max_iters = 100 * K_ * K_;
    ellipsoid_maximize(oracle, d, es, {LinearConstraint{Eigen::VectorXd::Ones(d), 1.0}});
    return found;
  }

  const Problem& p_;
  const SolverOptions& opts_;
  int K_;
  const std::vector<double>& P_;
};

}  // namespace aircomp::detail
