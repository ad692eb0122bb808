#include "aircomp/optim.hpp"

namespace aircomp {

namespace {

struct Cut {
  Eigen::VectorXd a;  // keep {x : a . (x - c) <= -depth}
  double depth = 0.0;
};

// Returns false when the cut leaves (numerically) nothing of the ellipsoid.
bool apply_cut(Eigen::VectorXd& c, Eigen::MatrixXd& P, const Cut& cut) {
  const int n = static_cast<int>(c.size());
  const Eigen::VectorXd Pa = P * cut.a;
  const double aPa = cut.a.dot(Pa);
  if (!(aPa > 0.0) || !std::isfinite(aPa)) return false;
  const double root = std::sqrt(aPa);
  const double alpha = std::max(0.0, cut.depth / root);
  if (alpha >= 1.0) return false;

  if (n == 1) {
    // exact interval update
    const double r = std::sqrt(P(0, 0));
    const double dist = cut.depth / std::abs(cut.a(0));
    double lo = c(0) - r, hi = c(0) + r;
    if (cut.a(0) > 0.0)
      hi = c(0) - dist;
    else
      lo = c(0) + dist;
    c(0) = 0.5 * (lo + hi);
    const double half = 0.5 * (hi - lo);
    P(0, 0) = half * half;
    return half > 0.0;
  }

  const Eigen::VectorXd g = Pa / root;
  const double nn = static_cast<double>(n);
  const double tau = (1.0 + nn * alpha) / (nn + 1.0);
  const double sigma = 2.0 * (1.0 + nn * alpha) / ((nn + 1.0) * (1.0 + alpha));
  const double delta = nn * nn * (1.0 - alpha * alpha) / (nn * nn - 1.0);
  c -= tau * g;
  P = delta * (P - sigma * g * g.transpose());
  P = 0.5 * (P + P.transpose());
  return true;
}

}  // namespace

double default_dual_radius(int num_subcarriers, const std::vector<double>& budgets) {
  double r = 10.0;
  for (double p : budgets) r = std::max(r, 10.0 * num_subcarriers / p);
  return r;
}

EllipsoidResult ellipsoid_maximize(const DualOracle& oracle, int dim, const EllipsoidSettings& settings,
                                   const std::vector<LinearConstraint>& extra) {
  if (dim < 1) throw std::invalid_argument("ellipsoid_maximize: dim must be positive");
  if (!(settings.initial_radius > 0.0))
    throw std::invalid_argument("ellipsoid_maximize: initial_radius must be positive");

  Eigen::VectorXd c = Eigen::VectorXd::Ones(dim);
  if (!settings.center_init.empty()) {
    if (static_cast<int>(settings.center_init.size()) != dim)
      throw std::invalid_argument("ellipsoid_maximize: center_init has the wrong size");
    c = Eigen::Map<const Eigen::VectorXd>(settings.center_init.data(), dim);
  }
  Eigen::MatrixXd P = Eigen::MatrixXd::Identity(dim, dim) * settings.initial_radius * settings.initial_radius;
  const int max_iters = settings.max_iters > 0 ? settings.max_iters : 200 * dim * dim;

  EllipsoidResult res;
  res.argmax = c.cwiseMax(0.0);

  for (int it = 0; it < max_iters; ++it) {
    res.iterations = it + 1;

    // most violated feasibility constraint, measured in ellipsoid-normalized units
    Cut cut;
    double worst = 0.0;
    for (int k = 0; k < dim; ++k) {
      if (c(k) < 0.0) {
        const double score = -c(k) / std::sqrt(P(k, k));
        if (score > worst) {
          worst = score;
          cut.a = -Eigen::VectorXd::Unit(dim, k);
          cut.depth = -c(k);
        }
      }
    }
    for (const auto& lc : extra) {
      const double viol = lc.normal.dot(c) - lc.bound;
      if (viol > 0.0) {
        const double score = viol / std::sqrt(lc.normal.dot(P * lc.normal));
        if (score > worst) {
          worst = score;
          cut.a = lc.normal;
          cut.depth = viol;
        }
      }
    }

    if (worst == 0.0) {
      DualSample s = oracle(c);
      ++res.evaluations;
      if (s.value > res.value) {
        res.value = s.value;
        res.argmax = c;
      }
      if (s.stop) {
        res.stopped_by_oracle = true;
        return res;
      }
      const double spread = std::sqrt(std::max(0.0, s.subgradient.dot(P * s.subgradient)));
      res.upper_bound = std::min(res.upper_bound, s.value + spread);
      if (res.upper_bound - res.value <= settings.stop_norm * std::max(1.0, std::abs(res.value))) {
        res.converged = true;
        return res;
      }
      if (s.subgradient.squaredNorm() == 0.0) {
        res.converged = true;
        return res;
      }
      cut.a = -s.subgradient;
      cut.depth = res.value - s.value;
    }
    if (!apply_cut(c, P, cut)) {
      // The remaining set is empty up to rounding: the best value is certified
      // as well as the arithmetic allows.
      res.converged = res.value > -std::numeric_limits<double>::infinity();
      return res;
    }
  }
  return res;
}

}  // namespace aircomp
