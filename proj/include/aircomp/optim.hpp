#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

namespace aircomp {

class NoRootError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NonMonotoneError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IterationLimitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Accepts when |f(x) - target| <= abs_tol * max(1, |target|) or when the
// bracket width drops below rel_tol * upper end.
struct BisectionSettings {
  double abs_tol = 1e-12;
  double rel_tol = 1e-12;
  int max_iters = 200;
  double bracket_growth = 2.0;
};

// Settings used inside the solvers, tight enough for finite-difference work
// on top of the returned roots.
inline constexpr BisectionSettings kTightBisection{1e-15, 4e-16, 400, 2.0};

// Finds x >= 0 with f(x) = target for a nonincreasing f; bracket grows from [0, 1].
template <class F>
double bisect_decreasing(F&& f, double target, const BisectionSettings& s = {}) {
  const double tol = s.abs_tol * std::max(1.0, std::abs(target));
  const double f0 = f(0.0);
  if (std::abs(f0 - target) <= tol) return 0.0;
  if (target > f0) throw NoRootError("bisect_decreasing: target above f(0)");

  double lo = 0.0, hi = 1.0, flo = f0;
  double fhi = f(hi);
  int growth_steps = 0;
  while (fhi > target) {
    if (std::abs(fhi - target) <= tol) return hi;
    if (fhi > flo + tol) throw NonMonotoneError("bisect_decreasing: function increased while bracketing");
    lo = hi;
    flo = fhi;
    hi *= s.bracket_growth;
    if (!std::isfinite(hi) || ++growth_steps > 4096)
      throw NoRootError("bisect_decreasing: target below the range of f");
    fhi = f(hi);
  }
  if (std::abs(fhi - target) <= tol) return hi;

  for (int it = 0; it < s.max_iters; ++it) {
    const double mid = lo + 0.5 * (hi - lo);
    if (mid <= lo || mid >= hi) return mid;
    const double fm = f(mid);
    if (std::abs(fm - target) <= tol) return mid;
    if (fm > target)
      lo = mid;
    else
      hi = mid;
    if (hi - lo <= s.rel_tol * hi) return lo + 0.5 * (hi - lo);
  }
  throw IterationLimitError("bisect_decreasing: iteration limit reached");
}

struct EllipsoidSettings {
  double initial_radius = 10.0;
  std::vector<double> center_init;  // empty means the all-ones vector
  double stop_norm = 1e-9;
  int max_iters = 0;  // 0 means 200 * dim^2
};

struct DualSample {
  double value = 0.0;
  Eigen::VectorXd subgradient;
  bool stop = false;  // oracle may end the search early
};

// normal . x <= bound, in addition to x >= 0.
struct LinearConstraint {
  Eigen::VectorXd normal;
  double bound = 0.0;
};

struct EllipsoidResult {
  Eigen::VectorXd argmax;
  double value = -std::numeric_limits<double>::infinity();
  double upper_bound = std::numeric_limits<double>::infinity();
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  bool stopped_by_oracle = false;
};

using DualOracle = std::function<DualSample(const Eigen::VectorXd&)>;

// Deep-cut ellipsoid method over the nonnegative orthant. Stops when the
// certificate gap (upper bound minus best value) is at most
// stop_norm * max(1, |best|). An exhausted iteration budget returns the best
// iterate with converged = false.
EllipsoidResult ellipsoid_maximize(const DualOracle& oracle, int dim, const EllipsoidSettings& settings,
                                   const std::vector<LinearConstraint>& extra = {});

double default_dual_radius(int num_subcarriers, const std::vector<double>& budgets);

}  // namespace aircomp
