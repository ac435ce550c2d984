#include "freqadmm/core/solver.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "freqadmm/core/errors.hpp"

namespace freqadmm {

void SolverConfig::validate() const {
  if (!(rho > 0.0)) throw std::invalid_argument("rho must be positive");
  if (!(primal_tol > 0.0) || !(dual_tol > 0.0) || !(projection_tol > 0.0) ||
      !(scalar_tol > 0.0)) {
    throw std::invalid_argument("solver tolerances must be positive");
  }
  if (max_iterations == 0) {
    throw std::invalid_argument("max_iterations must be positive");
  }
  if (max_bisections == 0) {
    throw std::invalid_argument("max_bisections must be positive");
  }
}

namespace {

constexpr int kScanCells = 64;
constexpr int kMaxDoublings = 64;

}  // namespace

double local_x_update(const UtilityFunction& f, double z_i, double u_i,
                      const SolverConfig& cfg) {
  const double rho = cfg.rho;
  const double w = z_i - u_i;
  auto stationarity = [&](double x) {
    return eval_derivative(f, x) - rho * (x - w);
  };
  auto objective = [&](double x) {
    const double t = x - w;
    return eval_utility(f, x) - 0.5 * rho * t * t;
  };

  double lo = 0.0;
  const double pole = domain_lower_bound(f);
  if (pole >= lo) lo = pole + 1e-9 * std::max(1.0, std::abs(pole));

  const double slope_lo = eval_derivative(f, lo);
  double hi = std::max(lo + 1.0, w + std::abs(slope_lo) / rho);
  for (int k = 0; stationarity(hi) > 0.0; ++k) {
    if (k == kMaxDoublings || !std::isfinite(hi)) {
      throw SolverFailure("x-update: no sign change of the stationarity "
                          "residual on [" + std::to_string(lo) + ", " +
                          std::to_string(hi) + "]");
    }
    hi = lo + 2.0 * (hi - lo);
  }

  auto refine = [&](double a, double b) {
    double mid = a;
    for (std::size_t it = 0; it < cfg.max_bisections; ++it) {
      mid = 0.5 * (a + b);
      if (mid <= a || mid >= b) break;
      const double g = stationarity(mid);
      if (std::abs(g) <= cfg.scalar_tol) return mid;
      (g > 0.0 ? a : b) = mid;
    }
    return std::abs(stationarity(a)) <= std::abs(stationarity(b)) ? a : b;
  };

  double best_x = lo;
  double best_val = -std::numeric_limits<double>::infinity();
  auto consider = [&](double x) {
    const double val = objective(x);
    if (val > best_val) {
      best_val = val;
      best_x = x;
    }
  };

  double prev_x = lo;
  double prev_g = stationarity(lo);
  if (prev_g <= 0.0) consider(lo);
  const double width = hi - lo;
  for (int k = 1; k <= kScanCells; ++k) {
    const double x = k == kScanCells ? hi : lo + width * k / kScanCells;
    const double g = stationarity(x);
    if (prev_g > 0.0 && g <= 0.0) {
      consider(g == 0.0 ? x : refine(prev_x, x));
    }
    prev_x = x;
    prev_g = g;
  }
  return best_x;
}

Residuals residuals(const AdmmState& state, std::span<const double> z_prev,
                    double rho) {
  const std::size_t n = state.x.size();
  if (state.z.size() != n || z_prev.size() != n) {
    throw ContractViolation("residuals: vector length mismatch");
  }
  double primal = 0.0;
  double dual = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = state.x[i] - state.z[i];
    const double s = state.z[i] - z_prev[i];
    primal += r * r;
    dual += s * s;
  }
  return {std::sqrt(primal), rho * std::sqrt(dual)};
}

}  // namespace freqadmm
