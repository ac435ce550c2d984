#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "freqadmm/core/utility.hpp"

namespace freqadmm {

struct SolverConfig {
  double rho = 1.0;
  double primal_tol = 1e-4;
  double dual_tol = 1e-4;
  std::size_t max_iterations = 2000;
  double projection_tol = 1e-10;
  double scalar_tol = 1e-8;
  std::size_t max_bisections = 200;

  // Throws std::invalid_argument on rho <= 0 or a non-positive tolerance.
  void validate() const;

  friend bool operator==(const SolverConfig&, const SolverConfig&) = default;
};

struct AdmmState {
  std::vector<double> x;
  std::vector<double> z;
  std::vector<double> u;
  std::size_t iteration = 0;
};

/// Device-side primal step: the maximizer over x >= 0 of
///
///   h(x) - (rho/2) (x - z_i + u_i)^2.
///
/// Interior maximizers satisfy |h'(x) - rho (x - z_i + u_i)| <= scalar_tol.
/// Local maxima are bracketed on a 64-cell scan of [lo, hi] and refined by
/// bisection, so utilities that are only piecewise concave (manipulated
/// inputs) still return the global maximizer on the bracket. Throws
/// SolverFailure when the stationarity residual stays positive after the
/// bracket-doubling phase.
double local_x_update(const UtilityFunction& f, double z_i, double u_i,
                      const SolverConfig& cfg);

// u_i + x_i - z_i, evaluated in that order.
inline double dual_u_update(double u_i, double x_i, double z_i) {
  return (u_i + x_i) - z_i;
}

struct Residuals {
  double primal = 0.0;  // ||x - z||_2
  double dual = 0.0;    // rho ||z - z_prev||_2
};

// Throws ContractViolation on a length mismatch.
Residuals residuals(const AdmmState& state, std::span<const double> z_prev,
                    double rho);

}  // namespace freqadmm
