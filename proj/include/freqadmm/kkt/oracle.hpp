#pragma once

#include <cstdint>
#include <vector>

#include "freqadmm/core/budget.hpp"
#include "freqadmm/core/utility.hpp"

namespace freqadmm::kkt {

// Which coupling constraints are active at a point.
enum class Situation { Interior, G1Active, G2Active, BothActive };

const char* situation_name(Situation s);

struct KktCertificate {
  double lambda1 = 0.0;  // multiplier of g1(x) = sum x - c
  double lambda2 = 0.0;  // multiplier of g2(x) = sum a x - d
  Situation situation = Situation::Interior;
  double stationarity_residual = 0.0;
  std::vector<std::size_t> active_lower_bounds;
  double g1 = 0.0;
  double g2 = 0.0;
};

/// Estimates the multipliers of the active coupling constraints by
/// nonnegative least squares on the stationarity rows
///   h_i'(x_i) = lambda1 + lambda2 a_i
/// of coordinates strictly above their lower bound, and classifies which
/// constraints are active. A constraint is active when
/// |g| <= max(tol, 1e-6) * max(1, |bound|). Throws ContractViolation when x
/// is infeasible beyond tol.
KktCertificate check_kkt(const std::vector<double>& x,
                         const std::vector<UtilityFunction>& functions,
                         const ResourceBudget& budget, double tol = 1e-6);

enum class Direction { Target, DownOrEqual, Unchanged };

struct ResponsePrediction {
  std::vector<Direction> devices;
  bool degenerate = false;  // both constraints active; no guarantee
};

/// Expected move of every other device after an upward move of device j
/// (zero-based), given the baseline situation.
ResponsePrediction predict_response_direction(Situation situation,
                                              std::size_t manipulated,
                                              std::size_t n_devices);

/// Dykstra's alternating projection onto {sum z <= c} ∩ {a.z <= d} ∩
/// {z >= gamma}. Independent of the active-set projection; used to check it.
std::vector<double> dykstra_project(const std::vector<double>& v,
                                    const ResourceBudget& budget,
                                    double tol = 1e-9,
                                    std::size_t max_sweeps = 1'000'000);

struct ReferenceOptions {
  std::size_t starts = 20;
  std::size_t ascent_steps = 400;
  std::uint64_t seed = 0x5eed;
  double disagreement_tol = 1e-4;
};

struct ReferenceSolution {
  std::vector<double> x;
  double objective = 0.0;
  // Largest distance between the multistart ascent result and the
  // multiplier-polished solution.
  double spread = 0.0;
  bool disagreement = false;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
};

/// Brute-force reference optimum of max sum h_i(x_i) over the polytope.
///
/// Projected-gradient ascent with diminishing normalized steps from random
/// feasible starts (Dykstra projection), then a dual polish that enumerates
/// the constraint activity patterns and solves h_i'(x_i) = l1 + l2 a_i per
/// coordinate by bisection. The better objective wins.
ReferenceSolution reference_solve(const std::vector<UtilityFunction>& functions,
                                  const ResourceBudget& budget,
                                  const ReferenceOptions& options = {});

}  // namespace freqadmm::kkt
