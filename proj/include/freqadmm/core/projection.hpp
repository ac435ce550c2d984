#pragma once

#include <vector>

#include "freqadmm/core/budget.hpp"
#include "freqadmm/core/solver.hpp"

namespace freqadmm {

// Which coupling constraints carry a positive multiplier.
enum class ActivePattern { None, Frequency, Storage, Both };

struct Projection {
  std::vector<double> z;
  double lambda_frequency = 0.0;  // multiplier of sum z_i <= c
  double lambda_storage = 0.0;    // multiplier of sum a_i z_i <= d
  ActivePattern pattern = ActivePattern::None;
};

/// Euclidean projection of v onto C = {sum z <= c, sum a z <= d, z >= gamma}.
///
/// The minimizer has the form z_i = max(gamma_i, v_i - l1 - l2 a_i). The four
/// activity patterns of (l1, l2) are tried in order; the multipliers of each
/// are located by monotone bisection on the active constraint residuals and
/// then polished by solving the linear system on the free coordinates. The
/// first pattern with nonnegative multipliers and satisfied inactive
/// constraints is returned.
Projection project_detailed(const std::vector<double>& v,
                            const ResourceBudget& budget,
                            const SolverConfig& cfg = {});

std::vector<double> project_onto_feasible(const std::vector<double>& v,
                                          const ResourceBudget& budget,
                                          const SolverConfig& cfg = {});

}  // namespace freqadmm
