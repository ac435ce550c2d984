#pragma once

#include <vector>

#include "freqadmm/core/budget.hpp"
#include "freqadmm/core/solver.hpp"
#include "freqadmm/core/trace.hpp"
#include "freqadmm/core/utility.hpp"

namespace freqadmm {

/// In-process decentralized ADMM loop. Each step runs the device x-updates,
/// the gateway projection, and the device dual updates, in the same order and
/// with the same arithmetic as the networked protocol.
///
/// The engine starts from x = gamma, u = 0, z = gamma. Functions and budget
/// may be replaced between steps; the iterates carry over.
class AdmmEngine {
 public:
  AdmmEngine(std::vector<UtilityFunction> functions, ResourceBudget budget,
             SolverConfig cfg = {});

  // One iteration; returns the (z, v) record of the round.
  TraceRow step();

  [[nodiscard]] const AdmmState& state() const { return state_; }
  [[nodiscard]] const Residuals& last_residuals() const { return last_; }
  [[nodiscard]] const std::vector<UtilityFunction>& functions() const {
    return functions_;
  }
  [[nodiscard]] const ResourceBudget& budget() const { return budget_; }
  [[nodiscard]] const SolverConfig& config() const { return cfg_; }

  void set_function(std::size_t i, UtilityFunction f);
  void set_functions(std::vector<UtilityFunction> functions);
  void set_budget(ResourceBudget budget);

  // Appends a device initialized at x = z = gamma, u = 0.
  void add_device(UtilityFunction f, double a, double gamma);

  [[nodiscard]] bool converged() const;

 private:
  std::vector<UtilityFunction> functions_;
  ResourceBudget budget_;
  SolverConfig cfg_;
  AdmmState state_;
  Residuals last_{};
  bool stepped_ = false;
};

struct AdmmResult {
  std::vector<double> x;
  std::vector<double> z;
  std::vector<double> u;
  std::size_t iterations = 0;
  bool converged = false;
  Residuals residuals;
  IterationTrace trace;
};

// Runs until primal <= primal_tol and dual <= dual_tol, or max_iterations.
// Non-convergence is reported through AdmmResult::converged.
AdmmResult admm_solve(const std::vector<UtilityFunction>& functions,
                      const ResourceBudget& budget,
                      const SolverConfig& cfg = {});

double total_utility(const std::vector<UtilityFunction>& functions,
                     const std::vector<double>& x);

}  // namespace freqadmm
