#include "freqadmm/core/admm.hpp"

#include "freqadmm/core/errors.hpp"
#include "freqadmm/core/projection.hpp"

namespace freqadmm {

AdmmEngine::AdmmEngine(std::vector<UtilityFunction> functions,
                       ResourceBudget budget, SolverConfig cfg)
    : functions_(std::move(functions)),
      budget_(std::move(budget)),
      cfg_(cfg) {
  cfg_.validate();
  budget_.validate();
  if (functions_.size() != budget_.size()) {
    throw ContractViolation("one utility per budget entry required");
  }
  state_.x = budget_.gamma;
  state_.z = budget_.gamma;
  state_.u.assign(budget_.size(), 0.0);
}

TraceRow AdmmEngine::step() {
  const std::size_t n = functions_.size();
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    state_.x[i] = local_x_update(functions_[i], state_.z[i], state_.u[i], cfg_);
    v[i] = state_.x[i] + state_.u[i];
  }
  const std::vector<double> z_prev = state_.z;
  state_.z = project_onto_feasible(v, budget_, cfg_);
  for (std::size_t i = 0; i < n; ++i) {
    state_.u[i] = dual_u_update(state_.u[i], state_.x[i], state_.z[i]);
  }
  ++state_.iteration;
  last_ = residuals(state_, z_prev, cfg_.rho);
  stepped_ = true;

  TraceRow row;
  row.iteration = static_cast<std::int64_t>(state_.iteration);
  row.z = state_.z;
  row.v = std::move(v);
  return row;
}

void AdmmEngine::set_function(std::size_t i, UtilityFunction f) {
  functions_.at(i) = f;
}

void AdmmEngine::set_functions(std::vector<UtilityFunction> functions) {
  if (functions.size() != functions_.size()) {
    throw ContractViolation("set_functions: device count changed");
  }
  functions_ = std::move(functions);
}

void AdmmEngine::set_budget(ResourceBudget budget) {
  budget.validate();
  if (budget.size() != functions_.size()) {
    throw ContractViolation("set_budget: device count changed");
  }
  budget_ = std::move(budget);
}

void AdmmEngine::add_device(UtilityFunction f, double a, double gamma) {
  ResourceBudget next = budget_;
  next.a.push_back(a);
  next.gamma.push_back(gamma);
  next.validate();
  budget_ = std::move(next);
  functions_.push_back(f);
  state_.x.push_back(gamma);
  state_.z.push_back(gamma);
  state_.u.push_back(0.0);
  stepped_ = false;
}

bool AdmmEngine::converged() const {
  return stepped_ && last_.primal <= cfg_.primal_tol &&
         last_.dual <= cfg_.dual_tol;
}

AdmmResult admm_solve(const std::vector<UtilityFunction>& functions,
                      const ResourceBudget& budget, const SolverConfig& cfg) {
  AdmmEngine engine(functions, budget, cfg);
  AdmmResult result;
  result.trace.devices = functions.size();
  result.trace.budget = budget;
  while (engine.state().iteration < cfg.max_iterations) {
    result.trace.rows.push_back(engine.step());
    if (engine.converged()) break;
  }
  result.x = engine.state().x;
  result.z = engine.state().z;
  result.u = engine.state().u;
  result.iterations = engine.state().iteration;
  result.converged = engine.converged();
  result.residuals = engine.last_residuals();
  return result;
}

double total_utility(const std::vector<UtilityFunction>& functions,
                     const std::vector<double>& x) {
  if (functions.size() != x.size()) {
    throw ContractViolation("total_utility: length mismatch");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    total += eval_utility(functions[i], x[i]);
  }
  return total;
}

}  // namespace freqadmm
